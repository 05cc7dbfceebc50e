#include "taplab/codec.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>
#include <tuple>

namespace taplab {

FrameBuffer FrameBuffer::crop(const Region& r) const {
  if (r.w <= 0 || r.h <= 0 || r.x0 < 0 || r.y0 < 0 || r.x0 + r.w > width || r.y0 + r.h > height) {
    throw std::invalid_argument("crop region outside frame");
  }
  FrameBuffer out(r.w, r.h);
  const std::size_t row_bytes = std::size_t(r.w) * kChannels;
  for (int y = 0; y < r.h; ++y) {
    std::copy_n(pixels.begin() + index(r.x0, r.y0 + y), row_bytes,
                out.pixels.begin() + out.index(0, y));
  }
  return out;
}

namespace {

void check_macroblock_dims(int w, int h) {
  if (w <= 0 || h <= 0 || w % kMacroblock != 0 || h % kMacroblock != 0) {
    throw std::invalid_argument("frame dimensions " + std::to_string(w) + "x" + std::to_string(h) +
                                " are not positive multiples of 16");
  }
}

// Candidate displacements in tie-break order: |dx|+|dy|, then dy, then dx.
struct CandidateList {
  int radius = 0;
  std::vector<MotionVector> order;
  std::vector<int> rank;  // position in `order`, indexed by (dy + r) * (2r + 1) + dx + r

  int rank_of(MotionVector v) const {
    return rank[std::size_t(v.dy + radius) * (2 * radius + 1) + (v.dx + radius)];
  }
};

CandidateList candidates(int radius) {
  CandidateList out;
  out.radius = radius;
  const int side = 2 * radius + 1;
  out.order.reserve(std::size_t(side) * side);
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      out.order.push_back({std::int16_t(dx), std::int16_t(dy)});
    }
  }
  std::sort(out.order.begin(), out.order.end(), [](MotionVector a, MotionVector b) {
    return std::tuple(std::abs(a.dx) + std::abs(a.dy), a.dy, a.dx) <
           std::tuple(std::abs(b.dx) + std::abs(b.dy), b.dy, b.dx);
  });
  out.rank.resize(out.order.size());
  for (std::size_t i = 0; i < out.order.size(); ++i) out.rank[std::size_t(out.order[i].dy + radius) * side + (out.order[i].dx + radius)] = int(i);
  return out;
}

inline int row_sad(const std::uint8_t* a, const std::uint8_t* b) {
  int sum = 0;
  for (int i = 0; i < kMacroblock * kChannels; ++i) {
    sum += std::abs(int(a[i]) - int(b[i]));
  }
  return sum;
}

inline int clamp_coord(int v, int extent) { return std::clamp(v, 0, extent - 1); }

}  // namespace

long block_sad(const FrameBuffer& current, const FrameBuffer& reference, int bx, int by,
               MotionVector v) {
  long sad = 0;
  for (int y = by * kMacroblock; y < (by + 1) * kMacroblock; ++y) {
    for (int x = bx * kMacroblock; x < (bx + 1) * kMacroblock; ++x) {
      const int sx = clamp_coord(x - v.dx, reference.width);
      const int sy = clamp_coord(y - v.dy, reference.height);
      for (int c = 0; c < kChannels; ++c) {
        sad += std::abs(int(current.at(x, y, c)) - int(reference.at(sx, sy, c)));
      }
    }
  }
  return sad;
}

BlockMatch block_match_encode(const FrameBuffer& current, const FrameBuffer& reference,
                              int search_radius) {
  if (current.width != reference.width || current.height != reference.height) {
    throw std::invalid_argument("block_match_encode: frame dimensions differ");
  }
  check_macroblock_dims(current.width, current.height);
  if (search_radius < 0 || search_radius > std::numeric_limits<std::int16_t>::max()) {
    throw std::invalid_argument("block_match_encode: invalid search radius");
  }

  const int gw = current.width / kMacroblock;
  const int gh = current.height / kMacroblock;
  const auto cands = candidates(search_radius);
  const std::size_t stride = std::size_t(current.width) * kChannels;

  MotionField motion(gw, gh);
  for (int by = 0; by < gh; ++by) {
    for (int bx = 0; bx < gw; ++bx) {
      const int x0 = bx * kMacroblock;
      const int y0 = by * kMacroblock;
      const std::uint8_t* cur = current.pixels.data() + current.index(x0, y0);

      auto in_frame = [&](MotionVector v) {
        const int sx = x0 - v.dx;
        const int sy = y0 - v.dy;
        return sx >= 0 && sy >= 0 && sx + kMacroblock <= reference.width &&
               sy + kMacroblock <= reference.height;
      };
      // SAD of `v`, abandoned once it exceeds `bound` (or reaches it, when `strict`).
      auto sad_of = [&](MotionVector v, int bound, bool strict) {
        const std::uint8_t* ref = reference.pixels.data() + reference.index(x0 - v.dx, y0 - v.dy);
        int sad = 0;
        for (int row = 0; row < kMacroblock; ++row) {
          sad += row_sad(cur + row * stride, ref + row * stride);
          if (strict ? sad >= bound : sad > bound) break;
        }
        return sad;
      };

      // Seed the bound with a neighbour's vector; earlier candidates may still tie it.
      int best = std::numeric_limits<int>::max();
      int best_rank = int(cands.order.size());
      MotionVector best_v{};
      for (const MotionVector* seed : {bx > 0 ? &motion.at(bx - 1, by) : nullptr,
                                       by > 0 ? &motion.at(bx, by - 1) : nullptr}) {
        if (!seed || !in_frame(*seed)) continue;
        const int sad = sad_of(*seed, best, false);
        const int r = cands.rank_of(*seed);
        if (sad < best || (sad == best && r < best_rank)) {
          best = sad;
          best_rank = r;
          best_v = *seed;
        }
      }
      const int n = int(cands.order.size());
      for (int i = 0; i < n; ++i) {
        if (i == best_rank) continue;
        // Past the incumbent nothing beats a perfect match.
        if (best == 0 && i > best_rank) break;
        const MotionVector v = cands.order[std::size_t(i)];
        if (!in_frame(v)) continue;
        // Ahead of the incumbent in tie order, an equal SAD wins.
        const bool ahead = i < best_rank;
        const int sad = sad_of(v, best, !ahead);
        if (sad < best || (ahead && sad == best)) {
          best = sad;
          best_rank = i;
          best_v = v;
        }
      }
      motion.at(bx, by) = best_v;
    }
  }

  const FrameBuffer prediction = motion_compensate(reference, motion);
  ResidualMap residual(current.width, current.height);
  for (std::size_t i = 0; i < residual.values.size(); ++i) {
    residual.values[i] = std::int16_t(int(current.pixels[i]) - int(prediction.pixels[i]));
  }
  return {std::move(motion), std::move(residual)};
}

FrameBuffer motion_compensate(const FrameBuffer& reference, const MotionField& mv) {
  if (mv.grid_w * kMacroblock != reference.width || mv.grid_h * kMacroblock != reference.height ||
      mv.vectors.size() != std::size_t(mv.grid_w) * mv.grid_h) {
    throw std::invalid_argument("motion field does not match frame dimensions");
  }
  FrameBuffer out(reference.width, reference.height);
  for (int y = 0; y < reference.height; ++y) {
    for (int x = 0; x < reference.width; ++x) {
      const MotionVector v = mv.at(x / kMacroblock, y / kMacroblock);
      const int sx = clamp_coord(x - v.dx, reference.width);
      const int sy = clamp_coord(y - v.dy, reference.height);
      for (int c = 0; c < kChannels; ++c) out.at(x, y, c) = reference.at(sx, sy, c);
    }
  }
  return out;
}

FrameBuffer motion_compensate_decode(const FrameBuffer& reference, const MotionField& mv,
                                     const ResidualMap& res) {
  if (res.width != reference.width || res.height != reference.height ||
      res.values.size() != reference.pixels.size()) {
    throw std::invalid_argument("residual map does not match frame dimensions");
  }
  FrameBuffer out = motion_compensate(reference, mv);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = std::uint8_t(std::clamp(int(out.pixels[i]) + int(res.values[i]), 0, 255));
  }
  return out;
}

}  // namespace taplab
