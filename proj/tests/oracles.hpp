#pragma once

// Brute-force reference implementations. These deliberately avoid the
// library's fast paths (candidate ordering, early exit, summed-area tables,
// block copies) so they can check them.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include "taplab/frame.hpp"
#include "taplab/guidance.hpp"
#include "taplab/score_map.hpp"
#include "taplab/warp.hpp"

namespace oracle {

using namespace taplab;

inline long sad_at(const FrameBuffer& cur, const FrameBuffer& ref, int bx, int by, int dx, int dy) {
  long s = 0;
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      for (int c = 0; c < 3; ++c) {
        s += std::abs(int(cur.at(bx * 16 + x, by * 16 + y, c)) -
                      int(ref.at(bx * 16 + x - dx, by * 16 + y - dy, c)));
      }
    }
  }
  return s;
}

/// Minimum SAD over every in-frame displacement within the radius.
inline long min_sad(const FrameBuffer& cur, const FrameBuffer& ref, int bx, int by, int radius) {
  long best = std::numeric_limits<long>::max();
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const int sx = bx * 16 - dx, sy = by * 16 - dy;
      if (sx < 0 || sy < 0 || sx + 16 > ref.width || sy + 16 > ref.height) continue;
      best = std::min(best, sad_at(cur, ref, bx, by, dx, dy));
    }
  }
  return best;
}

/// First minimiser in (|dx|+|dy|, dy, dx) order, by scoring every displacement.
inline MotionVector best_vector(const FrameBuffer& cur, const FrameBuffer& ref, int bx, int by, int radius) {
  long best = std::numeric_limits<long>::max();
  MotionVector out{};
  auto key = [](int dx, int dy) { return std::tuple(std::abs(dx) + std::abs(dy), dy, dx); };
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const int sx = bx * 16 - dx, sy = by * 16 - dy;
      if (sx < 0 || sy < 0 || sx + 16 > ref.width || sy + 16 > ref.height) continue;
      const long s = sad_at(cur, ref, bx, by, dx, dy);
      if (s < best || (s == best && key(dx, dy) < key(out.dx, out.dy))) {
        best = s;
        out = {std::int16_t(dx), std::int16_t(dy)};
      }
    }
  }
  return out;
}

inline ScoreMap naive_gather(const ScoreMap& prev, const CellMotionField& cmv) {
  ScoreMap out(prev.width, prev.height, prev.classes, prev.stride);
  for (int y = 0; y < prev.height; ++y) {
    for (int x = 0; x < prev.width; ++x) {
      int sx = x - cmv.at(x, y).dx;
      int sy = y - cmv.at(x, y).dy;
      if (sx < 0) sx = 0;
      if (sy < 0) sy = 0;
      if (sx >= prev.width) sx = prev.width - 1;
      if (sy >= prev.height) sy = prev.height - 1;
      for (int c = 0; c < prev.classes; ++c) out.at(x, y, c) = prev.at(sx, sy, c);
    }
  }
  return out;
}

inline std::int64_t naive_count(const ResidualMap& res, const Region& r, double thr) {
  std::int64_t n = 0;
  for (int y = r.y0; y < r.y0 + r.h; ++y) {
    for (int x = r.x0; x < r.x0 + r.w; ++x) {
      const int m = std::abs(res.at(x, y, 0)) + std::abs(res.at(x, y, 1)) + std::abs(res.at(x, y, 2));
      if (m > thr) ++n;
    }
  }
  return n;
}

/// Exhaustive scoring of every candidate anchor; returns the first maximum.
inline Region exhaustive_rgc(const ResidualMap& res, const RegionGridConfig& cfg) {
  std::vector<int> ys, xs;
  for (int a = 0;; a += cfg.stride) {
    ys.push_back(std::min(a, res.height - cfg.region_h));
    if (a + cfg.region_h >= res.height) break;
  }
  for (int a = 0;; a += cfg.stride) {
    xs.push_back(std::min(a, res.width - cfg.region_w));
    if (a + cfg.region_w >= res.width) break;
  }
  Region best{};
  std::int64_t best_n = -1;
  for (int y : ys) {
    for (int x : xs) {
      const Region r{x, y, cfg.region_w, cfg.region_h};
      const auto n = naive_count(res, r, cfg.thr_rgc);
      if (n > best_n) {
        best_n = n;
        best = r;
      }
    }
  }
  return best;
}

inline std::uint64_t naive_abs_sum(const ResidualMap& res) {
  std::uint64_t s = 0;
  for (int y = 0; y < res.height; ++y)
    for (int x = 0; x < res.width; ++x)
      for (int c = 0; c < 3; ++c) s += std::uint64_t(std::abs(int(res.at(x, y, c))));
  return s;
}

/// IoU per class via explicit pixel sets.
inline double set_miou(const std::vector<LabelMap>& preds, const std::vector<LabelMap>& gts, int classes) {
  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c < classes; ++c) {
    std::set<std::pair<std::size_t, std::size_t>> p, g;
    for (std::size_t f = 0; f < preds.size(); ++f) {
      for (std::size_t i = 0; i < preds[f].ids.size(); ++i) {
        if (preds[f].ids[i] == c) p.insert({f, i});
        if (gts[f].ids[i] == c) g.insert({f, i});
      }
    }
    std::size_t inter = 0;
    for (const auto& e : p) inter += g.count(e);
    const std::size_t uni = p.size() + g.size() - inter;
    if (uni == 0) continue;
    sum += double(inter) / double(uni);
    ++counted;
  }
  return counted ? sum / counted : 0.0;
}

inline FrameBuffer random_frame(std::mt19937& rng, int w, int h) {
  FrameBuffer f(w, h);
  for (auto& p : f.pixels) p = std::uint8_t(rng() & 0xff);
  return f;
}

inline ResidualMap random_residual(std::mt19937& rng, int w, int h, int amplitude = 255) {
  ResidualMap r(w, h);
  for (auto& v : r.values) v = std::int16_t(int(rng() % (2 * amplitude + 1)) - amplitude);
  return r;
}

}  // namespace oracle
