#include "taplab/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace taplab {

void RegionGridConfig::validate() const {
  if (region_w <= 0 || region_h <= 0) throw std::invalid_argument("region size must be positive");
  if (stride <= 0 || stride > std::min(region_w, region_h)) {
    throw std::invalid_argument("region stride must be in [1, min(region_w, region_h)]");
  }
  if (!(thr_rgc >= 0.0)) throw std::invalid_argument("thr_rgc must be >= 0");
}

double scaled_rgfs_threshold(int width, int height) {
  return kReferenceRgfsThreshold * (double(width) * height / kReferenceFramePixels);
}

int residual_magnitude(const ResidualMap& res, int x, int y) {
  const std::size_t i = res.index(x, y);
  return std::abs(res.values[i]) + std::abs(res.values[i + 1]) + std::abs(res.values[i + 2]);
}

namespace {

void check_inside(const ResidualMap& res, const Region& r) {
  if (r.w <= 0 || r.h <= 0 || r.x0 < 0 || r.y0 < 0 || r.x0 + r.w > res.width ||
      r.y0 + r.h > res.height) {
    throw std::invalid_argument("region (" + std::to_string(r.x0) + "," + std::to_string(r.y0) +
                                "," + std::to_string(r.w) + "x" + std::to_string(r.h) +
                                ") out of bounds");
  }
}

std::vector<int> anchors(int extent, int size, int stride) {
  std::vector<int> out;
  for (int a = 0;; a += stride) {
    if (a + size >= extent) {
      out.push_back(extent - size);
      break;
    }
    out.push_back(a);
  }
  return out;
}

}  // namespace

std::int64_t residual_exceedance_count(const ResidualMap& res, const Region& region, double thr) {
  check_inside(res, region);
  std::int64_t n = 0;
  for (int y = region.y0; y < region.y0 + region.h; ++y) {
    for (int x = region.x0; x < region.x0 + region.w; ++x) {
      n += residual_magnitude(res, x, y) > thr;
    }
  }
  return n;
}

std::vector<Region> candidate_regions(int width, int height, const RegionGridConfig& cfg) {
  cfg.validate();
  if (width < cfg.region_w || height < cfg.region_h) {
    throw std::invalid_argument("frame " + std::to_string(width) + "x" + std::to_string(height) +
                                " is smaller than the correction region");
  }
  std::vector<Region> out;
  const auto xs = anchors(width, cfg.region_w, cfg.stride);
  for (const int y : anchors(height, cfg.region_h, cfg.stride)) {
    for (const int x : xs) out.push_back({x, y, cfg.region_w, cfg.region_h});
  }
  return out;
}

Region rgc_select(const ResidualMap& res, const RegionGridConfig& cfg) {
  const auto cands = candidate_regions(res.width, res.height, cfg);

  // Summed-area table of the exceedance indicator.
  const int w = res.width;
  const std::size_t sw = std::size_t(w) + 1;
  std::vector<std::int64_t> sat(sw * (std::size_t(res.height) + 1), 0);
  for (int y = 0; y < res.height; ++y) {
    std::int64_t row = 0;
    for (int x = 0; x < w; ++x) {
      row += residual_magnitude(res, x, y) > cfg.thr_rgc;
      sat[(y + 1) * sw + x + 1] = sat[y * sw + x + 1] + row;
    }
  }
  auto count = [&](const Region& r) {
    const std::size_t x1 = r.x0, y1 = r.y0, x2 = r.x0 + r.w, y2 = r.y0 + r.h;
    return sat[y2 * sw + x2] - sat[y1 * sw + x2] - sat[y2 * sw + x1] + sat[y1 * sw + x1];
  };

  std::size_t best = 0;
  std::int64_t best_count = count(cands[0]);
  for (std::size_t i = 1; i < cands.size(); ++i) {
    const auto n = count(cands[i]);
    if (n > best_count) {
      best_count = n;
      best = i;
    }
  }
  return cands[best];
}

ScoreMap blend_region(const ScoreMap& warped, const ScoreMap& recomputed, const Region& region,
                      double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  const int ds = warped.stride;
  if (region.x0 % ds || region.y0 % ds || region.w % ds || region.h % ds ||
      recomputed.width != region.w / ds || recomputed.height != region.h / ds ||
      recomputed.classes != warped.classes || recomputed.stride != ds) {
    throw std::invalid_argument("blend_region: recomputed map does not match the region footprint");
  }
  const int cx = region.x0 / ds;
  const int cy = region.y0 / ds;
  if (cx < 0 || cy < 0 || cx + recomputed.width > warped.width ||
      cy + recomputed.height > warped.height) {
    throw std::invalid_argument("blend_region: region outside score map");
  }
  ScoreMap out = warped;
  const float a = float(alpha);
  const float b = 1.0f - a;
  for (int y = 0; y < recomputed.height; ++y) {
    for (int x = 0; x < recomputed.width; ++x) {
      auto dst = out.cell(cx + x, cy + y);
      const auto src = recomputed.cell(x, y);
      for (std::size_t c = 0; c < dst.size(); ++c) {
        // Endpoints are exact copies so alpha = 0 / 1 reproduce their input bit-for-bit.
        dst[c] = alpha == 0.0 ? dst[c] : alpha == 1.0 ? src[c] : b * dst[c] + a * src[c];
      }
    }
  }
  return out;
}

std::uint64_t rgfs_score(const ResidualMap& res) {
  std::uint64_t sum = 0;
  for (const auto v : res.values) sum += std::uint64_t(std::abs(int(v)));
  return sum;
}

double calibrate_rgfs_threshold(std::span<const double> scores, double target_fraction) {
  if (scores.empty()) throw std::invalid_argument("calibrate_rgfs_threshold: empty score list");
  if (!(target_fraction >= 0.0 && target_fraction <= 1.0)) {
    throw std::invalid_argument("calibrate_rgfs_threshold: fraction must lie in [0, 1]");
  }
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const auto selected =
      std::min(n, std::size_t(std::floor(target_fraction * double(n) + 1e-9)));
  if (selected == n) return sorted.front() - 1.0;
  return sorted[n - selected - 1];
}

Region align_region(const Region& region, int ds, int width, int height) {
  const int x0 = (region.x0 / ds) * ds;
  const int y0 = (region.y0 / ds) * ds;
  const int x1 = std::min(width, ((region.x0 + region.w + ds - 1) / ds) * ds);
  const int y1 = std::min(height, ((region.y0 + region.h + ds - 1) / ds) * ds);
  return {x0, y0, x1 - x0, y1 - y0};
}

}  // namespace taplab
