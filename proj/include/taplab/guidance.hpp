#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "taplab/frame.hpp"
#include "taplab/score_map.hpp"

namespace taplab {

// Residual magnitude at a pixel is the channel-summed L1 norm |r| + |g| + |b|.

struct RegionGridConfig {
  int region_w = 512;
  int region_h = 512;
  int stride = 256;
  double thr_rgc = 30.0;

  /// Throws std::invalid_argument when the invariants do not hold.
  void validate() const;
};

inline constexpr double kReferenceRgfsThreshold = 3.6e7;
inline constexpr double kReferenceFramePixels = 1024.0 * 2048.0;

struct FrameSelectConfig {
  double thr_rgfs = kReferenceRgfsThreshold;
};

/// The reference threshold scaled linearly by pixel count.
double scaled_rgfs_threshold(int width, int height);

int residual_magnitude(const ResidualMap& res, int x, int y);

/// Number of pixels in `region` whose magnitude exceeds `thr`.
std::int64_t residual_exceedance_count(const ResidualMap& res, const Region& region, double thr);

/// Candidate regions in row-major scan order; anchors step by `stride` and the
/// last anchor of each axis is clamped so the region stays inside the frame.
std::vector<Region> candidate_regions(int width, int height, const RegionGridConfig& cfg);

/// The candidate with the most exceedances; ties go to the lowest candidate index.
Region rgc_select(const ResidualMap& res, const RegionGridConfig& cfg);

/// Inside `region`: (1 - alpha) * warped + alpha * recomputed; elsewhere warped.
ScoreMap blend_region(const ScoreMap& warped, const ScoreMap& recomputed, const Region& region,
                      double alpha);

/// Sum of |value| over all pixels and channels.
std::uint64_t rgfs_score(const ResidualMap& res);

inline bool select_keyframe(double score, const FrameSelectConfig& cfg) {
  return score > cfg.thr_rgfs;
}

/// Nearest-rank threshold such that the share of scores strictly above it is
/// the largest value not exceeding `target_fraction`.
double calibrate_rgfs_threshold(std::span<const double> scores, double target_fraction);

/// Grows `region` outward to multiples of `ds`, clipped to the frame.
Region align_region(const Region& region, int ds, int width, int height);

}  // namespace taplab
