#include "taplab/warp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace taplab {

CellMotionField downscale_motion_field(const MotionField& mv, int ds, int out_w, int out_h) {
  if (ds <= 0 || (ds & (ds - 1)) != 0) {
    throw std::invalid_argument("downscale_motion_field: stride must be a power of two");
  }
  if (out_w * ds != mv.grid_w * kMacroblock || out_h * ds != mv.grid_h * kMacroblock) {
    throw std::invalid_argument("downscale_motion_field: output grid inconsistent with motion field");
  }
  CellMotionField out(out_w, out_h);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const int px = x * ds + ds / 2;
      const int py = y * ds + ds / 2;
      const MotionVector v = mv.at(px / kMacroblock, py / kMacroblock);
      // std::lround rounds halfway cases away from zero.
      out.at(x, y) = {std::int16_t(std::lround(double(v.dx) / ds)),
                      std::int16_t(std::lround(double(v.dy) / ds))};
    }
  }
  return out;
}

ScoreMap ffw_warp(const ScoreMap& prev, const CellMotionField& cmv) {
  if (prev.width != cmv.width || prev.height != cmv.height) {
    throw std::invalid_argument("ffw_warp: motion field and score map dimensions differ");
  }
  ScoreMap out(prev.width, prev.height, prev.classes, prev.stride);
  const std::size_t c = std::size_t(prev.classes);
  for (int y = 0; y < prev.height; ++y) {
    for (int x = 0; x < prev.width; ++x) {
      const MotionVector v = cmv.at(x, y);
      const int sx = std::clamp(x - v.dx, 0, prev.width - 1);
      const int sy = std::clamp(y - v.dy, 0, prev.height - 1);
      std::copy_n(prev.scores.begin() + prev.offset(sx, sy), c, out.scores.begin() + out.offset(x, y));
    }
  }
  return out;
}

}  // namespace taplab
