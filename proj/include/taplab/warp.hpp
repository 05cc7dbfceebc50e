#pragma once

#include "taplab/frame.hpp"
#include "taplab/score_map.hpp"

namespace taplab {

/// Per-cell integer displacement in cell units; same convention as MotionField.
struct CellMotionField {
  int width = 0;
  int height = 0;
  std::vector<MotionVector> vectors;

  CellMotionField() = default;
  CellMotionField(int w, int h) : width(w), height(h), vectors(std::size_t(w) * h) {}

  MotionVector& at(int x, int y) { return vectors[std::size_t(y) * width + x]; }
  const MotionVector& at(int x, int y) const { return vectors[std::size_t(y) * width + x]; }

  friend bool operator==(const CellMotionField&, const CellMotionField&) = default;
};

/// Resamples the macroblock field onto the cell grid at stride `ds`. Each cell
/// takes the vector of the macroblock holding its centre pixel, divided by ds
/// and rounded half away from zero.
CellMotionField downscale_motion_field(const MotionField& mv, int ds, int out_w, int out_h);

/// out[p] = prev[clamp(p - cmv[p])], all classes of a cell moved together.
ScoreMap ffw_warp(const ScoreMap& prev, const CellMotionField& cmv);

}  // namespace taplab
