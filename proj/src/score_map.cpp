#include "taplab/score_map.hpp"

#include <algorithm>
#include <stdexcept>

namespace taplab {

ScoreMap ScoreMap::crop_cells(const Region& region) const {
  if (region.x0 % stride || region.y0 % stride || region.w % stride || region.h % stride) {
    throw std::invalid_argument("crop_cells: region not aligned to stride");
  }
  const int cx = region.x0 / stride;
  const int cy = region.y0 / stride;
  const int cw = region.w / stride;
  const int ch = region.h / stride;
  if (cx < 0 || cy < 0 || cw <= 0 || ch <= 0 || cx + cw > width || cy + ch > height) {
    throw std::invalid_argument("crop_cells: region outside score map");
  }
  ScoreMap out(cw, ch, classes, stride);
  for (int y = 0; y < ch; ++y) {
    std::copy_n(scores.begin() + offset(cx, cy + y), std::size_t(cw) * classes,
                out.scores.begin() + out.offset(0, y));
  }
  return out;
}

int argmax(std::span<const float> cell) {
  int best = 0;
  for (int c = 1; c < int(cell.size()); ++c) {
    if (cell[c] > cell[best]) best = c;
  }
  return best;
}

LabelMap to_labels(const ScoreMap& scores, int frame_width, int frame_height) {
  if (scores.width * scores.stride != frame_width || scores.height * scores.stride != frame_height) {
    throw std::invalid_argument("to_labels: score map does not cover the frame");
  }
  LabelMap out(frame_width, frame_height);
  for (int y = 0; y < frame_height; ++y) {
    for (int x = 0; x < frame_width; ++x) {
      out.at(x, y) = std::uint8_t(argmax(scores.cell(x / scores.stride, y / scores.stride)));
    }
  }
  return out;
}

}  // namespace taplab
