#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "taplab/frame.hpp"

namespace taplab {

/// Per-class scores on a cell grid at output stride `stride` (cells are
/// stride x stride pixels). Scores of one cell are contiguous.
struct ScoreMap {
  int width = 0;
  int height = 0;
  int classes = 0;
  int stride = 4;
  std::vector<float> scores;

  ScoreMap() = default;
  ScoreMap(int w, int h, int c, int ds)
      : width(w), height(h), classes(c), stride(ds), scores(std::size_t(w) * h * c, 0.0f) {}

  std::size_t offset(int x, int y) const { return (std::size_t(y) * width + x) * classes; }
  std::span<float> cell(int x, int y) { return {scores.data() + offset(x, y), std::size_t(classes)}; }
  std::span<const float> cell(int x, int y) const {
    return {scores.data() + offset(x, y), std::size_t(classes)};
  }
  float& at(int x, int y, int c) { return scores[offset(x, y) + c]; }
  float at(int x, int y, int c) const { return scores[offset(x, y) + c]; }

  /// Cells covering `region` (pixel coordinates, aligned to stride).
  ScoreMap crop_cells(const Region& region) const;

  friend bool operator==(const ScoreMap&, const ScoreMap&) = default;
};

/// Index of the highest score; ties resolve to the lowest class id.
int argmax(std::span<const float> cell);

/// Per-cell argmax expanded to pixels by nearest neighbour.
LabelMap to_labels(const ScoreMap& scores, int frame_width, int frame_height);

}  // namespace taplab
