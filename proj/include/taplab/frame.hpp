#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace taplab {

inline constexpr int kMacroblock = 16;
inline constexpr int kChannels = 3;

/// Axis-aligned pixel rectangle, top-left anchored.
struct Region {
  int x0 = 0;
  int y0 = 0;
  int w = 0;
  int h = 0;

  friend bool operator==(const Region&, const Region&) = default;
};

/// Interleaved RGB24 raster, row-major.
struct FrameBuffer {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  FrameBuffer() = default;
  FrameBuffer(int w, int h) : width(w), height(h), pixels(std::size_t(w) * h * kChannels, 0) {}

  std::size_t index(int x, int y, int c = 0) const {
    return (std::size_t(y) * width + x) * kChannels + c;
  }
  std::uint8_t& at(int x, int y, int c) { return pixels[index(x, y, c)]; }
  std::uint8_t at(int x, int y, int c) const { return pixels[index(x, y, c)]; }

  /// Copy of the pixels inside `r`. Throws std::invalid_argument if `r` leaves the frame.
  FrameBuffer crop(const Region& r) const;

  friend bool operator==(const FrameBuffer&, const FrameBuffer&) = default;
};

struct MotionVector {
  std::int16_t dx = 0;
  std::int16_t dy = 0;

  friend bool operator==(const MotionVector&, const MotionVector&) = default;
};

/// One vector per 16x16 macroblock. Content at pixel p of frame t comes from
/// p - Mv[p] in frame t-1.
struct MotionField {
  int grid_w = 0;
  int grid_h = 0;
  std::vector<MotionVector> vectors;

  MotionField() = default;
  MotionField(int gw, int gh) : grid_w(gw), grid_h(gh), vectors(std::size_t(gw) * gh) {}

  MotionVector& at(int bx, int by) { return vectors[std::size_t(by) * grid_w + bx]; }
  const MotionVector& at(int bx, int by) const { return vectors[std::size_t(by) * grid_w + bx]; }

  friend bool operator==(const MotionField&, const MotionField&) = default;
};

/// Signed per-pixel, per-channel difference `original - prediction`, each value in [-255, 255].
struct ResidualMap {
  int width = 0;
  int height = 0;
  std::vector<std::int16_t> values;

  ResidualMap() = default;
  ResidualMap(int w, int h) : width(w), height(h), values(std::size_t(w) * h * kChannels, 0) {}

  std::size_t index(int x, int y, int c = 0) const {
    return (std::size_t(y) * width + x) * kChannels + c;
  }
  std::int16_t& at(int x, int y, int c) { return values[index(x, y, c)]; }
  std::int16_t at(int x, int y, int c) const { return values[index(x, y, c)]; }

  friend bool operator==(const ResidualMap&, const ResidualMap&) = default;
};

/// Per-pixel class ids at full frame resolution.
struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> ids;

  LabelMap() = default;
  LabelMap(int w, int h, std::uint8_t fill = 0) : width(w), height(h), ids(std::size_t(w) * h, fill) {}

  std::uint8_t& at(int x, int y) { return ids[std::size_t(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return ids[std::size_t(y) * width + x]; }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

}  // namespace taplab
