#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "taplab/frame.hpp"

namespace taplab {

enum class SpriteShape { Rectangle, Disk };

/// A rigidly translating sprite. Its top-left corner at frame t >= entry_frame
/// is (x, y) + (vx, vy) * (t - entry_frame), clamped per axis into
/// [min(start, 0), max(start, extent - size)], so a sprite that starts inside
/// the frame stops at the border and one that starts outside can enter.
struct Sprite {
  SpriteShape shape = SpriteShape::Rectangle;
  int class_id = 1;
  int size = 32;
  int x = 0;
  int y = 0;
  int vx = 0;
  int vy = 0;
  int entry_frame = 0;
};

inline constexpr int kMaxSpriteSpeed = 16;

struct SyntheticSceneConfig {
  int width = 256;
  int height = 256;
  int frame_count = 24;
  int num_classes = 5;
  int background_class = 0;
  int noise_amplitude = 10;
  std::uint64_t seed = 0;
  std::vector<Sprite> sprites;

  void validate() const;
};

struct SyntheticSequence {
  std::vector<FrameBuffer> frames;
  std::vector<LabelMap> labels;
};

/// Base RGB colour of a class.
std::array<std::uint8_t, 3> class_color(int class_id);

/// Top-left corner of `sprite` at frame `t`, or nullopt before it enters.
std::optional<std::pair<int, int>> sprite_position(const Sprite& sprite, int t, int width,
                                                   int height);

/// Renders the scene. Later sprites occlude earlier ones. Pixel noise in
/// [-noise_amplitude, noise_amplitude] is keyed on sprite-local coordinates,
/// so texture moves with its sprite.
SyntheticSequence generate_synthetic_sequence(const SyntheticSceneConfig& cfg);

/// The 256x256 scene used for the module and GOP experiments: drifting
/// sprites plus a stream of sprites entering across the borders.
SyntheticSceneConfig standard_scene(std::uint64_t seed, int frame_count = 120);

// ---------------------------------------------------------------------------

struct AccuracyMetrics {
  /// IoU per class; nullopt where the class is absent from both prediction and ground truth.
  std::vector<std::optional<double>> class_iou;
  double miou = 0.0;
  std::vector<std::int64_t> confusion;  // row = ground truth, column = prediction
};

AccuracyMetrics evaluate_miou(std::span<const LabelMap> preds, std::span<const LabelMap> gts,
                              int num_classes);

/// Average frame time for a GOP of length g: T_I / g + (1 - 1/g) * T_P.
double predict_avg_time(int g, double t_i_ms, double t_p_ms);

}  // namespace taplab
