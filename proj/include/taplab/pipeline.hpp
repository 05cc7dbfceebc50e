#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "taplab/frame.hpp"
#include "taplab/guidance.hpp"
#include "taplab/segmenter.hpp"
#include "taplab/tapv.hpp"

namespace taplab {

/// Which propagation modules run on P-frames. With ffw off every frame is
/// fully segmented (the per-frame baseline); rgc and rgfs require ffw.
struct ModuleFlags {
  bool ffw = true;
  bool rgc = false;
  bool rgfs = false;

  std::string name() const;
  friend bool operator==(const ModuleFlags&, const ModuleFlags&) = default;
};

struct PipelineConfig {
  ModuleFlags modules;
  /// When > 0, frames at multiples of this index are also fully segmented.
  int gop_override = 0;
  RegionGridConfig region;
  /// Unset: the reference threshold scaled to the stream's frame size.
  std::optional<double> thr_rgfs;
  double alpha = 0.7;
  int ds = 4;
  int num_classes = 0;
  /// Overlaps decode of t+1 and region segmentation with warping; outputs are identical.
  bool parallel = false;
  /// On a backend failure reuse the propagated map instead of aborting.
  bool fallback_on_backend_error = true;

  void validate() const;
};

struct CorrectionEvent {
  std::size_t frame = 0;
  Region region;
};

struct FallbackEvent {
  std::size_t frame = 0;
  std::string reason;
};

struct RunMetrics {
  std::size_t frame_count = 0;
  std::size_t intra_frames = 0;     // I-records and forced GOP boundaries
  std::size_t keyframes = 0;        // P-frames promoted by RGFS
  std::size_t propagated_frames = 0;
  std::vector<double> frame_ms;     // segmentation / propagation, decode excluded
  std::vector<bool> fully_segmented;
  std::vector<double> decode_ms;
  std::vector<std::uint64_t> rgfs_scores;  // 0 for intra frames
  std::vector<CorrectionEvent> corrections;
  std::vector<FallbackEvent> fallbacks;
  double thr_rgfs = 0.0;

  std::optional<std::vector<std::optional<double>>> class_iou;
  std::optional<double> miou;

  double total_ms() const;
  double mean_fps() const;
  /// RGFS-selected share of P-frames, in percent.
  double keyframe_pct() const;
};

struct PipelineResult {
  std::vector<LabelMap> labels;
  RunMetrics metrics;
};

PipelineResult run_pipeline(const TapvStream& stream, const Segmenter& backend,
                            const PipelineConfig& cfg);

/// Adds the accuracy fields of `metrics` from ground truth.
void attach_accuracy(RunMetrics& metrics, const std::vector<LabelMap>& preds,
                     const std::vector<LabelMap>& gts, int num_classes);

struct TimingReport {
  double t_i_ms = 0.0;  // mean over fully segmented frames
  double t_p_ms = 0.0;  // mean over propagated frames
  double measured_avg_ms = 0.0;
  double predicted_avg_ms = 0.0;  // T_I/g + (1 - 1/g) T_P from the measured means
  double mean_decode_ms = 0.0;
  int gop = 1;
};

TimingReport measure_timing(const TapvStream& stream, const Segmenter& backend,
                            const PipelineConfig& cfg);

/// Timing summary of an existing run.
TimingReport timing_from(const RunMetrics& metrics, int gop);

std::string metrics_csv_header();
std::string metrics_csv_row(const PipelineConfig& cfg, const RunMetrics& metrics, int gop);

}  // namespace taplab
