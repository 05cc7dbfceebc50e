#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <semaphore>
#include <string>
#include <vector>

#include "taplab/frame.hpp"
#include "taplab/score_map.hpp"

namespace taplab {

/// Per-frame segmenter. Implementations must be deterministic and safe to
/// call concurrently on distinct frames.
class Segmenter {
 public:
  virtual ~Segmenter() = default;

  virtual int num_classes() const = 0;
  virtual int stride() const = 0;

  /// Score map of the whole frame, dims = frame dims / stride.
  virtual ScoreMap segment_full(const FrameBuffer& frame, std::size_t frame_index) const = 0;

  /// Score map of the cells under `region`. The region must be aligned to
  /// stride(); throws std::invalid_argument naming the offending coordinate otherwise.
  ScoreMap segment_region(const FrameBuffer& frame, const Region& region,
                          std::size_t frame_index) const;

 protected:
  /// Default: segment_full on the cropped pixels.
  virtual ScoreMap segment_region_aligned(const FrameBuffer& frame, const Region& region,
                                          std::size_t frame_index) const;
};

// ---------------------------------------------------------------------------
// Ground-truth oracle

struct OracleConfig {
  double corruption_rate = 0.0;
  std::uint64_t seed = 0;
};

/// One-hot of the majority label per cell (ties to the lowest id). With
/// probability `corruption_rate` a cell instead gets a one-hot of a uniformly
/// drawn other class. The draw is keyed on (seed, frame_index, absolute cell),
/// so region requests see the same corruption as the full frame.
ScoreMap oracle_segment_full(const LabelMap& gt, const OracleConfig& cfg, int num_classes, int ds,
                             std::size_t frame_index);

class OracleSegmenter final : public Segmenter {
 public:
  OracleSegmenter(std::shared_ptr<const std::vector<LabelMap>> labels, int num_classes, int ds,
                  OracleConfig cfg);

  int num_classes() const override { return classes_; }
  int stride() const override { return ds_; }
  ScoreMap segment_full(const FrameBuffer& frame, std::size_t frame_index) const override;

 protected:
  ScoreMap segment_region_aligned(const FrameBuffer& frame, const Region& region,
                                  std::size_t frame_index) const override;

 private:
  const LabelMap& labels_for(const FrameBuffer& frame, std::size_t frame_index) const;

  std::shared_ptr<const std::vector<LabelMap>> labels_;
  int classes_;
  int ds_;
  OracleConfig cfg_;
};

// ---------------------------------------------------------------------------
// Color rule

struct PaletteEntry {
  std::uint8_t r = 0, g = 0, b = 0;
  int class_id = 0;
};

/// Score of class k is the negated Euclidean distance from the cell's mean
/// colour to the nearest palette centre of class k. Classes without a centre
/// score kUnmatchedScore.
ScoreMap color_rule_segment_full(const FrameBuffer& frame, const std::vector<PaletteEntry>& palette,
                                 int num_classes, int ds);

inline constexpr float kUnmatchedScore = -1000.0f;

class ColorRuleSegmenter final : public Segmenter {
 public:
  ColorRuleSegmenter(std::vector<PaletteEntry> palette, int num_classes, int ds);

  int num_classes() const override { return classes_; }
  int stride() const override { return ds_; }
  ScoreMap segment_full(const FrameBuffer& frame, std::size_t frame_index) const override;

 private:
  std::vector<PaletteEntry> palette_;
  int classes_;
  int ds_;
};

// ---------------------------------------------------------------------------
// External process
//
// TLFR: "TLFR" u32 width u32 height, RGB24
// TLSC: "TLSC" u32 width_s u32 height_s u32 C, then width_s*height_s*C f32,
//       the C scores of a cell contiguous, cells row-major. Little-endian.

std::vector<std::uint8_t> encode_tlfr(const FrameBuffer& frame);
FrameBuffer decode_tlfr(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_tlsc(const ScoreMap& scores);
/// Throws FormatError on malformed input. `stride` is attached to the result.
ScoreMap decode_tlsc(std::span<const std::uint8_t> bytes, int stride);

class ExternalSegmenter final : public Segmenter {
 public:
  /// `command` is split on whitespace (no shell); the input TLFR path and the
  /// output TLSC path are appended as the final two arguments.
  ExternalSegmenter(std::string command, int num_classes, int ds, int workers = 1);

  int num_classes() const override { return classes_; }
  int stride() const override { return ds_; }
  ScoreMap segment_full(const FrameBuffer& frame, std::size_t frame_index) const override;

 private:
  std::vector<std::string> argv_;
  int classes_;
  int ds_;
  std::unique_ptr<std::counting_semaphore<>> slots_;
};

// ---------------------------------------------------------------------------
// Latency injection

/// Pads every full-frame call to at least `full_latency` and every region
/// call to `full_latency` scaled by the region's share of the frame area.
class LatencySegmenter final : public Segmenter {
 public:
  LatencySegmenter(const Segmenter& inner, std::chrono::microseconds full_latency);

  int num_classes() const override { return inner_->num_classes(); }
  int stride() const override { return inner_->stride(); }
  ScoreMap segment_full(const FrameBuffer& frame, std::size_t frame_index) const override;

 protected:
  ScoreMap segment_region_aligned(const FrameBuffer& frame, const Region& region,
                                  std::size_t frame_index) const override;

 private:
  const Segmenter* inner_;
  std::chrono::microseconds latency_;
};

}  // namespace taplab
