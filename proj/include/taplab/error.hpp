#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace taplab {

/// Malformed or inconsistent container / wire-format bytes.
class FormatError : public std::runtime_error {
 public:
  enum class Kind { BadMagic, UnsupportedVersion, TruncatedRecord, GopCadence, Malformed };

  FormatError(Kind kind, const std::string& what, std::optional<std::size_t> frame = std::nullopt)
      : std::runtime_error(what), kind_(kind), frame_(frame) {}

  Kind kind() const noexcept { return kind_; }
  std::optional<std::size_t> frame_index() const noexcept { return frame_; }

 private:
  Kind kind_;
  std::optional<std::size_t> frame_;
};

/// A segmentation backend failed to produce a usable score map for a frame.
class BackendError : public std::runtime_error {
 public:
  enum class Kind { ProcessFailure, MalformedScores, DimensionMismatch };

  BackendError(Kind kind, const std::string& what, std::size_t frame, int exit_code = 0)
      : std::runtime_error(what), kind_(kind), frame_(frame), exit_code_(exit_code) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t frame_index() const noexcept { return frame_; }
  int exit_code() const noexcept { return exit_code_; }

 private:
  Kind kind_;
  std::size_t frame_;
  int exit_code_;
};

}  // namespace taplab
