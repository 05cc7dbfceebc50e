#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <variant>
#include <vector>

#include "taplab/codec.hpp"
#include "taplab/frame.hpp"

namespace taplab {

// TAPV container, all integers little-endian:
//   "TAPV" u16 version u16 reserved u32 width u32 height u32 gop_size
//   u32 frame_count u32 search_radius
//   per frame: u8 type (0 = I, 1 = P)
//     I: width*height*3 bytes of RGB24
//     P: grid_h*grid_w pairs of i16 (dx, dy), then width*height*3 i16 residuals

inline constexpr std::uint16_t kTapvVersion = 1;
inline constexpr std::size_t kTapvHeaderBytes = 28;

struct TapvHeader {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t gop_size = 12;
  std::uint32_t search_radius = kDefaultSearchRadius;

  friend bool operator==(const TapvHeader&, const TapvHeader&) = default;
};

struct IRecord {
  FrameBuffer frame;
  friend bool operator==(const IRecord&, const IRecord&) = default;
};

struct PRecord {
  MotionField motion;
  ResidualMap residual;
  friend bool operator==(const PRecord&, const PRecord&) = default;
};

using FrameRecord = std::variant<IRecord, PRecord>;

struct TapvStream {
  TapvHeader header;
  std::vector<FrameRecord> records;

  std::size_t frame_count() const { return records.size(); }
  friend bool operator==(const TapvStream&, const TapvStream&) = default;
};

inline bool is_intra(const FrameRecord& r) { return std::holds_alternative<IRecord>(r); }

/// Checks the structural invariants (I at every index = 0 mod g, shapes,
/// vector bounds). Throws FormatError.
void validate(const TapvStream& stream);

/// Returns the number of bytes written.
std::size_t write_tapv(const TapvStream& stream, std::ostream& sink);
TapvStream read_tapv(std::istream& source);

std::vector<std::uint8_t> serialize_tapv(const TapvStream& stream);
TapvStream parse_tapv(std::span<const std::uint8_t> bytes);

/// Encodes a frame sequence: an I-record at every multiple of `gop_size`,
/// block-matched P-records elsewhere.
TapvStream encode_sequence(std::span<const FrameBuffer> frames, int gop_size,
                           int search_radius = kDefaultSearchRadius);

/// Reconstructs every frame of the stream.
std::vector<FrameBuffer> decode_sequence(const TapvStream& stream);

/// Sequential frame reconstruction, one record at a time.
class StreamDecoder {
 public:
  explicit StreamDecoder(const TapvStream& stream) : stream_(&stream) {}

  bool done() const { return next_ >= stream_->records.size(); }
  std::size_t next_index() const { return next_; }
  const FrameBuffer& decode_next();

 private:
  const TapvStream* stream_;
  std::size_t next_ = 0;
  FrameBuffer current_;
};

}  // namespace taplab
