#include "taplab/tapv.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <istream>
#include <iterator>
#include <ostream>
#include <stdexcept>
#include <string>

#include "taplab/error.hpp"

namespace taplab {

namespace {

constexpr char kMagic[4] = {'T', 'A', 'P', 'V'};
constexpr std::uint8_t kTypeI = 0;
constexpr std::uint8_t kTypeP = 1;

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    out_.push_back(std::uint8_t(v));
    out_.push_back(std::uint8_t(v >> 8));
  }
  void i16(std::int16_t v) { u16(std::uint16_t(v)); }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out_.push_back(std::uint8_t(v >> s));
  }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void i16s(std::span<const std::int16_t> v) {
    if constexpr (std::endian::native == std::endian::little) {
      const auto* p = reinterpret_cast<const std::uint8_t*>(v.data());
      out_.insert(out_.end(), p, p + v.size_bytes());
    } else {
      for (const auto x : v) i16(x);
    }
  }

 private:
  std::vector<std::uint8_t>& out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  bool has(std::size_t n) const { return in_.size() - pos_ >= n; }
  std::size_t remaining() const { return in_.size() - pos_; }

  std::uint8_t u8() { return in_[pos_++]; }
  std::uint16_t u16() {
    const std::uint16_t v = std::uint16_t(in_[pos_] | (in_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::int16_t i16() { return std::int16_t(u16()); }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::span<const std::uint8_t> bytes(std::size_t n) {
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::string frame_label(std::size_t i) { return "frame " + std::to_string(i); }

void check_record(const TapvHeader& h, const FrameRecord& rec, std::size_t i) {
  const int w = int(h.width);
  const int hh = int(h.height);
  if (const auto* ir = std::get_if<IRecord>(&rec)) {
    if (ir->frame.width != w || ir->frame.height != hh ||
        ir->frame.pixels.size() != std::size_t(w) * hh * kChannels) {
      throw FormatError(FormatError::Kind::Malformed, frame_label(i) + ": I-record shape mismatch", i);
    }
    return;
  }
  const auto& pr = std::get<PRecord>(rec);
  if (pr.motion.grid_w * kMacroblock != w || pr.motion.grid_h * kMacroblock != hh ||
      pr.motion.vectors.size() != std::size_t(pr.motion.grid_w) * pr.motion.grid_h ||
      pr.residual.width != w || pr.residual.height != hh ||
      pr.residual.values.size() != std::size_t(w) * hh * kChannels) {
    throw FormatError(FormatError::Kind::Malformed, frame_label(i) + ": P-record shape mismatch", i);
  }
  const int r = int(h.search_radius);
  for (const auto& v : pr.motion.vectors) {
    if (std::abs(v.dx) > r || std::abs(v.dy) > r) {
      throw FormatError(FormatError::Kind::Malformed,
                        frame_label(i) + ": motion vector exceeds search radius", i);
    }
  }
  for (const auto v : pr.residual.values) {
    if (v < -255 || v > 255) {
      throw FormatError(FormatError::Kind::Malformed, frame_label(i) + ": residual out of range", i);
    }
  }
}

void check_header(const TapvHeader& h) {
  if (h.width == 0 || h.height == 0 || h.width % kMacroblock != 0 || h.height % kMacroblock != 0) {
    throw FormatError(FormatError::Kind::Malformed,
                      "frame dimensions must be positive multiples of 16");
  }
  if (h.gop_size == 0) throw FormatError(FormatError::Kind::Malformed, "gop_size must be >= 1");
  if (h.search_radius > 0x7fff) {
    throw FormatError(FormatError::Kind::Malformed, "search_radius out of range");
  }
}

void check_cadence(const TapvHeader& h, const FrameRecord& rec, std::size_t i) {
  if (i % h.gop_size == 0 && !is_intra(rec)) {
    throw FormatError(FormatError::Kind::GopCadence,
                      frame_label(i) + ": expected an I-record at a GOP boundary", i);
  }
}

}  // namespace

void validate(const TapvStream& stream) {
  check_header(stream.header);
  for (std::size_t i = 0; i < stream.records.size(); ++i) {
    check_cadence(stream.header, stream.records[i], i);
    check_record(stream.header, stream.records[i], i);
  }
}

std::vector<std::uint8_t> serialize_tapv(const TapvStream& stream) {
  validate(stream);
  const auto& h = stream.header;
  std::size_t size = kTapvHeaderBytes;
  for (const auto& rec : stream.records) {
    if (const auto* ir = std::get_if<IRecord>(&rec)) {
      size += 1 + ir->frame.pixels.size();
    } else {
      const auto& pr = std::get<PRecord>(rec);
      size += 1 + 4 * pr.motion.vectors.size() + 2 * pr.residual.values.size();
    }
  }
  std::vector<std::uint8_t> out;
  out.reserve(size);
  ByteWriter w(out);
  for (char c : kMagic) w.u8(std::uint8_t(c));
  w.u16(kTapvVersion);
  w.u16(0);
  w.u32(h.width);
  w.u32(h.height);
  w.u32(h.gop_size);
  w.u32(std::uint32_t(stream.records.size()));
  w.u32(h.search_radius);
  for (const auto& rec : stream.records) {
    if (const auto* ir = std::get_if<IRecord>(&rec)) {
      w.u8(kTypeI);
      w.bytes(ir->frame.pixels);
    } else {
      const auto& pr = std::get<PRecord>(rec);
      w.u8(kTypeP);
      for (const auto& v : pr.motion.vectors) {
        w.i16(v.dx);
        w.i16(v.dy);
      }
      w.i16s(pr.residual.values);
    }
  }
  return out;
}

TapvStream parse_tapv(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (!r.has(4)) throw FormatError(FormatError::Kind::BadMagic, "bad magic: stream too short");
  const auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic),
                  [](std::uint8_t a, char b) { return a == std::uint8_t(b); })) {
    throw FormatError(FormatError::Kind::BadMagic, "bad magic: not a TAPV stream");
  }
  if (!r.has(kTapvHeaderBytes - 4)) {
    throw FormatError(FormatError::Kind::TruncatedRecord, "truncated record: header");
  }
  const std::uint16_t version = r.u16();
  if (version != kTapvVersion) {
    throw FormatError(FormatError::Kind::UnsupportedVersion,
                      "unsupported version " + std::to_string(version));
  }
  r.u16();  // reserved

  TapvStream s;
  s.header.width = r.u32();
  s.header.height = r.u32();
  s.header.gop_size = r.u32();
  const std::uint32_t frame_count = r.u32();
  s.header.search_radius = r.u32();
  check_header(s.header);

  const int w = int(s.header.width);
  const int h = int(s.header.height);
  const std::size_t samples = std::size_t(w) * h * kChannels;
  const int gw = w / kMacroblock;
  const int gh = h / kMacroblock;

  s.records.reserve(frame_count);
  for (std::size_t i = 0; i < frame_count; ++i) {
    if (!r.has(1)) {
      throw FormatError(FormatError::Kind::TruncatedRecord,
                        "truncated record: " + frame_label(i) + " missing", i);
    }
    const std::uint8_t type = r.u8();
    if (type == kTypeI) {
      if (!r.has(samples)) {
        throw FormatError(FormatError::Kind::TruncatedRecord,
                          "truncated record: " + frame_label(i) + " (I)", i);
      }
      IRecord rec{FrameBuffer(w, h)};
      const auto px = r.bytes(samples);
      std::copy(px.begin(), px.end(), rec.frame.pixels.begin());
      s.records.emplace_back(std::move(rec));
    } else if (type == kTypeP) {
      if (!r.has(std::size_t(gw) * gh * 4 + samples * 2)) {
        throw FormatError(FormatError::Kind::TruncatedRecord,
                          "truncated record: " + frame_label(i) + " (P)", i);
      }
      PRecord rec{MotionField(gw, gh), ResidualMap(w, h)};
      for (auto& v : rec.motion.vectors) {
        v.dx = r.i16();
        v.dy = r.i16();
      }
      for (auto& v : rec.residual.values) v = r.i16();
      s.records.emplace_back(std::move(rec));
    } else {
      throw FormatError(FormatError::Kind::Malformed,
                        frame_label(i) + ": unsupported record type " + std::to_string(type), i);
    }
    check_cadence(s.header, s.records.back(), i);
    check_record(s.header, s.records.back(), i);
  }
  if (r.remaining() != 0) {
    throw FormatError(FormatError::Kind::Malformed, "trailing bytes after last frame record");
  }
  return s;
}

std::size_t write_tapv(const TapvStream& stream, std::ostream& sink) {
  const auto bytes = serialize_tapv(stream);
  sink.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!sink) throw std::runtime_error("write_tapv: sink write failed");
  return bytes.size();
}

TapvStream read_tapv(std::istream& source) {
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(source),
                                        std::istreambuf_iterator<char>()};
  return parse_tapv(bytes);
}

TapvStream encode_sequence(std::span<const FrameBuffer> frames, int gop_size, int search_radius) {
  if (frames.empty()) throw std::invalid_argument("encode_sequence: no frames");
  if (gop_size < 1) throw std::invalid_argument("encode_sequence: gop_size must be >= 1");
  TapvStream s;
  s.header.width = std::uint32_t(frames.front().width);
  s.header.height = std::uint32_t(frames.front().height);
  s.header.gop_size = std::uint32_t(gop_size);
  s.header.search_radius = std::uint32_t(search_radius);
  s.records.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (i % std::size_t(gop_size) == 0) {
      if (frames[i].width != frames.front().width || frames[i].height != frames.front().height) {
        throw std::invalid_argument("encode_sequence: frame dimensions differ");
      }
      s.records.emplace_back(IRecord{frames[i]});
    } else {
      auto m = block_match_encode(frames[i], frames[i - 1], search_radius);
      s.records.emplace_back(PRecord{std::move(m.motion), std::move(m.residual)});
    }
  }
  return s;
}

const FrameBuffer& StreamDecoder::decode_next() {
  const auto& rec = stream_->records.at(next_);
  if (const auto* ir = std::get_if<IRecord>(&rec)) {
    current_ = ir->frame;
  } else {
    if (next_ == 0) {
      throw FormatError(FormatError::Kind::GopCadence, "P-record without a reference frame", 0);
    }
    const auto& pr = std::get<PRecord>(rec);
    current_ = motion_compensate_decode(current_, pr.motion, pr.residual);
  }
  ++next_;
  return current_;
}

std::vector<FrameBuffer> decode_sequence(const TapvStream& stream) {
  std::vector<FrameBuffer> out;
  out.reserve(stream.records.size());
  StreamDecoder dec(stream);
  while (!dec.done()) out.push_back(dec.decode_next());
  return out;
}

}  // namespace taplab
