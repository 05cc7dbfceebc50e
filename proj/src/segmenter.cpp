#include "taplab/segmenter.hpp"

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "taplab/error.hpp"

extern char** environ;

namespace taplab {

ScoreMap Segmenter::segment_region(const FrameBuffer& frame, const Region& region,
                                   std::size_t frame_index) const {
  const int ds = stride();
  const std::pair<const char*, int> coords[] = {
      {"x0", region.x0}, {"y0", region.y0}, {"w", region.w}, {"h", region.h}};
  for (const auto& [name, value] : coords) {
    if (value % ds != 0) {
      throw std::invalid_argument(std::string("segment_region: ") + name + "=" +
                                  std::to_string(value) + " is not a multiple of stride " +
                                  std::to_string(ds));
    }
  }
  if (region.w <= 0 || region.h <= 0 || region.x0 < 0 || region.y0 < 0 ||
      region.x0 + region.w > frame.width || region.y0 + region.h > frame.height) {
    throw std::invalid_argument("segment_region: region outside frame");
  }
  return segment_region_aligned(frame, region, frame_index);
}

ScoreMap Segmenter::segment_region_aligned(const FrameBuffer& frame, const Region& region,
                                           std::size_t frame_index) const {
  return segment_full(frame.crop(region), frame_index);
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t cell_key(std::uint64_t seed, std::size_t frame, int cx, int cy) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ std::uint64_t(frame));
  h = splitmix64(h ^ (std::uint64_t(std::uint32_t(cx)) << 32 | std::uint32_t(cy)));
  return h;
}

// Oracle scores for the cells [cx0, cx0+cw) x [cy0, cy0+ch) of the full label map.
ScoreMap oracle_cells(const LabelMap& gt, const OracleConfig& cfg, int classes, int ds,
                      std::size_t frame_index, int cx0, int cy0, int cw, int ch) {
  if (!(cfg.corruption_rate >= 0.0 && cfg.corruption_rate <= 1.0)) {
    throw std::invalid_argument("oracle corruption_rate must lie in [0, 1]");
  }
  ScoreMap out(cw, ch, classes, ds);
  std::vector<int> hist(static_cast<std::size_t>(classes));
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      std::fill(hist.begin(), hist.end(), 0);
      const int px0 = (cx0 + x) * ds;
      const int py0 = (cy0 + y) * ds;
      for (int py = py0; py < py0 + ds; ++py) {
        for (int px = px0; px < px0 + ds; ++px) {
          const int id = gt.at(px, py);
          if (id >= classes) {
            throw std::invalid_argument("label id " + std::to_string(id) + " >= class count " +
                                        std::to_string(classes));
          }
          ++hist[id];
        }
      }
      int label = int(std::max_element(hist.begin(), hist.end()) - hist.begin());
      if (classes > 1 && cfg.corruption_rate > 0.0) {
        const std::uint64_t h = cell_key(cfg.seed, frame_index, cx0 + x, cy0 + y);
        const double u = double(h >> 11) * 0x1.0p-53;
        if (u < cfg.corruption_rate) {
          const auto shift = 1 + int(splitmix64(h) % std::uint64_t(classes - 1));
          label = (label + shift) % classes;
        }
      }
      out.at(x, y, label) = 1.0f;
    }
  }
  return out;
}

}  // namespace

ScoreMap oracle_segment_full(const LabelMap& gt, const OracleConfig& cfg, int num_classes, int ds,
                             std::size_t frame_index) {
  if (ds <= 0 || gt.width % ds || gt.height % ds) {
    throw std::invalid_argument("oracle: label map not divisible by stride");
  }
  return oracle_cells(gt, cfg, num_classes, ds, frame_index, 0, 0, gt.width / ds, gt.height / ds);
}

OracleSegmenter::OracleSegmenter(std::shared_ptr<const std::vector<LabelMap>> labels,
                                 int num_classes, int ds, OracleConfig cfg)
    : labels_(std::move(labels)), classes_(num_classes), ds_(ds), cfg_(cfg) {
  if (!labels_) throw std::invalid_argument("oracle: no ground-truth labels");
  if (num_classes < 1 || num_classes > 256) throw std::invalid_argument("oracle: bad class count");
  if (!(cfg.corruption_rate >= 0.0 && cfg.corruption_rate <= 1.0)) {
    throw std::invalid_argument("oracle corruption_rate must lie in [0, 1]");
  }
}

const LabelMap& OracleSegmenter::labels_for(const FrameBuffer& frame,
                                            std::size_t frame_index) const {
  if (frame_index >= labels_->size()) {
    throw std::out_of_range("oracle: no ground truth for frame " + std::to_string(frame_index));
  }
  const LabelMap& gt = (*labels_)[frame_index];
  if (gt.width != frame.width || gt.height != frame.height) {
    throw std::invalid_argument("oracle: ground truth and frame dimensions differ");
  }
  return gt;
}

ScoreMap OracleSegmenter::segment_full(const FrameBuffer& frame, std::size_t frame_index) const {
  return oracle_segment_full(labels_for(frame, frame_index), cfg_, classes_, ds_, frame_index);
}

ScoreMap OracleSegmenter::segment_region_aligned(const FrameBuffer& frame, const Region& region,
                                                 std::size_t frame_index) const {
  const LabelMap& gt = labels_for(frame, frame_index);
  return oracle_cells(gt, cfg_, classes_, ds_, frame_index, region.x0 / ds_, region.y0 / ds_,
                      region.w / ds_, region.h / ds_);
}

// ---------------------------------------------------------------------------

ScoreMap color_rule_segment_full(const FrameBuffer& frame, const std::vector<PaletteEntry>& palette,
                                 int num_classes, int ds) {
  if (palette.empty()) throw std::invalid_argument("color rule: empty palette");
  for (const auto& e : palette) {
    if (e.class_id < 0 || e.class_id >= num_classes) {
      throw std::invalid_argument("color rule: palette class id out of range");
    }
  }
  if (ds <= 0 || frame.width % ds || frame.height % ds) {
    throw std::invalid_argument("color rule: frame not divisible by stride");
  }
  ScoreMap out(frame.width / ds, frame.height / ds, num_classes, ds);
  const double n = double(ds) * ds;
  for (int cy = 0; cy < out.height; ++cy) {
    for (int cx = 0; cx < out.width; ++cx) {
      double mean[kChannels] = {0, 0, 0};
      for (int y = cy * ds; y < (cy + 1) * ds; ++y) {
        for (int x = cx * ds; x < (cx + 1) * ds; ++x) {
          for (int c = 0; c < kChannels; ++c) mean[c] += frame.at(x, y, c);
        }
      }
      for (double& m : mean) m /= n;
      auto cell = out.cell(cx, cy);
      std::fill(cell.begin(), cell.end(), kUnmatchedScore);
      for (const auto& e : palette) {
        const double dr = mean[0] - e.r, dg = mean[1] - e.g, db = mean[2] - e.b;
        const float score = -float(std::sqrt(dr * dr + dg * dg + db * db));
        cell[e.class_id] = std::max(cell[e.class_id], score);
      }
    }
  }
  return out;
}

ColorRuleSegmenter::ColorRuleSegmenter(std::vector<PaletteEntry> palette, int num_classes, int ds)
    : palette_(std::move(palette)), classes_(num_classes), ds_(ds) {
  if (palette_.empty()) throw std::invalid_argument("color rule: empty palette");
}

ScoreMap ColorRuleSegmenter::segment_full(const FrameBuffer& frame, std::size_t) const {
  return color_rule_segment_full(frame, palette_, classes_, ds_);
}

// ---------------------------------------------------------------------------

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(std::uint8_t(v >> s));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[at + i]) << (8 * i);
  return v;
}

bool has_magic(std::span<const std::uint8_t> b, const char* magic) {
  return b.size() >= 4 && std::memcmp(b.data(), magic, 4) == 0;
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return {};
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::vector<std::uint8_t> encode_tlfr(const FrameBuffer& frame) {
  std::vector<std::uint8_t> out{'T', 'L', 'F', 'R'};
  put_u32(out, std::uint32_t(frame.width));
  put_u32(out, std::uint32_t(frame.height));
  out.insert(out.end(), frame.pixels.begin(), frame.pixels.end());
  return out;
}

FrameBuffer decode_tlfr(std::span<const std::uint8_t> bytes) {
  if (!has_magic(bytes, "TLFR")) throw FormatError(FormatError::Kind::BadMagic, "bad TLFR magic");
  if (bytes.size() < 12) throw FormatError(FormatError::Kind::TruncatedRecord, "truncated TLFR header");
  const auto w = get_u32(bytes, 4);
  const auto h = get_u32(bytes, 8);
  if (w == 0 || h == 0 || w > 1u << 15 || h > 1u << 15) {
    throw FormatError(FormatError::Kind::Malformed, "TLFR dimensions out of range");
  }
  FrameBuffer f(static_cast<int>(w), static_cast<int>(h));
  if (bytes.size() != 12 + f.pixels.size()) {
    throw FormatError(FormatError::Kind::TruncatedRecord, "TLFR payload size mismatch");
  }
  std::copy(bytes.begin() + 12, bytes.end(), f.pixels.begin());
  return f;
}

std::vector<std::uint8_t> encode_tlsc(const ScoreMap& scores) {
  std::vector<std::uint8_t> out{'T', 'L', 'S', 'C'};
  put_u32(out, std::uint32_t(scores.width));
  put_u32(out, std::uint32_t(scores.height));
  put_u32(out, std::uint32_t(scores.classes));
  out.reserve(out.size() + scores.scores.size() * 4);
  for (const float v : scores.scores) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
  }
  return out;
}

ScoreMap decode_tlsc(std::span<const std::uint8_t> bytes, int stride) {
  if (!has_magic(bytes, "TLSC")) throw FormatError(FormatError::Kind::BadMagic, "bad TLSC magic");
  if (bytes.size() < 16) throw FormatError(FormatError::Kind::TruncatedRecord, "truncated TLSC header");
  const auto w = get_u32(bytes, 4);
  const auto h = get_u32(bytes, 8);
  const auto c = get_u32(bytes, 12);
  if (w == 0 || h == 0 || c == 0 || w > 1u << 15 || h > 1u << 15 || c > 256) {
    throw FormatError(FormatError::Kind::Malformed, "TLSC dimensions out of range");
  }
  ScoreMap out(static_cast<int>(w), static_cast<int>(h), static_cast<int>(c), stride);
  if (bytes.size() != 16 + out.scores.size() * 4) {
    throw FormatError(FormatError::Kind::TruncatedRecord, "TLSC payload size mismatch");
  }
  for (std::size_t i = 0; i < out.scores.size(); ++i) {
    const std::uint32_t bits = get_u32(bytes, 16 + 4 * i);
    float v;
    std::memcpy(&v, &bits, 4);
    if (!std::isfinite(v)) throw FormatError(FormatError::Kind::Malformed, "TLSC contains non-finite score");
    out.scores[i] = v;
  }
  return out;
}

ExternalSegmenter::ExternalSegmenter(std::string command, int num_classes, int ds, int workers)
    : classes_(num_classes), ds_(ds) {
  std::istringstream iss(command);
  for (std::string tok; iss >> tok;) argv_.push_back(tok);
  if (argv_.empty()) throw std::invalid_argument("external segmenter: empty command");
  if (workers < 1) throw std::invalid_argument("external segmenter: workers must be >= 1");
  slots_ = std::make_unique<std::counting_semaphore<>>(workers);
}

namespace {

struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const char* suffix) {
    std::string templ = (std::filesystem::temp_directory_path() / "taplab-XXXXXX").string() + suffix;
    const int fd = mkstemps(templ.data(), int(std::strlen(suffix)));
    if (fd < 0) throw std::runtime_error("cannot create temporary file");
    close(fd);
    path = templ;
  }
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path, ec);
  }
  TempFile(const TempFile&) = delete;
  TempFile& operator=(const TempFile&) = delete;
};

}  // namespace

ScoreMap ExternalSegmenter::segment_full(const FrameBuffer& frame, std::size_t frame_index) const {
  slots_->acquire();
  struct Release {
    std::counting_semaphore<>* s;
    ~Release() { s->release(); }
  } release{slots_.get()};

  TempFile input(".tlfr");
  TempFile output(".tlsc");
  {
    const auto bytes = encode_tlfr(frame);
    std::ofstream out(input.path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  }

  std::vector<std::string> args = argv_;
  args.push_back(input.path.string());
  args.push_back(output.path.string());
  std::vector<char*> cargv;
  for (auto& a : args) cargv.push_back(a.data());
  cargv.push_back(nullptr);

  pid_t pid = 0;
  if (posix_spawnp(&pid, cargv[0], nullptr, nullptr, cargv.data(), environ) != 0) {
    throw BackendError(BackendError::Kind::ProcessFailure,
                       "process failure: cannot launch '" + argv_[0] + "' for frame " +
                           std::to_string(frame_index),
                       frame_index, 127);
  }
  int status = 0;
  while (waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) break;
  }
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  if (code != 0) {
    throw BackendError(BackendError::Kind::ProcessFailure,
                       "process failure: exit code " + std::to_string(code) + " on frame " +
                           std::to_string(frame_index),
                       frame_index, code);
  }

  ScoreMap scores;
  try {
    scores = decode_tlsc(slurp(output.path), ds_);
  } catch (const FormatError& e) {
    throw BackendError(BackendError::Kind::MalformedScores,
                       std::string("malformed TLSC on frame ") + std::to_string(frame_index) + ": " +
                           e.what(),
                       frame_index);
  }
  if (scores.width * ds_ != frame.width || scores.height * ds_ != frame.height ||
      scores.classes != classes_) {
    throw BackendError(BackendError::Kind::DimensionMismatch,
                       "dimension mismatch on frame " + std::to_string(frame_index) + ": got " +
                           std::to_string(scores.width) + "x" + std::to_string(scores.height) + "x" +
                           std::to_string(scores.classes),
                       frame_index);
  }
  return scores;
}

// ---------------------------------------------------------------------------

LatencySegmenter::LatencySegmenter(const Segmenter& inner, std::chrono::microseconds full_latency)
    : inner_(&inner), latency_(full_latency) {}

ScoreMap LatencySegmenter::segment_full(const FrameBuffer& frame, std::size_t frame_index) const {
  const auto deadline = std::chrono::steady_clock::now() + latency_;
  auto out = inner_->segment_full(frame, frame_index);
  std::this_thread::sleep_until(deadline);
  return out;
}

ScoreMap LatencySegmenter::segment_region_aligned(const FrameBuffer& frame, const Region& region,
                                                  std::size_t frame_index) const {
  const double share = double(region.w) * region.h / (double(frame.width) * frame.height);
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::microseconds(std::llround(double(latency_.count()) * share));
  auto out = inner_->segment_region(frame, region, frame_index);
  std::this_thread::sleep_until(deadline);
  return out;
}

}  // namespace taplab
