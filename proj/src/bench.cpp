#include "taplab/bench.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>
#include <string>

namespace taplab {

void SyntheticSceneConfig::validate() const {
  if (width <= 0 || height <= 0 || width % kMacroblock || height % kMacroblock) {
    throw std::invalid_argument("scene dimensions must be positive multiples of 16");
  }
  if (frame_count < 1) throw std::invalid_argument("scene needs at least one frame");
  if (num_classes < 2 || num_classes > 256) throw std::invalid_argument("scene needs 2..256 classes");
  if (background_class < 0 || background_class >= num_classes) {
    throw std::invalid_argument("background class out of range");
  }
  if (noise_amplitude < 0 || noise_amplitude > 10) {
    throw std::invalid_argument("noise amplitude must lie in [0, 10]");
  }
  for (std::size_t i = 0; i < sprites.size(); ++i) {
    const auto& s = sprites[i];
    const std::string tag = "sprite " + std::to_string(i) + ": ";
    if (s.size <= 0 || s.size > width || s.size > height) {
      throw std::invalid_argument(tag + "size must be positive and fit inside the frame");
    }
    if (s.class_id < 0 || s.class_id >= num_classes) throw std::invalid_argument(tag + "bad class id");
    if (std::abs(s.vx) > kMaxSpriteSpeed || std::abs(s.vy) > kMaxSpriteSpeed) {
      throw std::invalid_argument(tag + "velocity exceeds 16 px/frame");
    }
    if (s.entry_frame < 0) throw std::invalid_argument(tag + "negative entry frame");
  }
}

std::array<std::uint8_t, 3> class_color(int class_id) {
  static constexpr std::array<std::array<std::uint8_t, 3>, 8> kTable = {{
      {128, 128, 128},
      {200, 40, 40},
      {40, 160, 60},
      {50, 70, 200},
      {220, 200, 40},
      {160, 60, 190},
      {40, 190, 200},
      {230, 130, 30},
  }};
  if (class_id >= 0 && class_id < int(kTable.size())) return kTable[std::size_t(class_id)];
  const auto h = std::uint32_t(class_id) * 2654435761u;
  return {std::uint8_t(40 + (h & 0xff) % 180), std::uint8_t(40 + (h >> 8 & 0xff) % 180),
          std::uint8_t(40 + (h >> 16 & 0xff) % 180)};
}

std::optional<std::pair<int, int>> sprite_position(const Sprite& s, int t, int width, int height) {
  if (t < s.entry_frame) return std::nullopt;
  const int dt = t - s.entry_frame;
  auto axis = [&](int start, int v, int extent) {
    const int lo = std::min(start, 0);
    const int hi = std::max(start, extent - s.size);
    return std::clamp(start + v * dt, lo, hi);
  };
  return std::pair{axis(s.x, s.vx, width), axis(s.y, s.vy, height)};
}

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

int texture_noise(std::uint64_t seed, std::uint64_t layer, int x, int y, int c, int amplitude) {
  if (amplitude == 0) return 0;
  std::uint64_t h = mix(seed ^ mix(layer));
  h = mix(h ^ (std::uint64_t(std::uint32_t(x)) << 32 | std::uint32_t(y)));
  h = mix(h + std::uint64_t(c));
  return int(h % std::uint64_t(2 * amplitude + 1)) - amplitude;
}

bool disk_contains(int size, int lx, int ly) {
  const double r = size / 2.0;
  const double dx = lx + 0.5 - r;
  const double dy = ly + 0.5 - r;
  return dx * dx + dy * dy <= r * r;
}

}  // namespace

SyntheticSequence generate_synthetic_sequence(const SyntheticSceneConfig& cfg) {
  cfg.validate();
  SyntheticSequence seq;
  seq.frames.reserve(std::size_t(cfg.frame_count));
  seq.labels.reserve(std::size_t(cfg.frame_count));

  for (int t = 0; t < cfg.frame_count; ++t) {
    FrameBuffer frame(cfg.width, cfg.height);
    LabelMap labels(cfg.width, cfg.height, std::uint8_t(cfg.background_class));
    const auto bg = class_color(cfg.background_class);
    for (int y = 0; y < cfg.height; ++y) {
      for (int x = 0; x < cfg.width; ++x) {
        for (int c = 0; c < kChannels; ++c) {
          frame.at(x, y, c) = std::uint8_t(std::clamp(
              bg[c] + texture_noise(cfg.seed, 0, x, y, c, cfg.noise_amplitude), 0, 255));
        }
      }
    }
    for (std::size_t i = 0; i < cfg.sprites.size(); ++i) {
      const Sprite& s = cfg.sprites[i];
      const auto pos = sprite_position(s, t, cfg.width, cfg.height);
      if (!pos) continue;
      const auto color = class_color(s.class_id);
      for (int ly = 0; ly < s.size; ++ly) {
        const int y = pos->second + ly;
        if (y < 0 || y >= cfg.height) continue;
        for (int lx = 0; lx < s.size; ++lx) {
          const int x = pos->first + lx;
          if (x < 0 || x >= cfg.width) continue;
          if (s.shape == SpriteShape::Disk && !disk_contains(s.size, lx, ly)) continue;
          labels.at(x, y) = std::uint8_t(s.class_id);
          for (int c = 0; c < kChannels; ++c) {
            frame.at(x, y, c) = std::uint8_t(std::clamp(
                color[c] + texture_noise(cfg.seed, i + 1, lx, ly, c, cfg.noise_amplitude), 0, 255));
          }
        }
      }
    }
    seq.frames.push_back(std::move(frame));
    seq.labels.push_back(std::move(labels));
  }
  return seq;
}

SyntheticSceneConfig standard_scene(std::uint64_t seed, int frame_count) {
  SyntheticSceneConfig cfg;
  cfg.width = 256;
  cfg.height = 256;
  cfg.frame_count = frame_count;
  cfg.num_classes = 5;
  cfg.seed = seed;

  std::mt19937_64 rng(seed);
  auto uniform = [&](int lo, int hi) { return lo + int(rng() % std::uint64_t(hi - lo + 1)); };
  auto nonzero = [&](int lo, int hi) { return (rng() & 1 ? 1 : -1) * uniform(lo, hi); };
  auto shape = [&] { return rng() & 1 ? SpriteShape::Disk : SpriteShape::Rectangle; };

  // Slow drifters inside the frame.
  for (int i = 0; i < 4; ++i) {
    Sprite s;
    s.shape = shape();
    s.class_id = 1 + i % (cfg.num_classes - 1);
    s.size = uniform(32, 64);
    s.x = uniform(0, cfg.width - s.size);
    s.y = uniform(0, cfg.height - s.size);
    s.vx = nonzero(0, 2);
    s.vy = nonzero(0, 2);
    cfg.sprites.push_back(s);
  }

  // Sprites crossing in from a border, spread over the sequence.
  const int entries = std::max(1, frame_count / 8);
  for (int i = 0; i < entries; ++i) {
    Sprite s;
    s.shape = shape();
    s.class_id = uniform(1, cfg.num_classes - 1);
    s.size = uniform(24, 64);
    s.entry_frame = (i * frame_count) / entries + uniform(0, 3);
    const int speed = uniform(3, 8);
    const int drift = nonzero(0, 2);
    switch (uniform(0, 3)) {
      case 0:  // from the left
        s.x = -s.size;
        s.y = uniform(0, cfg.height - s.size);
        s.vx = speed;
        s.vy = drift;
        break;
      case 1:  // from the right
        s.x = cfg.width;
        s.y = uniform(0, cfg.height - s.size);
        s.vx = -speed;
        s.vy = drift;
        break;
      case 2:  // from the top
        s.x = uniform(0, cfg.width - s.size);
        s.y = -s.size;
        s.vx = drift;
        s.vy = speed;
        break;
      default:  // from the bottom
        s.x = uniform(0, cfg.width - s.size);
        s.y = cfg.height;
        s.vx = drift;
        s.vy = -speed;
        break;
    }
    cfg.sprites.push_back(s);
  }
  return cfg;
}

AccuracyMetrics evaluate_miou(std::span<const LabelMap> preds, std::span<const LabelMap> gts,
                              int num_classes) {
  if (preds.size() != gts.size()) throw std::invalid_argument("evaluate_miou: sequence lengths differ");
  if (num_classes < 1) throw std::invalid_argument("evaluate_miou: need at least one class");
  AccuracyMetrics m;
  const auto n = std::size_t(num_classes);
  m.confusion.assign(n * n, 0);
  for (std::size_t f = 0; f < preds.size(); ++f) {
    const auto& p = preds[f];
    const auto& g = gts[f];
    if (p.width != g.width || p.height != g.height || p.ids.size() != g.ids.size()) {
      throw std::invalid_argument("evaluate_miou: shape mismatch at frame " + std::to_string(f));
    }
    for (std::size_t i = 0; i < p.ids.size(); ++i) {
      if (p.ids[i] >= n || g.ids[i] >= n) {
        throw std::invalid_argument("evaluate_miou: label id out of range at frame " +
                                    std::to_string(f));
      }
      ++m.confusion[g.ids[i] * n + p.ids[i]];
    }
  }
  m.class_iou.resize(n);
  double sum = 0.0;
  int counted = 0;
  for (std::size_t c = 0; c < n; ++c) {
    std::int64_t gt_total = 0, pred_total = 0;
    for (std::size_t k = 0; k < n; ++k) {
      gt_total += m.confusion[c * n + k];
      pred_total += m.confusion[k * n + c];
    }
    const std::int64_t tp = m.confusion[c * n + c];
    const std::int64_t uni = gt_total + pred_total - tp;
    if (uni == 0) continue;
    m.class_iou[c] = double(tp) / double(uni);
    sum += *m.class_iou[c];
    ++counted;
  }
  m.miou = counted ? sum / counted : 0.0;
  return m;
}

double predict_avg_time(int g, double t_i_ms, double t_p_ms) {
  if (g < 1) throw std::invalid_argument("predict_avg_time: g must be >= 1");
  if (t_i_ms < 0 || t_p_ms < 0) throw std::invalid_argument("predict_avg_time: negative time");
  return t_i_ms / g + (1.0 - 1.0 / g) * t_p_ms;
}

}  // namespace taplab
