#include "taplab/pipeline.hpp"

#include <chrono>
#include <future>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "taplab/bench.hpp"
#include "taplab/error.hpp"
#include "taplab/warp.hpp"

namespace taplab {

std::string ModuleFlags::name() const {
  if (!ffw) return "per-frame";
  std::string n = "FFW";
  if (rgc) n += "+RGC";
  if (rgfs) n += "+RGFS";
  return n;
}

void PipelineConfig::validate() const {
  if (!modules.ffw && (modules.rgc || modules.rgfs)) {
    throw std::invalid_argument("RGC and RGFS require FFW");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  if (ds <= 0 || ds > kMacroblock || (ds & (ds - 1)) != 0) {
    throw std::invalid_argument("stride must be a power of two no larger than 16");
  }
  if (num_classes < 1) throw std::invalid_argument("num_classes must be >= 1");
  if (gop_override < 0) throw std::invalid_argument("gop override must be >= 0");
  if (thr_rgfs && !(*thr_rgfs >= 0.0)) throw std::invalid_argument("thr_rgfs must be >= 0");
  if (modules.rgc) region.validate();
}

double RunMetrics::total_ms() const { return std::accumulate(frame_ms.begin(), frame_ms.end(), 0.0); }

double RunMetrics::mean_fps() const {
  const double t = total_ms();
  return t > 0.0 ? double(frame_count) / (t / 1000.0) : 0.0;
}

double RunMetrics::keyframe_pct() const {
  const std::size_t p = frame_count - intra_frames;
  return p ? 100.0 * double(keyframes) / double(p) : 0.0;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

PipelineResult run_pipeline(const TapvStream& stream, const Segmenter& backend,
                            const PipelineConfig& cfg) {
  cfg.validate();
  validate(stream);
  if (backend.num_classes() != cfg.num_classes || backend.stride() != cfg.ds) {
    throw std::invalid_argument("backend classes/stride do not match the pipeline configuration");
  }
  const int width = int(stream.header.width);
  const int height = int(stream.header.height);
  if (width % cfg.ds || height % cfg.ds) throw std::invalid_argument("frame not divisible by stride");
  const int cells_w = width / cfg.ds;
  const int cells_h = height / cfg.ds;
  if (cfg.modules.rgc) candidate_regions(width, height, cfg.region);  // size check up front

  const FrameSelectConfig select{cfg.thr_rgfs.value_or(scaled_rgfs_threshold(width, height))};

  PipelineResult result;
  RunMetrics& m = result.metrics;
  const std::size_t n = stream.records.size();
  m.frame_count = n;
  m.thr_rgfs = select.thr_rgfs;
  m.frame_ms.reserve(n);
  m.decode_ms.reserve(n);
  result.labels.reserve(n);

  StreamDecoder decoder(stream);
  std::optional<ScoreMap> previous;
  std::future<FrameBuffer> pending;
  double pending_decode_ms = 0.0;

  auto fallback = [&](std::size_t t, const BackendError& e) -> bool {
    if (!cfg.fallback_on_backend_error || !previous) return false;
    m.fallbacks.push_back({t, e.what()});
    return true;
  };

  for (std::size_t t = 0; t < n; ++t) {
    FrameBuffer frame;
    {
      const auto start = Clock::now();
      if (pending.valid()) {
        frame = pending.get();
        m.decode_ms.push_back(pending_decode_ms);
      } else {
        frame = decoder.decode_next();
        m.decode_ms.push_back(ms_since(start));
      }
    }
    if (cfg.parallel && !decoder.done()) {
      pending = std::async(std::launch::async, [&decoder, &pending_decode_ms] {
        const auto start = Clock::now();
        FrameBuffer f = decoder.decode_next();
        pending_decode_ms = ms_since(start);
        return f;
      });
    }

    const auto start = Clock::now();
    const FrameRecord& rec = stream.records[t];
    const bool intra = is_intra(rec) || !cfg.modules.ffw ||
                       (cfg.gop_override > 0 && t % std::size_t(cfg.gop_override) == 0);
    std::uint64_t score = 0;
    bool full = intra;
    if (intra) {
      ++m.intra_frames;
    } else {
      const auto& pr = std::get<PRecord>(rec);
      score = rgfs_score(pr.residual);
      if (cfg.modules.rgfs && select_keyframe(double(score), select)) {
        full = true;
        ++m.keyframes;
      }
    }

    ScoreMap current;
    bool segmented = false;
    if (full) {
      try {
        current = backend.segment_full(frame, t);
        segmented = true;
      } catch (const BackendError& e) {
        if (!fallback(t, e)) throw;
      }
    }
    if (!segmented) {
      if (is_intra(rec)) {
        current = *previous;  // failed I-frame: keep the last published map
      } else {
        const auto& pr = std::get<PRecord>(rec);
        const auto cmv = downscale_motion_field(pr.motion, cfg.ds, cells_w, cells_h);
        if (cfg.modules.rgc) {
          const Region region =
              align_region(rgc_select(pr.residual, cfg.region), cfg.ds, width, height);
          std::future<ScoreMap> recomputed;
          if (cfg.parallel) {
            recomputed = std::async(std::launch::async, [&backend, &frame, region, t] {
              return backend.segment_region(frame, region, t);
            });
          } else {
            std::promise<ScoreMap> p;
            try {
              p.set_value(backend.segment_region(frame, region, t));
            } catch (...) {
              p.set_exception(std::current_exception());
            }
            recomputed = p.get_future();
          }
          current = ffw_warp(*previous, cmv);
          try {
            current = blend_region(current, recomputed.get(), region, cfg.alpha);
            m.corrections.push_back({t, region});
          } catch (const BackendError& e) {
            if (!fallback(t, e)) throw;
          }
        } else {
          current = ffw_warp(*previous, cmv);
        }
        ++m.propagated_frames;
      }
    }
    if (current.width != cells_w || current.height != cells_h || current.classes != cfg.num_classes) {
      throw BackendError(BackendError::Kind::DimensionMismatch,
                         "score map dimensions do not match the stream on frame " + std::to_string(t),
                         t);
    }
    result.labels.push_back(to_labels(current, width, height));
    previous = std::move(current);

    m.frame_ms.push_back(ms_since(start));
    m.fully_segmented.push_back(segmented);
    m.rgfs_scores.push_back(score);
  }
  return result;
}

void attach_accuracy(RunMetrics& metrics, const std::vector<LabelMap>& preds,
                     const std::vector<LabelMap>& gts, int num_classes) {
  auto acc = evaluate_miou(preds, gts, num_classes);
  metrics.class_iou = std::move(acc.class_iou);
  metrics.miou = acc.miou;
}

TimingReport timing_from(const RunMetrics& m, int gop) {
  TimingReport r;
  r.gop = gop;
  double full_sum = 0.0, prop_sum = 0.0;
  std::size_t full_n = 0, prop_n = 0;
  for (std::size_t i = 0; i < m.frame_ms.size(); ++i) {
    if (m.fully_segmented[i]) {
      full_sum += m.frame_ms[i];
      ++full_n;
    } else {
      prop_sum += m.frame_ms[i];
      ++prop_n;
    }
  }
  r.t_i_ms = full_n ? full_sum / double(full_n) : 0.0;
  r.t_p_ms = prop_n ? prop_sum / double(prop_n) : 0.0;
  r.measured_avg_ms = m.frame_ms.empty() ? 0.0 : m.total_ms() / double(m.frame_ms.size());
  r.predicted_avg_ms = predict_avg_time(gop, r.t_i_ms, r.t_p_ms);
  r.mean_decode_ms = m.decode_ms.empty() ? 0.0
                                         : std::accumulate(m.decode_ms.begin(), m.decode_ms.end(), 0.0) /
                                               double(m.decode_ms.size());
  return r;
}

TimingReport measure_timing(const TapvStream& stream, const Segmenter& backend,
                            const PipelineConfig& cfg) {
  const auto result = run_pipeline(stream, backend, cfg);
  int gop = int(stream.header.gop_size);
  if (cfg.gop_override > 0) gop = std::min(gop, cfg.gop_override);
  if (!cfg.modules.ffw) gop = 1;
  return timing_from(result.metrics, gop);
}

std::string metrics_csv_header() {
  return "modules,gop,alpha,thr_rgc,thr_rgfs,miou,fps,keyframe_pct,frames,keyframes,corrections,"
         "fallbacks";
}

std::string metrics_csv_row(const PipelineConfig& cfg, const RunMetrics& m, int gop) {
  std::ostringstream os;
  os.precision(10);
  os << cfg.modules.name() << ',' << gop << ',' << cfg.alpha << ',' << cfg.region.thr_rgc << ','
     << m.thr_rgfs << ',';
  if (m.miou) os << *m.miou;
  os << ',' << m.mean_fps() << ',' << m.keyframe_pct() << ',' << m.frame_count << ','
     << m.keyframes << ',' << m.corrections.size() << ',' << m.fallbacks.size();
  return os.str();
}

}  // namespace taplab
