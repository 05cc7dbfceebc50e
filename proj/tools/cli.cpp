#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "config_file.hpp"
#include "taplab/bench.hpp"
#include "taplab/error.hpp"
#include "taplab/guidance.hpp"
#include "taplab/image_io.hpp"
#include "taplab/pipeline.hpp"
#include "taplab/segmenter.hpp"
#include "taplab/tapv.hpp"

namespace fs = std::filesystem;

namespace taplab::cli {

namespace {

/// Bad user input; maps to exit code 2.
class InputError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string numbered(const std::string& prefix, std::size_t i, const char* ext) {
  std::ostringstream os;
  os << prefix << std::setw(4) << std::setfill('0') << i << ext;
  return os.str();
}

std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw InputError("no " + ext + " files in " + dir.string());
  return out;
}

TapvStream load_stream(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return read_tapv(in);
}

void save_stream(const fs::path& path, const TapvStream& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  write_tapv(s, out);
}

std::vector<LabelMap> load_labels(const fs::path& dir) {
  std::vector<LabelMap> out;
  for (const auto& p : sorted_files(dir, ".pgm")) out.push_back(read_pgm(p));
  return out;
}

std::vector<PaletteEntry> load_palette(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read palette " + path.string());
  std::vector<PaletteEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int r, g, b, id;
    if (!(ls >> r >> g >> b >> id)) throw InputError("palette line must be 'r g b class': " + line);
    out.push_back({std::uint8_t(r), std::uint8_t(g), std::uint8_t(b), id});
  }
  return out;
}

Sprite parse_sprite(const std::string& spec) {
  // shape,class,size,x,y,vx,vy[,entry]
  std::vector<std::string> f;
  std::stringstream ss(spec);
  for (std::string tok; std::getline(ss, tok, ',');) f.push_back(tok);
  if (f.size() != 7 && f.size() != 8) {
    throw InputError("sprite must be shape,class,size,x,y,vx,vy[,entry]: " + spec);
  }
  Sprite s;
  if (f[0] == "disk") s.shape = SpriteShape::Disk;
  else if (f[0] == "rect" || f[0] == "rectangle") s.shape = SpriteShape::Rectangle;
  else throw InputError("unknown sprite shape " + f[0]);
  try {
    s.class_id = std::stoi(f[1]);
    s.size = std::stoi(f[2]);
    s.x = std::stoi(f[3]);
    s.y = std::stoi(f[4]);
    s.vx = std::stoi(f[5]);
    s.vy = std::stoi(f[6]);
    if (f.size() == 8) s.entry_frame = std::stoi(f[7]);
  } catch (const std::exception&) {
    throw InputError("bad number in sprite " + spec);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Options shared by run / bench / sweep-alpha.

struct RunOptions {
  std::string input;
  std::string backend = "oracle";
  std::string labels;
  double corruption = 0.0;
  std::uint64_t seed = 0;
  std::string palette;
  std::string command;
  int workers = 1;
  int classes = 5;
  int ds = 4;
  bool ffw = false, rgc = false, rgfs = false;
  double alpha = 0.7;
  int gop = 0;
  double thr_rgc = 30.0;
  std::optional<double> thr_rgfs;
  int region = 512;
  int region_h = 0;
  int region_stride = 256;
  bool parallel = false;
  bool no_fallback = false;
  std::string out_dir;
  std::string csv;
};

void add_run_options(CLI::App* app, RunOptions& o, bool with_modules) {
  app->add_option("-i,--input", o.input, "TAPV stream")->required();
  app->add_option("--backend", o.backend, "oracle | color | external")
      ->check(CLI::IsMember({"oracle", "color", "external"}));
  app->add_option("--labels", o.labels, "Directory of ground-truth PGM label maps");
  app->add_option("--corruption", o.corruption, "Oracle corruption rate")->check(CLI::Range(0.0, 1.0));
  app->add_option("--seed", o.seed, "Oracle seed");
  app->add_option("--palette", o.palette, "Colour-rule palette file (r g b class per line)");
  app->add_option("--command", o.command, "External segmenter command");
  app->add_option("--workers", o.workers, "External segmenter process pool size");
  app->add_option("--classes", o.classes, "Number of classes");
  app->add_option("--ds", o.ds, "Score map stride");
  if (with_modules) {
    app->add_flag("--ffw", o.ffw, "Fast feature warping");
    app->add_flag("--rgc", o.rgc, "Residual-guided correction");
    app->add_flag("--rgfs", o.rgfs, "Residual-guided frame selection");
    app->add_option("--alpha", o.alpha, "Correction blend weight")->check(CLI::Range(0.0, 1.0));
  }
  app->add_option("--gop", o.gop, "Also fully segment every N-th frame");
  app->add_option("--thr-rgc", o.thr_rgc, "Per-pixel residual threshold");
  app->add_option("--thr-rgfs", o.thr_rgfs, "Frame residual threshold");
  app->add_option("--region", o.region, "Correction region width (and height unless --region-h)");
  app->add_option("--region-h", o.region_h, "Correction region height");
  app->add_option("--region-stride", o.region_stride, "Candidate region stride");
  app->add_flag("--parallel", o.parallel, "Overlap decode, correction and warping");
  app->add_flag("--no-fallback", o.no_fallback, "Abort on backend failure");
  app->add_option("--out", o.out_dir, "Directory for label dumps");
  app->add_option("--csv", o.csv, "Metrics CSV file");
}

PipelineConfig make_config(const RunOptions& o) {
  PipelineConfig cfg;
  cfg.modules = {o.ffw, o.rgc, o.rgfs};
  if (!o.ffw && (o.rgc || o.rgfs)) throw InputError("--rgc and --rgfs require --ffw");
  cfg.gop_override = o.gop;
  cfg.region = {o.region, o.region_h > 0 ? o.region_h : o.region, o.region_stride, o.thr_rgc};
  cfg.thr_rgfs = o.thr_rgfs;
  cfg.alpha = o.alpha;
  cfg.ds = o.ds;
  cfg.num_classes = o.classes;
  cfg.parallel = o.parallel;
  cfg.fallback_on_backend_error = !o.no_fallback;
  return cfg;
}

struct Backend {
  std::shared_ptr<const std::vector<LabelMap>> labels;
  std::unique_ptr<Segmenter> segmenter;
};

Backend make_backend(const RunOptions& o) {
  Backend b;
  if (!o.labels.empty()) {
    b.labels = std::make_shared<const std::vector<LabelMap>>(load_labels(o.labels));
  }
  if (o.backend == "oracle") {
    if (!b.labels) throw InputError("the oracle backend needs --labels");
    b.segmenter = std::make_unique<OracleSegmenter>(b.labels, o.classes, o.ds,
                                                    OracleConfig{o.corruption, o.seed});
  } else if (o.backend == "color") {
    if (o.palette.empty()) throw InputError("the color backend needs --palette");
    b.segmenter = std::make_unique<ColorRuleSegmenter>(load_palette(o.palette), o.classes, o.ds);
  } else {
    if (o.command.empty()) throw InputError("the external backend needs --command");
    b.segmenter = std::make_unique<ExternalSegmenter>(o.command, o.classes, o.ds, o.workers);
  }
  return b;
}

int effective_gop(const TapvStream& s, const PipelineConfig& cfg) {
  if (!cfg.modules.ffw) return 1;
  const int g = int(s.header.gop_size);
  return cfg.gop_override > 0 ? std::min(g, cfg.gop_override) : g;
}

void write_csv(const std::string& path, const std::vector<std::string>& rows, std::ostream& fallback) {
  if (path.empty()) {
    fallback << metrics_csv_header() << '\n';
    for (const auto& r : rows) fallback << r << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << metrics_csv_header() << '\n';
  for (const auto& r : rows) out << r << '\n';
}

PipelineResult run_once(const TapvStream& stream, const Backend& backend, const PipelineConfig& cfg) {
  auto result = run_pipeline(stream, *backend.segmenter, cfg);
  if (backend.labels) {
    if (backend.labels->size() != result.labels.size()) {
      throw InputError("label directory has " + std::to_string(backend.labels->size()) +
                       " maps for " + std::to_string(result.labels.size()) + " frames");
    }
    attach_accuracy(result.metrics, result.labels, *backend.labels, cfg.num_classes);
  }
  return result;
}

void print_summary(std::ostream& out, const PipelineConfig& cfg, const RunMetrics& m) {
  out << cfg.modules.name() << ": " << m.frame_count << " frames";
  if (m.miou) out << ", mIoU " << std::fixed << std::setprecision(4) << *m.miou;
  out << std::defaultfloat << ", " << std::setprecision(4) << m.mean_fps() << " FPS, keyframes "
      << m.keyframes << " (" << m.keyframe_pct() << "% of P-frames), corrections "
      << m.corrections.size() << '\n';
  for (const auto& f : m.fallbacks) out << "  fallback on frame " << f.frame << ": " << f.reason << '\n';
}

// ---------------------------------------------------------------------------

int cmd_synth(const std::string& out_dir, SyntheticSceneConfig scene, bool standard,
              const std::vector<std::string>& sprite_specs, int gop, int radius, bool dump_frames,
              std::ostream& out) {
  if (standard) {
    const auto custom = scene;
    scene = standard_scene(custom.seed, custom.frame_count);
  }
  for (const auto& s : sprite_specs) scene.sprites.push_back(parse_sprite(s));
  try {
    scene.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  const auto seq = generate_synthetic_sequence(scene);
  const fs::path dir(out_dir);
  fs::create_directories(dir / "labels");
  if (dump_frames) fs::create_directories(dir / "frames");
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    if (dump_frames) write_ppm(dir / "frames" / numbered("frame_", i, ".ppm"), seq.frames[i]);
    write_pgm(dir / "labels" / numbered("label_", i, ".pgm"), seq.labels[i]);
  }
  const auto stream = encode_sequence(seq.frames, gop, radius);
  save_stream(dir / "stream.tapv", stream);

  // Suggested pipeline settings for this corpus.
  const int region = std::max(kMacroblock, std::min(scene.width, scene.height) / 2);
  std::ofstream cfg(dir / "pipeline.cfg");
  cfg << "# taplab run/bench/sweep-alpha settings for this corpus\n"
      << "labels = " << (fs::absolute(dir) / "labels").lexically_normal().string() << '\n'
      << "classes = " << scene.num_classes << '\n'
      << "region = " << region << '\n'
      << "region-stride = " << region / 2 << '\n';

  out << "wrote " << seq.frames.size() << " frames (" << scene.width << "x" << scene.height
      << ", g=" << gop << ") to " << dir.string() << '\n';
  return kExitOk;
}

int cmd_encode(const std::string& input, const std::string& output, int gop, int radius,
               std::ostream& out) {
  std::vector<FrameBuffer> frames;
  for (const auto& p : sorted_files(input, ".ppm")) frames.push_back(read_ppm(p));
  TapvStream stream;
  try {
    stream = encode_sequence(frames, gop, radius);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  save_stream(output, stream);
  out << "encoded " << frames.size() << " frames to " << output << '\n';
  return kExitOk;
}

int cmd_decode(const std::string& input, const std::string& output, std::ostream& out) {
  const auto stream = load_stream(input);
  const auto frames = decode_sequence(stream);
  fs::create_directories(output);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    write_ppm(fs::path(output) / numbered("frame_", i, ".ppm"), frames[i]);
  }
  out << "decoded " << frames.size() << " frames to " << output << '\n';
  return kExitOk;
}

int cmd_run(const RunOptions& o, std::ostream& out) {
  const auto cfg = make_config(o);
  const auto stream = load_stream(o.input);
  const auto backend = make_backend(o);
  const auto result = run_once(stream, backend, cfg);
  if (!o.out_dir.empty()) {
    const fs::path dir = fs::path(o.out_dir) / "labels";
    fs::create_directories(dir);
    for (std::size_t i = 0; i < result.labels.size(); ++i) {
      write_pgm(dir / numbered("label_", i, ".pgm"), result.labels[i]);
    }
  }
  print_summary(out, cfg, result.metrics);
  const auto row = metrics_csv_row(cfg, result.metrics, effective_gop(stream, cfg));
  if (!o.csv.empty()) write_csv(o.csv, {row}, out);
  else if (!o.out_dir.empty()) write_csv((fs::path(o.out_dir) / "metrics.csv").string(), {row}, out);
  return kExitOk;
}

int cmd_bench(RunOptions o, double ti_ms, std::ostream& out) {
  if (!o.ffw && !o.rgc && !o.rgfs) o.ffw = true;
  const auto stream = load_stream(o.input);
  const auto backend = make_backend(o);
  const LatencySegmenter stub(*backend.segmenter,
                              std::chrono::microseconds(std::llround(ti_ms * 1000.0)));
  auto cfg = make_config(o);
  auto base_cfg = cfg;
  base_cfg.modules = {false, false, false};

  const auto base = run_pipeline(stream, stub, base_cfg);
  const auto prop = run_pipeline(stream, stub, cfg);
  const auto tb = timing_from(base.metrics, 1);
  const auto tp = timing_from(prop.metrics, effective_gop(stream, cfg));

  out << std::fixed << std::setprecision(3);
  out << "per-frame: T_avg " << tb.measured_avg_ms << " ms\n";
  out << cfg.modules.name() << ": T_I " << tp.t_i_ms << " ms, T_P " << tp.t_p_ms
      << " ms, measured T_avg " << tp.measured_avg_ms << " ms, predicted " << tp.predicted_avg_ms
      << " ms (g=" << tp.gop << "), decode " << tp.mean_decode_ms << " ms/frame\n";
  out << "speedup " << tb.measured_avg_ms / tp.measured_avg_ms << "x\n" << std::defaultfloat;

  auto base_m = base.metrics;
  auto prop_m = prop.metrics;
  if (backend.labels) {
    attach_accuracy(base_m, base.labels, *backend.labels, cfg.num_classes);
    attach_accuracy(prop_m, prop.labels, *backend.labels, cfg.num_classes);
  }
  if (!o.csv.empty()) {
    write_csv(o.csv, {metrics_csv_row(base_cfg, base_m, 1),
                      metrics_csv_row(cfg, prop_m, effective_gop(stream, cfg))},
              out);
  }
  return kExitOk;
}

int cmd_sweep(RunOptions o, const std::vector<double>& alphas, std::ostream& out) {
  o.ffw = true;
  o.rgc = true;
  const auto stream = load_stream(o.input);
  const auto backend = make_backend(o);
  if (!backend.labels) throw InputError("sweep-alpha needs --labels for mIoU");
  std::vector<std::string> rows;
  double best_alpha = 0.0, best_miou = -1.0;
  for (const double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw InputError("alpha values must lie in [0, 1]");
    o.alpha = a;
    const auto cfg = make_config(o);
    const auto result = run_once(stream, backend, cfg);
    rows.push_back(metrics_csv_row(cfg, result.metrics, effective_gop(stream, cfg)));
    if (*result.metrics.miou > best_miou) {
      best_miou = *result.metrics.miou;
      best_alpha = a;
    }
  }
  write_csv(o.csv, rows, out);
  out << "best_alpha=" << best_alpha << " miou=" << best_miou << '\n';
  return kExitOk;
}

int cmd_calibrate(const std::string& scores_file, const std::vector<std::string>& streams,
                  double fraction, std::ostream& out) {
  std::vector<double> scores;
  if (!scores_file.empty()) {
    std::ifstream in(scores_file);
    if (!in) throw InputError("cannot read " + scores_file);
    std::string tok;
    while (in >> tok) {
      try {
        scores.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw InputError("not a number in score list: " + tok);
      }
    }
  }
  for (const auto& path : streams) {
    for (const auto& rec : load_stream(path).records) {
      if (const auto* p = std::get_if<PRecord>(&rec)) scores.push_back(double(rgfs_score(p->residual)));
    }
  }
  if (scores.empty()) throw InputError("no scores to calibrate on");
  const double thr = calibrate_rgfs_threshold(scores, fraction);
  const auto selected = std::count_if(scores.begin(), scores.end(), [&](double s) { return s > thr; });
  out << std::setprecision(17) << thr << '\n';
  if (!streams.empty() || !scores_file.empty()) {
    out << std::setprecision(6) << "# " << selected << " of " << scores.size() << " frames above threshold\n";
  }
  return kExitOk;
}

}  // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compressed-domain semantic label propagation"};
  app.name("taplab");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labelled corpus and its TAPV stream");
  std::string synth_out;
  SyntheticSceneConfig scene;
  scene.frame_count = 120;
  std::string preset = "standard";
  std::vector<std::string> sprite_specs;
  int synth_gop = 12, synth_radius = kDefaultSearchRadius;
  bool no_frames = false;
  synth->add_option("-o,--out", synth_out, "Output directory")->required();
  synth->add_option("--preset", preset, "standard | custom")->check(CLI::IsMember({"standard", "custom"}));
  synth->add_option("--width", scene.width);
  synth->add_option("--height", scene.height);
  synth->add_option("--frames", scene.frame_count);
  synth->add_option("--classes", scene.num_classes);
  synth->add_option("--background", scene.background_class);
  synth->add_option("--noise", scene.noise_amplitude);
  synth->add_option("--seed", scene.seed);
  synth->add_option("--sprite", sprite_specs, "shape,class,size,x,y,vx,vy[,entry]")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  synth->add_option("--gop", synth_gop)->check(CLI::PositiveNumber);
  synth->add_option("--search-radius", synth_radius)->check(CLI::NonNegativeNumber);
  synth->add_flag("--no-frames", no_frames, "Skip PPM frame dumps");

  // encode / decode
  auto* encode = app.add_subcommand("encode", "Encode a directory of PPM frames into TAPV");
  std::string enc_in, enc_out;
  int enc_gop = 12, enc_radius = kDefaultSearchRadius;
  encode->add_option("-i,--input", enc_in, "PPM directory")->required();
  encode->add_option("-o,--output", enc_out, "TAPV file")->required();
  encode->add_option("--gop", enc_gop)->check(CLI::PositiveNumber);
  encode->add_option("--search-radius", enc_radius)->check(CLI::NonNegativeNumber);

  auto* decode = app.add_subcommand("decode", "Decode a TAPV stream into PPM frames");
  std::string dec_in, dec_out;
  decode->add_option("-i,--input", dec_in, "TAPV file")->required();
  decode->add_option("-o,--output", dec_out, "PPM directory")->required();

  // run / bench / sweep-alpha
  auto* run_cmd = app.add_subcommand("run", "Segment a TAPV stream");
  RunOptions run_opts;
  add_run_options(run_cmd, run_opts, true);

  auto* bench = app.add_subcommand("bench", "Per-frame vs propagated timing with a latency stub");
  RunOptions bench_opts;
  double ti_ms = 30.0;
  add_run_options(bench, bench_opts, true);
  bench->add_option("--ti-ms", ti_ms, "Injected full-frame latency")->check(CLI::NonNegativeNumber);

  auto* sweep = app.add_subcommand("sweep-alpha", "mIoU over a grid of blend weights");
  RunOptions sweep_opts;
  std::vector<double> alphas = {0.0, 0.25, 0.5, 0.75, 1.0};
  add_run_options(sweep, sweep_opts, false);
  sweep->add_flag("--rgfs", sweep_opts.rgfs, "Also enable frame selection");
  sweep->add_option("--alphas", alphas, "Comma-separated blend weights")
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

  auto* calibrate = app.add_subcommand("calibrate", "Frame-selection threshold for a target keyframe share");
  std::string scores_file;
  std::vector<std::string> cal_streams;
  double fraction = 0.10;
  calibrate->add_option("--scores", scores_file, "File of whitespace-separated scores");
  calibrate->add_option("--stream", cal_streams, "TAPV stream(s) to score")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  calibrate->add_option("--fraction", fraction)->check(CLI::Range(0.0, 1.0));

  try {
    args = expand_config(std::move(args));
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }

  try {
    if (*synth) {
      return cmd_synth(synth_out, scene, preset == "standard", sprite_specs, synth_gop, synth_radius,
                       !no_frames, out);
    }
    if (*encode) return cmd_encode(enc_in, enc_out, enc_gop, enc_radius, out);
    if (*decode) return cmd_decode(dec_in, dec_out, out);
    if (*run_cmd) return cmd_run(run_opts, out);
    if (*bench) return cmd_bench(bench_opts, ti_ms, out);
    if (*sweep) return cmd_sweep(sweep_opts, alphas, out);
    if (*calibrate) return cmd_calibrate(scores_file, cal_streams, fraction, out);
  } catch (const BackendError& e) {
    err << "backend failure: " << e.what() << '\n';
    return kExitBackendFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace taplab::cli
