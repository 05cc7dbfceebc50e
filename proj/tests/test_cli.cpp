#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "cli.hpp"
#include "config_file.hpp"
#include "taplab/image_io.hpp"
#include "taplab/tapv.hpp"

namespace fs = std::filesystem;
using namespace taplab;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("taplab_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct Outcome {
  int code;
  std::string out, err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "taplab");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("config files expand to flags that explicit arguments override") {
  TempDir tmp;
  const auto cfg = tmp.path / "a.cfg";
  write_text(cfg, "# comment\n\nthr_rgc = 12.5\nlabels = \"some dir\"\n  alpha=0.3  \n");
  CHECK(cli::config_arguments(cfg) ==
        std::vector<std::string>{"--thr-rgc=12.5", "--labels=some dir", "--alpha=0.3"});

  const auto expanded = cli::expand_config({"taplab", "run", "--alpha", "0.9", "--config", cfg.string()});
  CHECK(expanded == std::vector<std::string>{"taplab", "run", "--thr-rgc=12.5", "--labels=some dir",
                                             "--alpha=0.3", "--alpha", "0.9"});
  CHECK(cli::expand_config({"taplab", "run", "--config=" + cfg.string()}).size() == 5);

  write_text(tmp.path / "bad.cfg", "no equals sign\n");
  CHECK_THROWS(cli::config_arguments(tmp.path / "bad.cfg"));
  CHECK_THROWS(cli::config_arguments(tmp.path / "missing.cfg"));
}

TEST_CASE("synth, encode, decode and run end to end") {
  TempDir tmp;
  const auto corpus = tmp.path / "corpus";
  auto r = invoke({"synth", "-o", corpus.string(), "--preset", "custom", "--width", "64", "--height",
                   "64", "--frames", "8", "--classes", "3", "--gop", "4", "--sprite",
                   "rect,1,16,0,8,4,0", "--sprite", "disk,2,16,40,40,-2,-2,2"});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(corpus / "stream.tapv"));
  CHECK(fs::exists(corpus / "frames" / "frame_0007.ppm"));
  CHECK(fs::exists(corpus / "labels" / "label_0007.pgm"));
  CHECK(read_all(corpus / "pipeline.cfg").find("region = 32") != std::string::npos);

  // Re-encoding the dumped frames reproduces the stream bit for bit.
  r = invoke({"encode", "-i", (corpus / "frames").string(), "-o", (tmp.path / "re.tapv").string(), "--gop", "4"});
  REQUIRE(r.code == 0);
  CHECK(read_all(tmp.path / "re.tapv") == read_all(corpus / "stream.tapv"));

  r = invoke({"decode", "-i", (corpus / "stream.tapv").string(), "-o", (tmp.path / "dec").string()});
  REQUIRE(r.code == 0);
  for (int i = 0; i < 8; ++i) {
    const std::string name = "frame_000" + std::to_string(i) + ".ppm";
    CHECK(read_ppm(tmp.path / "dec" / name) == read_ppm(corpus / "frames" / name));
  }

  const auto out = tmp.path / "run";
  r = invoke({"run", "-i", (corpus / "stream.tapv").string(), "--config", (corpus / "pipeline.cfg").string(),
              "--ffw", "--rgc", "--alpha", "0.5", "--out", out.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("FFW+RGC: 8 frames, mIoU") != std::string::npos);
  CHECK(fs::exists(out / "labels" / "label_0007.pgm"));
  const auto csv = read_all(out / "metrics.csv");
  CHECK(csv.rfind("modules,gop,alpha", 0) == 0);
  CHECK(csv.find("\nFFW+RGC,4,0.5,30,") != std::string::npos);

  SUBCASE("explicit flags beat the config file") {
    write_text(tmp.path / "o.cfg", "alpha = 0.1\nthr-rgc = 7\n");
    r = invoke({"run", "--config", (tmp.path / "o.cfg").string(), "-i", (corpus / "stream.tapv").string(),
                "--labels", (corpus / "labels").string(), "--classes", "3", "--ffw", "--rgc", "--region",
                "32", "--region-stride", "16", "--thr-rgc", "9", "--csv", (tmp.path / "m.csv").string()});
    REQUIRE(r.code == 0);
    CHECK(read_all(tmp.path / "m.csv").find("\nFFW+RGC,4,0.1,9,") != std::string::npos);
  }

  SUBCASE("parallel run dumps identical labels") {
    const auto par = tmp.path / "par";
    r = invoke({"run", "-i", (corpus / "stream.tapv").string(), "--config",
                (corpus / "pipeline.cfg").string(), "--ffw", "--rgc", "--alpha", "0.5", "--parallel",
                "--out", par.string()});
    REQUIRE(r.code == 0);
    for (int i = 0; i < 8; ++i) {
      const std::string name = "label_000" + std::to_string(i) + ".pgm";
      CHECK(read_all(par / "labels" / name) == read_all(out / "labels" / name));
    }
  }

  SUBCASE("sweep-alpha and bench") {
    r = invoke({"sweep-alpha", "-i", (corpus / "stream.tapv").string(), "--config",
                (corpus / "pipeline.cfg").string(), "--alphas", "0,0.5,1"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("best_alpha=") != std::string::npos);
    r = invoke({"bench", "-i", (corpus / "stream.tapv").string(), "--config",
                (corpus / "pipeline.cfg").string(), "--ti-ms", "2"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("speedup") != std::string::npos);
  }

  SUBCASE("backend failure maps to exit code 3 without fallback") {
    const std::string cmd = std::string(TLSC_CONSTANT_PATH) + " --exit 4 --classes 3";
    r = invoke({"run", "-i", (corpus / "stream.tapv").string(), "--backend", "external", "--command", cmd,
                "--classes", "3", "--ffw", "--no-fallback"});
    CHECK(r.code == 3);
    CHECK(r.err.find("backend failure") != std::string::npos);
  }

  SUBCASE("calibrate over a stream") {
    r = invoke({"calibrate", "--stream", (corpus / "stream.tapv").string(), "--fraction", "0.5"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("of 6 frames above threshold") != std::string::npos);
  }
}

TEST_CASE("bad input exits with code 2") {
  TempDir tmp;
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"frobnicate"}).code == 2);
  CHECK(invoke({"run", "-i", (tmp.path / "missing.tapv").string(), "--labels", tmp.path.string()}).code == 2);
  write_text(tmp.path / "junk.tapv", "not a stream at all, certainly not twenty-eight bytes");
  const auto r = invoke({"decode", "-i", (tmp.path / "junk.tapv").string(), "-o", (tmp.path / "d").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("error:") != std::string::npos);
  CHECK(invoke({"run", "-i", "x", "--alpha", "2"}).code == 2);
  CHECK(invoke({"run", "-i", "x", "--config", (tmp.path / "none.cfg").string()}).code == 2);
  CHECK(invoke({"synth", "-o", (tmp.path / "s").string(), "--preset", "custom", "--width", "50"}).code == 2);
  CHECK(invoke({"synth", "-o", (tmp.path / "s").string(), "--sprite", "hexagon,1,2,3,4,5,6"}).code == 2);
}

TEST_CASE("calibrate from a score list") {
  TempDir tmp;
  std::string scores;
  for (int i = 1; i <= 100; ++i) scores += std::to_string(i) + (i % 10 ? " " : "\n");
  write_text(tmp.path / "s.txt", scores);
  auto r = invoke({"calibrate", "--scores", (tmp.path / "s.txt").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("90\n", 0) == 0);
  CHECK(r.out.find("# 10 of 100 frames above threshold") != std::string::npos);

  write_text(tmp.path / "bad.txt", "1 2 three");
  CHECK(invoke({"calibrate", "--scores", (tmp.path / "bad.txt").string()}).code == 2);
  CHECK(invoke({"calibrate"}).code == 2);
}

TEST_CASE("synth from a config file keeps repeated sprite keys") {
  TempDir tmp;
  write_text(tmp.path / "scene.cfg",
             "preset = custom\nwidth = 64\nheight = 32\nframes = 3\nclasses = 4\n"
             "sprite = rect,1,8,0,0,0,0\nsprite = disk,3,8,40,16,0,0\n");
  const auto out = tmp.path / "s";
  REQUIRE(invoke({"synth", "--config", (tmp.path / "scene.cfg").string(), "-o", out.string(), "--no-frames"}).code == 0);
  const auto labels = read_pgm(out / "labels" / "label_0002.pgm");
  CHECK(labels.width == 64);
  CHECK(labels.at(4, 4) == 1);
  CHECK(labels.at(44, 20) == 3);
  CHECK_FALSE(fs::exists(out / "frames"));
}
