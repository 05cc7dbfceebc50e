#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "oracles.hpp"
#include "taplab/guidance.hpp"

using namespace taplab;

TEST_CASE("residual_exceedance_count") {
  ResidualMap res(32, 32);
  const Region whole{0, 0, 32, 32};
  CHECK(residual_exceedance_count(res, whole, 30) == 0);

  res.at(5, 6, 0) = 20;
  res.at(5, 6, 1) = -15;  // magnitude 35
  CHECK(residual_exceedance_count(res, whole, 30) == 1);
  CHECK(residual_exceedance_count(res, whole, 40) == 0);
  CHECK(residual_exceedance_count(res, {8, 8, 16, 16}, 30) == 0);

  std::mt19937 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto r = oracle::random_residual(rng, 40, 24, 40);
    const Region region{int(rng() % 20), int(rng() % 10), 1 + int(rng() % 20), 1 + int(rng() % 14)};
    const double thr = double(rng() % 80);
    CHECK(residual_exceedance_count(r, region, thr) == oracle::naive_count(r, region, thr));
  }
  CHECK_THROWS_AS(residual_exceedance_count(res, {20, 20, 16, 16}, 30), std::invalid_argument);
}

TEST_CASE("candidate_regions: stride grid with clamped last anchor, row-major") {
  const RegionGridConfig cfg{32, 32, 16, 30};
  const auto c = candidate_regions(64, 48, cfg);
  // x anchors {0,16,32}, y anchors {0,16}
  REQUIRE(c.size() == 6);
  CHECK(c[0] == Region{0, 0, 32, 32});
  CHECK(c[2] == Region{32, 0, 32, 32});
  CHECK(c[3] == Region{0, 16, 32, 32});

  const auto odd = candidate_regions(72, 32, cfg);  // 0,16,32,40
  REQUIRE(odd.size() == 4);
  CHECK(odd.back().x0 == 40);
  CHECK_THROWS_AS(candidate_regions(16, 64, cfg), std::invalid_argument);
  CHECK_THROWS_AS(candidate_regions(64, 64, RegionGridConfig{32, 32, 64, 30}), std::invalid_argument);
}

TEST_CASE("rgc_select") {
  const RegionGridConfig cfg{32, 32, 16, 30};

  SUBCASE("all-zero residual picks candidate 0") {
    CHECK(rgc_select(ResidualMap(64, 64), cfg) == Region{0, 0, 32, 32});
  }
  SUBCASE("a concentrated patch is covered") {
    ResidualMap res(128, 128);
    for (int y = 70; y < 100; ++y)
      for (int x = 40; x < 70; ++x) res.at(x, y, 2) = 100;
    const RegionGridConfig big{64, 64, 32, 30};
    const auto r = rgc_select(res, big);
    CHECK(r == oracle::exhaustive_rgc(res, big));
    CHECK(residual_exceedance_count(res, r, 30) == 30 * 30);
  }
  SUBCASE("equal-count candidates 3 and 7: lower index wins") {
    // 64x64, anchors {0,16,32} per axis, index = 3*iy + ix. Two 4x4 patches
    // straddling anchor boundaries; per-candidate counts frozen from exhaustive scoring.
    ResidualMap res(64, 64);
    for (const auto [px, py] : {std::pair{14, 30}, std::pair{30, 46}})
      for (int y = py; y < py + 4; ++y)
        for (int x = px; x < px + 4; ++x) res.at(x, y, 0) = 200;
    const auto cands = candidate_regions(64, 64, cfg);
    const std::vector<std::int64_t> expected = {8, 4, 0, 20, 16, 4, 16, 20, 8};
    for (std::size_t i = 0; i < cands.size(); ++i) CHECK(oracle::naive_count(res, cands[i], 30) == expected[i]);
    CHECK(rgc_select(res, cfg) == cands[3]);
    CHECK(rgc_select(res, cfg) == oracle::exhaustive_rgc(res, cfg));
  }
  SUBCASE("frame smaller than region") {
    CHECK_THROWS_AS(rgc_select(ResidualMap(16, 16), cfg), std::invalid_argument);
  }
}

TEST_CASE("rgc_select matches exhaustive scoring on random 64x64 maps") {
  std::mt19937 rng(2);
  const RegionGridConfig cfg{32, 32, 16, 30};
  for (int trial = 0; trial < 50; ++trial) {
    auto res = oracle::random_residual(rng, 64, 64, int(5 + rng() % 40));
    CHECK(rgc_select(res, cfg) == oracle::exhaustive_rgc(res, cfg));
  }
}

TEST_CASE("rgc properties: threshold monotonicity and scale invariance") {
  std::mt19937 rng(3);
  const RegionGridConfig cfg{32, 32, 16, 20};
  for (int trial = 0; trial < 20; ++trial) {
    const auto res = oracle::random_residual(rng, 64, 64, 30);
    const Region r{int(rng() % 32), int(rng() % 32), 32, 32};
    CHECK(residual_exceedance_count(res, r, 25) <= residual_exceedance_count(res, r, 20));

    ResidualMap scaled = res;
    for (auto& v : scaled.values) v = std::int16_t(v * 3);
    RegionGridConfig scaled_cfg = cfg;
    scaled_cfg.thr_rgc = cfg.thr_rgc * 3;
    CHECK(rgc_select(scaled, scaled_cfg) == rgc_select(res, cfg));
  }
}

TEST_CASE("blend_region") {
  ScoreMap warped(4, 4, 2, 4);
  for (std::size_t i = 0; i < warped.scores.size(); ++i) warped.scores[i] = 0.2f + 0.01f * float(i);
  ScoreMap rec(2, 2, 2, 4);
  for (auto& v : rec.scores) v = 0.8f;
  const Region region{4, 8, 8, 8};

  CHECK(blend_region(warped, rec, region, 0.0) == warped);

  const auto one = blend_region(warped, rec, region, 1.0);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      const bool inside = x >= 1 && x < 3 && y >= 2;
      for (int c = 0; c < 2; ++c) CHECK(one.at(x, y, c) == (inside ? 0.8f : warped.at(x, y, c)));
    }
  }

  ScoreMap flat(4, 4, 2, 4);
  std::fill(flat.scores.begin(), flat.scores.end(), 0.2f);
  const auto half = blend_region(flat, rec, region, 0.5);
  CHECK(half.at(1, 2, 0) == doctest::Approx(0.5));
  CHECK(half.at(0, 0, 0) == 0.2f);

  SUBCASE("convexity") {
    std::mt19937 rng(4);
    std::uniform_real_distribution<float> u(-3, 3);
    for (auto& v : warped.scores) v = u(rng);
    for (auto& v : rec.scores) v = u(rng);
    for (double a : {0.1, 0.37, 0.5, 0.9}) {
      const auto out = blend_region(warped, rec, region, a);
      for (int y = 2; y < 4; ++y)
        for (int x = 1; x < 3; ++x)
          for (int c = 0; c < 2; ++c) {
            const float lo = std::min(warped.at(x, y, c), rec.at(x - 1, y - 2, c));
            const float hi = std::max(warped.at(x, y, c), rec.at(x - 1, y - 2, c));
            CHECK(out.at(x, y, c) >= lo - 1e-6f);
            CHECK(out.at(x, y, c) <= hi + 1e-6f);
          }
    }
  }

  CHECK_THROWS_AS(blend_region(warped, rec, {4, 8, 12, 8}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(blend_region(warped, rec, {2, 8, 8, 8}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(blend_region(warped, rec, region, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(blend_region(warped, rec, region, -0.1), std::invalid_argument);
}

TEST_CASE("rgfs_score") {
  ResidualMap res(16, 16);
  CHECK(rgfs_score(res) == 0);
  res.at(3, 4, 0) = 3;
  res.at(3, 4, 1) = -4;
  CHECK(rgfs_score(res) == 7);

  std::mt19937 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto r = oracle::random_residual(rng, 48, 32);
    CHECK(rgfs_score(r) == oracle::naive_abs_sum(r));
    ResidualMap flipped = r;
    for (auto& v : flipped.values) v = std::int16_t(-v);
    CHECK(rgfs_score(flipped) == rgfs_score(r));
    // additivity over a split into top and bottom halves
    ResidualMap top = r, bottom = r;
    std::fill(top.values.begin() + std::ptrdiff_t(top.values.size() / 2), top.values.end(), 0);
    std::fill(bottom.values.begin(), bottom.values.begin() + std::ptrdiff_t(bottom.values.size() / 2), 0);
    CHECK(rgfs_score(top) + rgfs_score(bottom) == rgfs_score(r));
  }
}

TEST_CASE("select_keyframe is a strict comparison") {
  CHECK(select_keyframe(3.7e7, {3.6e7}));
  CHECK_FALSE(select_keyframe(3.6e7, {3.6e7}));
  CHECK_FALSE(select_keyframe(0.0, {1.0}));
  CHECK(scaled_rgfs_threshold(2048, 1024) == 3.6e7);
  CHECK(scaled_rgfs_threshold(256, 256) == doctest::Approx(3.6e7 / 32.0));
}

TEST_CASE("calibrate_rgfs_threshold") {
  std::vector<double> scores;
  for (int i = 1; i <= 100; ++i) scores.push_back(i);
  std::shuffle(scores.begin(), scores.end(), std::mt19937(6));
  CHECK(calibrate_rgfs_threshold(scores, 0.10) == 90.0);
  CHECK(calibrate_rgfs_threshold(scores, 0.0) == 100.0);
  CHECK(calibrate_rgfs_threshold(scores, 1.0) == 0.0);

  // Ties: never select more than the target.
  const std::vector<double> tied = {5, 5, 5, 5, 1, 1, 1, 1, 1, 1};
  const double t = calibrate_rgfs_threshold(tied, 0.2);
  CHECK(std::count_if(tied.begin(), tied.end(), [&](double s) { return s > t; }) == 0);
  CHECK(std::count_if(tied.begin(), tied.end(), [&](double s) { return s > calibrate_rgfs_threshold(tied, 0.4); }) == 4);

  CHECK_THROWS_AS(calibrate_rgfs_threshold({}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(calibrate_rgfs_threshold(scores, 1.5), std::invalid_argument);
}

TEST_CASE("align_region grows outward to the stride") {
  CHECK(align_region({5, 6, 10, 10}, 4, 64, 64) == Region{4, 4, 12, 12});
  CHECK(align_region({8, 8, 16, 16}, 4, 64, 64) == Region{8, 8, 16, 16});
  CHECK(align_region({50, 50, 14, 14}, 8, 64, 64) == Region{48, 48, 16, 16});
}
