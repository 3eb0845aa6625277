#include <cmath>
#include <random>

#include "../oracles/oracles.hpp"
#include "doctest.h"
#include "posegen/error.hpp"
#include "posegen/metrics.hpp"

using namespace posegen;

namespace {

struct Set {
  std::vector<Pose> preds, gts;
  std::vector<VisibilityVector> vis;
  EvalSet view(double w = 256, double h = 256) const { return {preds, gts, vis, w, h}; }
};

// Pixel-space helper for 256 x 256.
Keypoint2D px(double x, double y) { return normalize_coords(x, y, 256, 256); }

Set all_visible_exact(std::size_t n) {
  Set s;
  for (std::size_t i = 0; i < n; ++i) {
    Pose p;
    for (std::size_t j = 0; j < kNumJoints; ++j) p[j] = px(40 + 9.0 * j, 30 + 5.0 * j + i);
    p[0] = px(128, 60);
    p[1] = px(128, 80);  // head size 20 px
    s.preds.push_back(p);
    s.gts.push_back(p);
    VisibilityVector v{};
    v.fill(1.0);
    s.vis.push_back(v);
  }
  return s;
}

std::vector<oracle::EvalSample> to_oracle(const Set& s) {
  std::vector<oracle::EvalSample> out;
  for (std::size_t i = 0; i < s.preds.size(); ++i) {
    oracle::EvalSample e{std::vector<double>(36), std::vector<double>(36), std::vector<double>(18)};
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      e.pred[2 * j] = s.preds[i][j].x;
      e.pred[2 * j + 1] = s.preds[i][j].y;
      e.gt[2 * j] = s.gts[i][j].x;
      e.gt[2 * j + 1] = s.gts[i][j].y;
      e.vis[j] = s.vis[i][j];
    }
    out.push_back(e);
  }
  return out;
}

Set random_set(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-0.9, 0.9), noise(-0.15, 0.15);
  Set s;
  const std::size_t n = 1 + gen() % 20;
  for (std::size_t i = 0; i < n; ++i) {
    Pose g, p;
    VisibilityVector v{};
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      g[j] = {u(gen), u(gen)};
      p[j] = {g[j].x + noise(gen), g[j].y + noise(gen)};
      v[j] = gen() % 5 ? 1.0 : 0.0;
    }
    v[2] = 1.0;
    s.gts.push_back(g);
    s.preds.push_back(p);
    s.vis.push_back(v);
  }
  return s;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("pckh examples") {
  auto s = all_visible_exact(1);
  CHECK(pckh(s.view()).value == 1.0);
  // One joint 15 px off with a 20 px head: 17 / 18.
  const auto [x, y] = denormalize_coords(s.preds[0][7], 256, 256);
  s.preds[0][7] = px(x + 9, y + 12);
  CHECK(pckh(s.view()).value == doctest::Approx(17.0 / 18.0).epsilon(1e-12));
  CHECK(pckh(s.view()).head_fallbacks == 0);
}

TEST_CASE("pckh head fallback is flagged") {
  auto s = all_visible_exact(2);
  s.vis[1][0] = 0.0;
  const auto r = pckh(s.view());
  CHECK(r.head_fallbacks == 1);
  CHECK(r.value == 1.0);
  // Fallback is 0.1 x 256 = 25.6 px: a 12 px error passes at alpha 0.5.
  const auto [x, y] = denormalize_coords(s.preds[1][5], 256, 256);
  s.preds[1][5] = px(x + 12, y);
  CHECK(pckh(s.view()).value == 1.0);
  s.preds[1][5] = px(x + 12.9, y);
  CHECK(pckh(s.view()).value < 1.0);
}

TEST_CASE("pck_at examples") {
  Set s;
  Pose g;
  for (std::size_t j = 0; j < kNumJoints; ++j) g[j] = {0.0, -0.5 + 0.0625 * j};
  VisibilityVector v{};
  v.fill(1.0);
  s.gts = {g, g};
  s.preds = {g, g};
  s.vis = {v, v};
  CHECK(pck_at(s.view(), 0.05) == 1.0);
  // 0.1 normalized units is exactly 12.8 px at 256.
  for (auto& p : s.preds) {
    for (auto& k : p.joints) k.x = 0.1;
  }
  CHECK(pck_at(s.view(), 0.05) == 1.0);
  for (auto& p : s.preds) {
    for (auto& k : p.joints) k.x = 13.0 / 128.0;
  }
  CHECK(pck_at(s.view(), 0.05) == 0.0);
  CHECK(pck_at(s.view(), 0.10) == 1.0);
}

TEST_CASE("mpjpe examples") {
  auto s = all_visible_exact(2);
  CHECK(mpjpe(s.view()) == 0.0);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      const auto [x, y] = denormalize_coords(s.gts[i][j], 256, 256);
      s.preds[i][j] = px(x + 3, y + 4);
    }
  }
  CHECK(mpjpe(s.view()) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("visibility_map examples") {
  const std::vector<double> labels{1, 0, 1, 1, 0, 0, 1};
  const std::vector<double> separated{0.9, 0.1, 0.8, 0.7, 0.2, 0.3, 0.95};
  CHECK(visibility_map(separated, labels) == 1.0);
  const std::vector<double> constant(labels.size(), 0.5);
  CHECK(visibility_map(constant, labels) == doctest::Approx(4.0 / 7.0).epsilon(1e-15));
  CHECK_THROWS_WITH_AS(visibility_map(constant, std::vector<double>(7, 1.0)), "AP undefined",
                       DataError);
  CHECK_THROWS_AS(visibility_map(constant, std::vector<double>(7, 0.0)), DataError);
}

TEST_CASE("metrics equal brute-force twins on random sets") {
  std::mt19937_64 gen(42);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_set(gen);
    const auto o = to_oracle(s);
    const double w = trial % 2 ? 256 : 320, h = 256;
    const auto v = s.view(w, h);
    CHECK(std::abs(pckh(v).value - oracle::pckh(o, 0.5, w, h)) <= 1e-9);
    CHECK(std::abs(pck_at(v, 0.05) - oracle::pck(o, 0.05, w, h)) <= 1e-9);
    CHECK(std::abs(pck_at(v, 0.10) - oracle::pck(o, 0.10, w, h)) <= 1e-9);
    CHECK(std::abs(mpjpe(v) - oracle::mpjpe(o, w, h)) <= 1e-9);
    CHECK(pck_at(v, 0.10) >= pck_at(v, 0.05));

    std::vector<double> scores, labels;
    std::uniform_real_distribution<double> u(0, 1);
    for (std::size_t i = 0; i < s.vis.size() * kNumJoints; ++i) {
      // Coarse scores to force ties.
      scores.push_back(std::round(u(gen) * 8) / 8);
      labels.push_back(gen() % 3 ? 1.0 : 0.0);
    }
    labels[0] = 1;
    labels[1] = 0;
    const double ap = visibility_map(scores, labels);
    CHECK(std::abs(ap - oracle::average_precision(scores, labels)) <= 1e-9);
    std::vector<double> warped;
    for (double x : scores) warped.push_back(std::exp(3 * x) - 7);
    CHECK(std::abs(visibility_map(warped, labels) - ap) <= 1e-12);
  }
}

TEST_CASE("mpjpe ignores predictions of invisible joints") {
  std::mt19937_64 gen(9);
  auto s = random_set(gen);
  const double base = mpjpe(s.view());
  const double base_pckh = pckh(s.view()).value;
  for (std::size_t i = 0; i < s.preds.size(); ++i) {
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      if (s.vis[i][j] == 0.0) s.preds[i][j] = {1.4, -1.3};
    }
  }
  CHECK(mpjpe(s.view()) == base);
  CHECK(pckh(s.view()).value == base_pckh);
}

TEST_CASE("eval set checks") {
  Set s = all_visible_exact(2);
  s.preds.pop_back();
  CHECK_THROWS_AS(mpjpe(s.view()), ShapeError);
  s = all_visible_exact(1);
  s.vis[0].fill(0.0);
  CHECK_THROWS_AS(mpjpe(s.view()), ValidationError);
}

TEST_CASE("report JSON keys and round trip") {
  std::mt19937_64 gen(10);
  const auto s = random_set(gen);
  std::vector<std::array<double, kNumJoints>> probs(s.preds.size());
  std::uniform_real_distribution<double> u(0, 1);
  for (auto& p : probs) {
    for (auto& x : p) x = u(gen);
  }
  const auto r = evaluate(s.view(), probs);
  CHECK(r.n_samples == s.preds.size());
  CHECK(r.pckh_05 == pckh(s.view()).value);
  CHECK(r.mpjpe_px == mpjpe(s.view()));
  CHECK(r.pck_005 >= 0.0);
  CHECK(r.pck_010 <= 1.0);
  CHECK(r.vis_map >= 0.0);
  CHECK(r.vis_map <= 1.0);
  const auto text = r.to_json();
  for (const char* key : {"\"pckh_05\"", "\"pck_005\"", "\"pck_010\"", "\"mpjpe_px\"",
                          "\"vis_map\"", "\"n_samples\"", "\"per_joint\"", "\"l_ear\""}) {
    CHECK(text.find(key) != std::string::npos);
  }
  const auto back = EvalReport::from_json(text);
  CHECK(back.to_json() == text);

  auto all = all_visible_exact(2);
  std::vector<std::array<double, kNumJoints>> p2(2);
  const auto degenerate = evaluate(all.view(), p2);
  CHECK(std::isnan(degenerate.vis_map));
  CHECK(degenerate.to_json().find("\"vis_map\": null") != std::string::npos);
}

}  // TEST_SUITE
