#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"
#include "posegen/error.hpp"
#include "posegen/checkpoint.hpp"
#include "posegen/posecap.hpp"
#include "posegen/synth.hpp"
#include "support.hpp"

using namespace posegen;

namespace {

std::vector<const std::vector<PoseSample>*> splits(const Corpus& c) {
  return {&c.train, &c.val, &c.test};
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("template indexing is a bijection") {
  std::set<std::size_t> seen;
  for (std::size_t i = 0; i < kNumTemplates; ++i) {
    const auto t = template_at(i);
    CHECK(template_index(t) == i);
    seen.insert(i);
  }
  CHECK(seen.size() == 576);
}

TEST_CASE("canonical pose") {
  const auto [pose, vis] = oracle_pose(PoseTemplate{});
  for (double v : vis) CHECK(v == 1.0);
  // Left/right mirror symmetry of the neutral pose.
  const std::pair<Joint, Joint> mirrored[] = {{Joint::kRShoulder, Joint::kLShoulder},
                                              {Joint::kRWrist, Joint::kLWrist},
                                              {Joint::kRAnkle, Joint::kLAnkle},
                                              {Joint::kREar, Joint::kLEar}};
  for (auto [r, l] : mirrored) {
    CHECK(pose[idx(r)].x == doctest::Approx(-pose[idx(l)].x));
    CHECK(pose[idx(r)].y == doctest::Approx(pose[idx(l)].y));
  }
  CHECK(pose[idx(Joint::kNose)].y < pose[idx(Joint::kNeck)].y);
  CHECK(pose[idx(Joint::kNeck)].y < pose[idx(Joint::kRHip)].y);
  CHECK(pose[idx(Joint::kRHip)].y < pose[idx(Joint::kRAnkle)].y);
  CHECK(oracle_pose(PoseTemplate{}) == oracle_pose(PoseTemplate{}));
}

TEST_CASE("head turns hide the far ear") {
  PoseTemplate t;
  t.head = HeadPose::kTurnedLeft;
  auto [p, v] = oracle_pose(t);
  CHECK(v[idx(Joint::kREar)] == 0.0);
  CHECK(v[idx(Joint::kLEar)] == 1.0);
  CHECK(p[idx(Joint::kREar)] == Keypoint2D{0.0, 0.0});
  t.head = HeadPose::kTurnedRight;
  std::tie(p, v) = oracle_pose(t);
  CHECK(v[idx(Joint::kLEar)] == 0.0);
  CHECK(p[idx(Joint::kLEar)] == Keypoint2D{0.0, 0.0});
}

TEST_CASE("every oracle pose is a valid sample") {
  for (std::size_t i = 0; i < kNumTemplates; ++i) {
    const auto t = template_at(i);
    const auto [p, v] = oracle_pose(t);
    PoseSample s;
    s.id = "t";
    s.caption = caption_of(t, 0);
    s.pose = p;
    s.visibility = v;
    CHECK(validate_sample(s).ok());
  }
}

TEST_CASE("captions") {
  CHECK(caption_of(PoseTemplate{}, 0) == "a person standing still facing forward");
  CHECK(caption_of(PoseTemplate{}, 0) != caption_of(PoseTemplate{}, 1));
  CHECK_THROWS_AS(caption_of(PoseTemplate{}, kMaxParaphrases), ConfigError);

  std::set<std::string> all;
  for (std::size_t i = 0; i < kNumTemplates; ++i) {
    const auto t = template_at(i);
    for (std::size_t v = 0; v < kMaxParaphrases; ++v) {
      const auto c = caption_of(t, v);
      CHECK(all.insert(c).second);
      CHECK(parse_caption(c) == t);
      CHECK(oracle_pose(parse_caption(c)) == oracle_pose(t));
    }
  }
  CHECK_THROWS_AS(parse_caption("a dog chasing its tail"), DataError);
}

TEST_CASE("synth spec validation") {
  SynthSpec s;
  CHECK_NOTHROW(s.validate());
  s.occlusion_rate = 0.6;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = {};
  s.occlusion_rate = 0.5;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = {};
  s.jitter_sigma = -0.1;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = {};
  s.n_samples = 99;
  CHECK_THROWS_AS(generate_corpus(s), ConfigError);
  s = {};
  s.caption_paraphrase_count = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("corpus splits") {
  SynthSpec spec;
  spec.n_samples = 1000;
  const auto c = generate_corpus(spec);
  CHECK(c.train.size() == 800);
  CHECK(c.val.size() == 100);
  CHECK(c.test.size() == 100);
  CHECK(c.train_templates.size() + c.val_templates.size() + c.test_templates.size() == 576);

  std::set<std::size_t> tt(c.train_templates.begin(), c.train_templates.end());
  std::set<std::size_t> vt(c.val_templates.begin(), c.val_templates.end());
  std::set<std::size_t> st(c.test_templates.begin(), c.test_templates.end());
  for (auto i : vt) CHECK_FALSE(tt.count(i));
  for (auto i : st) CHECK_FALSE(tt.count(i));
  for (auto i : st) CHECK_FALSE(vt.count(i));

  const std::set<std::size_t>* owner[] = {&tt, &vt, &st};
  std::set<std::string> captions[3];
  const auto parts = splits(c);
  for (int k = 0; k < 3; ++k) {
    for (const auto& s : *parts[k]) {
      CHECK(owner[k]->count(template_index(parse_caption(s.caption))));
      captions[k].insert(s.caption);
      CHECK(validate_sample(s).ok());
      for (const auto& j : s.pose.joints) {
        CHECK(std::abs(j.x) <= 1.0);
        CHECK(std::abs(j.y) <= 1.0);
      }
    }
  }
  for (const auto& cap : captions[0]) {
    CHECK_FALSE(captions[1].count(cap));
    CHECK_FALSE(captions[2].count(cap));
  }
}

TEST_CASE("small corpora split 80/10/10") {
  SynthSpec spec;
  spec.n_samples = 100;
  const auto c = generate_corpus(spec);
  CHECK(c.train.size() == 80);
  CHECK(c.val.size() == 10);
  CHECK(c.test.size() == 10);
}

TEST_CASE("noise-free corpus reproduces oracle poses") {
  SynthSpec spec;
  spec.n_samples = 300;
  spec.jitter_sigma = 0;
  spec.occlusion_rate = 0;
  const auto c = generate_corpus(spec);
  for (const auto* part : splits(c)) {
    for (const auto& s : *part) {
      const auto [p, v] = oracle_pose(parse_caption(s.caption));
      CHECK(s.pose == p);
      CHECK(s.visibility == v);
    }
  }
}

TEST_CASE("jitter magnitude matches a Rayleigh mean") {
  SynthSpec spec;
  spec.n_samples = 10000;
  spec.occlusion_rate = 0;
  const auto c = generate_corpus(spec);
  double sum = 0;
  std::size_t n = 0;
  for (const auto* part : splits(c)) {
    for (const auto& s : *part) {
      const auto [p, v] = oracle_pose(parse_caption(s.caption));
      for (std::size_t j = 0; j < kNumJoints; ++j) {
        if (v[j] == 0.0) continue;
        sum += std::hypot(s.pose[j].x - p[j].x, s.pose[j].y - p[j].y);
        ++n;
      }
    }
  }
  const double expected = 0.01 * std::sqrt(std::numbers::pi / 2);
  CHECK(std::abs(sum / n - expected) <= 0.05 * expected);
}

TEST_CASE("occlusion rate is respected") {
  SynthSpec spec;
  spec.n_samples = 4000;
  spec.occlusion_rate = 0.2;
  const auto c = generate_corpus(spec);
  double extra = 0, eligible = 0;
  for (const auto* part : splits(c)) {
    for (const auto& s : *part) {
      const auto [p, v] = oracle_pose(parse_caption(s.caption));
      for (std::size_t j = 0; j < kNumJoints; ++j) {
        if (v[j] == 0.0) continue;
        eligible += 1;
        if (s.visibility[j] == 0.0) {
          extra += 1;
          CHECK(s.pose[j] == Keypoint2D{0.0, 0.0});
        }
      }
    }
  }
  CHECK(extra / eligible == doctest::Approx(0.2).epsilon(0.05));
}

TEST_CASE("generation is deterministic down to the bytes") {
  SynthSpec spec;
  spec.n_samples = 500;
  testing::TempDir a, b;
  const auto c1 = generate_corpus(spec), c2 = generate_corpus(spec);
  save_corpus(a / "train.jsonl", c1.train);
  save_corpus(b / "train.jsonl", c2.train);
  CHECK(read_file(a / "train.jsonl") == read_file(b / "train.jsonl"));
  CHECK(c1.test == c2.test);
  spec.seed = 43;
  CHECK_FALSE(generate_corpus(spec).test == c1.test);
}

}  // TEST_SUITE
