#include "doctest.h"
#include "posegen/checkpoint.hpp"
#include "posegen/error.hpp"
#include "posegen/posecap.hpp"
#include "posegen/synth.hpp"
#include "support.hpp"

using namespace posegen;

namespace {

std::string fixture_doc(double conf_of_wrist) {
  std::string kp;
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    if (j) kp += ", ";
    kp += std::to_string(10 + 10 * j) + ", " + std::to_string(20 + 5 * j) + ", " +
          (j == 4 ? std::to_string(conf_of_wrist) : "0.9");
  }
  return "{\"people\": [{\"pose_keypoints_2d\": [" + kp + "]}]}";
}

}  // namespace

TEST_SUITE("posecap") {

TEST_CASE("jsonl line round trip") {
  PoseCapRecord r;
  r.id = "x1";
  r.caption = "caf\xc3\xa9 \"quoted\"";
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    r.keypoints.push_back({1.5 * j, 200.25 - j});
    r.visibility.push_back(j % 4 ? 1 : 0);
  }
  const auto line = to_jsonl_line(r);
  CHECK(line.find('\n') == std::string::npos);
  CHECK(line.rfind("{\"id\":\"x1\",\"caption\":", 0) == 0);
  CHECK(parse_jsonl_line(line) == r);
  CHECK(to_jsonl_line(parse_jsonl_line(line)) == line);
}

TEST_CASE("jsonl errors name the line") {
  CHECK_THROWS_WITH_AS(parse_jsonl_line("{not json", 7), doctest::Contains("line 7"), DataError);
  CHECK_THROWS_AS(parse_jsonl_line("{\"id\":\"a\"}", 1), DataError);
}

TEST_CASE("sample conversion parks invisible joints at the image center") {
  const auto [pose, vis] = oracle_pose(PoseTemplate{.head = HeadPose::kTurnedLeft});
  PoseSample s;
  s.id = "a";
  s.caption = "c";
  s.pose = pose;
  s.visibility = vis;
  const auto r = to_record(s);
  CHECK(r.keypoints[idx(Joint::kREar)] == std::array<double, 2>{128.0, 128.0});
  CHECK(r.visibility[idx(Joint::kREar)] == 0);
  const auto back = to_sample(r);
  CHECK(back.visibility == s.visibility);
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    CHECK(back.pose[j].x == doctest::Approx(s.pose[j].x).epsilon(1e-12));
    CHECK(back.pose[j].y == doctest::Approx(s.pose[j].y).epsilon(1e-12));
  }
  auto bad = r;
  bad.visibility[0] = 2;
  CHECK_THROWS_AS(to_sample(bad), ValidationError);
}

TEST_CASE("corpus files are byte-stable after one normalization pass") {
  testing::TempDir dir;
  SynthSpec spec;
  spec.n_samples = 200;
  const auto c = generate_corpus(spec);
  save_corpus(dir / "a.jsonl", c.train);
  const auto once = load_corpus(dir / "a.jsonl");
  save_corpus(dir / "b.jsonl", once);
  save_corpus(dir / "c.jsonl", load_corpus(dir / "b.jsonl"));
  CHECK(read_file(dir / "b.jsonl") == read_file(dir / "c.jsonl"));
  CHECK(once.size() == c.train.size());
  CHECK_THROWS_AS(load_corpus(dir / "missing.jsonl"), IoError);
}

TEST_CASE("openpose threshold rule") {
  PoseCapRecord r;
  ImportOptions opt;
  REQUIRE(convert_openpose(fixture_doc(0.0), "id", "cap", opt, r));
  CHECK(r.visibility[4] == 0);
  CHECK(r.keypoints[4] == std::array<double, 2>{128.0, 128.0});
  REQUIRE(convert_openpose(fixture_doc(0.1), "id", "cap", opt, r));
  CHECK(r.visibility[4] == 0);
  REQUIRE(convert_openpose(fixture_doc(0.100001), "id", "cap", opt, r));
  CHECK(r.visibility[4] == 1);
  CHECK(r.keypoints[4] == std::array<double, 2>{50.0, 40.0});

  CHECK_FALSE(convert_openpose("{\"people\": []}", "id", "cap", opt, r));
  CHECK_THROWS_AS(convert_openpose("{\"people\": [{\"pose_keypoints_2d\": [1, 2, 3]}]}", "id",
                                   "cap", opt, r),
                  DataError);
  CHECK_THROWS_AS(convert_openpose("[", "id", "cap", opt, r), DataError);
}

TEST_CASE("openpose fixture directory") {
  const auto res = import_openpose(testing::golden("openpose"),
                                   testing::golden("openpose_captions.json"), {});
  REQUIRE(res.records.size() == 1);
  CHECK(res.skipped_no_people == 1);
  CHECK(res.skipped_no_caption == 1);
  REQUIRE(res.errors.size() == 1);
  CHECK(res.errors[0].file.find("img003") != std::string::npos);

  const auto expected = read_file(testing::golden("openpose_expected.jsonl"));
  CHECK(to_jsonl_line(res.records[0]) + "\n" == expected);
}

}  // TEST_SUITE
