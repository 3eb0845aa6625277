#include "posegen/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <string_view>

#include "json.hpp"

#include "posegen/error.hpp"
#include "posegen/rng.hpp"

namespace posegen {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Limb lengths and anchors in normalized units.
constexpr double kUpperArm = 0.20;
constexpr double kForearm = 0.18;
constexpr double kThigh = 0.25;
constexpr double kShin = 0.25;
constexpr Keypoint2D kNeck{0.0, -0.45};
constexpr Keypoint2D kHipCenter{0.0, 0.05};
constexpr double kShoulderHalf = 0.16;
constexpr double kShoulderDrop = 0.02;
constexpr double kHipHalf = 0.09;
constexpr double kFaceShift = 0.04;

// side: -1 for the subject's right (image left), +1 for the left.
Keypoint2D step(Keypoint2D from, double side, double deg_from_down, double len) {
  return {from.x + side * len * std::sin(deg_from_down * kDeg),
          from.y + len * std::cos(deg_from_down * kDeg)};
}

struct ArmAngles {
  double upper, fore;
};

ArmAngles arm_angles(ArmPose a) {
  switch (a) {
    case ArmPose::kDown: return {12.0, 8.0};
    case ArmPose::kRaised: return {165.0, 175.0};
    case ArmPose::kExtended: return {90.0, 90.0};
    case ArmPose::kOnHip: return {50.0, -30.0};
  }
  return {0.0, 0.0};
}

void place_arm(Pose& p, double side, ArmPose a, Joint sho, Joint elb, Joint wri) {
  const ArmAngles ang = arm_angles(a);
  p[idx(sho)] = {kNeck.x + side * kShoulderHalf, kNeck.y + kShoulderDrop};
  p[idx(elb)] = step(p[idx(sho)], side, ang.upper, kUpperArm);
  p[idx(wri)] = step(p[idx(elb)], side, ang.fore, kForearm);
}

void place_leg(Pose& p, double side, Stance s, Joint hip, Joint knee, Joint ank) {
  p[idx(hip)] = {kHipCenter.x + side * kHipHalf, kHipCenter.y};
  const Keypoint2D h = p[idx(hip)];
  switch (s) {
    case Stance::kStanding:
      p[idx(knee)] = step(h, side, 4.0, kThigh);
      p[idx(ank)] = step(p[idx(knee)], side, 0.0, kShin);
      break;
    case Stance::kSitting:
      // Thighs point at the camera and appear short.
      p[idx(knee)] = {h.x + side * 0.14, h.y + 0.07};
      p[idx(ank)] = {p[idx(knee)].x + side * 0.02, p[idx(knee)].y + 0.24};
      break;
    case Stance::kWalking: {
      const bool right = side < 0;
      p[idx(knee)] = step(h, side, right ? -15.0 : 20.0, kThigh);
      p[idx(ank)] = step(p[idx(knee)], side, right ? -5.0 : 10.0, kShin);
      break;
    }
  }
}

constexpr std::array<Joint, 12> kUpperBody = {
    Joint::kNose,   Joint::kNeck,      Joint::kRShoulder, Joint::kRElbow,
    Joint::kRWrist, Joint::kLShoulder, Joint::kLElbow,    Joint::kLWrist,
    Joint::kREye,   Joint::kLEye,      Joint::kREar,      Joint::kLEar};

void apply_torso(Pose& p, Torso t) {
  if (t == Torso::kUpright) return;
  for (Joint j : kUpperBody) {
    Keypoint2D& k = p[idx(j)];
    const double dx = k.x - kHipCenter.x;
    const double dy = k.y - kHipCenter.y;
    if (t == Torso::kLeanForward) {
      k.y = kHipCenter.y + 0.82 * dy;
      continue;
    }
    // Tilting to the subject's left moves the neck toward +x.
    const double th = (t == Torso::kTiltLeft ? 12.0 : -12.0) * kDeg;
    k.x = kHipCenter.x + dx * std::cos(th) - dy * std::sin(th);
    k.y = kHipCenter.y + dx * std::sin(th) + dy * std::cos(th);
  }
}

constexpr std::array<std::string_view, kMaxParaphrases> kSubjects = {
    "a person", "someone", "a figure"};
constexpr std::array<std::string_view, 3> kStanceWords = {"standing", "sitting",
                                                          "walking"};
// Left and right arms use disjoint vocabularies so that a bag of words still
// tells which arm does what.
constexpr std::array<std::string_view, 4> kLeftArm = {
    "", "the left arm raised", "the left arm extended sideways",
    "the left hand on the hip"};
constexpr std::array<std::string_view, 4> kRightArm = {
    "", "the right arm lifted high", "the right arm stretched out",
    "the right hand resting on the waist"};
constexpr std::array<std::string_view, 4> kTorsoPhrases = {
    "", "torso tilted to the left", "torso tilted to the right",
    "torso leaning forward"};
constexpr std::array<std::string_view, 3> kHeadPhrases = {
    "", "head turned leftward", "head turned rightward"};
constexpr std::string_view kStill = " still facing forward";

template <std::size_t N>
int lookup(const std::array<std::string_view, N>& table, std::string_view s) {
  for (std::size_t i = 0; i < N; ++i) {
    if (!table[i].empty() && table[i] == s) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

std::size_t template_index(const PoseTemplate& t) {
  std::size_t i = static_cast<std::size_t>(t.stance);
  i = i * 4 + static_cast<std::size_t>(t.left_arm);
  i = i * 4 + static_cast<std::size_t>(t.right_arm);
  i = i * 4 + static_cast<std::size_t>(t.torso);
  i = i * 3 + static_cast<std::size_t>(t.head);
  return i;
}

PoseTemplate template_at(std::size_t index) {
  if (index >= kNumTemplates) throw ConfigError("template index out of range");
  PoseTemplate t;
  t.head = static_cast<HeadPose>(index % 3);
  index /= 3;
  t.torso = static_cast<Torso>(index % 4);
  index /= 4;
  t.right_arm = static_cast<ArmPose>(index % 4);
  index /= 4;
  t.left_arm = static_cast<ArmPose>(index % 4);
  index /= 4;
  t.stance = static_cast<Stance>(index);
  return t;
}

std::pair<Pose, VisibilityVector> oracle_pose(const PoseTemplate& t) {
  Pose p;
  VisibilityVector v;
  v.fill(1.0);
  p[idx(Joint::kNeck)] = kNeck;
  place_arm(p, -1.0, t.right_arm, Joint::kRShoulder, Joint::kRElbow, Joint::kRWrist);
  place_arm(p, +1.0, t.left_arm, Joint::kLShoulder, Joint::kLElbow, Joint::kLWrist);
  place_leg(p, -1.0, t.stance, Joint::kRHip, Joint::kRKnee, Joint::kRAnkle);
  place_leg(p, +1.0, t.stance, Joint::kLHip, Joint::kLKnee, Joint::kLAnkle);

  double shift = 0.0;
  if (t.head == HeadPose::kTurnedLeft) shift = -kFaceShift;
  if (t.head == HeadPose::kTurnedRight) shift = kFaceShift;
  p[idx(Joint::kNose)] = {shift, -0.60};
  p[idx(Joint::kREye)] = {-0.035 + shift, -0.63};
  p[idx(Joint::kLEye)] = {0.035 + shift, -0.63};
  p[idx(Joint::kREar)] = {-0.075 + shift / 2, -0.61};
  p[idx(Joint::kLEar)] = {0.075 + shift / 2, -0.61};

  apply_torso(p, t.torso);

  // The far ear disappears behind the turned head.
  if (t.head == HeadPose::kTurnedLeft) {
    v[idx(Joint::kREar)] = 0.0;
    p[idx(Joint::kREar)] = {0.0, 0.0};
  } else if (t.head == HeadPose::kTurnedRight) {
    v[idx(Joint::kLEar)] = 0.0;
    p[idx(Joint::kLEar)] = {0.0, 0.0};
  }
  return {p, v};
}

std::string caption_of(const PoseTemplate& t, std::size_t variant) {
  if (variant >= kMaxParaphrases) {
    throw ConfigError("caption variant " + std::to_string(variant) +
                      " out of range");
  }
  std::string out(kSubjects[variant]);
  out += ' ';
  out += kStanceWords[static_cast<std::size_t>(t.stance)];
  std::vector<std::string_view> clauses;
  if (t.left_arm != ArmPose::kDown) clauses.push_back(kLeftArm[static_cast<std::size_t>(t.left_arm)]);
  if (t.right_arm != ArmPose::kDown) clauses.push_back(kRightArm[static_cast<std::size_t>(t.right_arm)]);
  if (t.torso != Torso::kUpright) clauses.push_back(kTorsoPhrases[static_cast<std::size_t>(t.torso)]);
  if (t.head != HeadPose::kForward) clauses.push_back(kHeadPhrases[static_cast<std::size_t>(t.head)]);
  if (clauses.empty()) return out + std::string(kStill);
  out += " with ";
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    if (i) out += ", ";
    out += clauses[i];
  }
  return out;
}

PoseTemplate parse_caption(const std::string& caption) {
  const auto fail = [&]() -> DataError {
    return DataError("caption outside the synthetic grammar: \"" + caption + "\"");
  };
  std::string_view s = caption;
  bool matched = false;
  for (auto subj : kSubjects) {
    if (s.starts_with(subj) && s.size() > subj.size() && s[subj.size()] == ' ') {
      s.remove_prefix(subj.size() + 1);
      matched = true;
      break;
    }
  }
  if (!matched) throw fail();
  PoseTemplate t;
  matched = false;
  for (std::size_t i = 0; i < kStanceWords.size(); ++i) {
    if (s.starts_with(kStanceWords[i])) {
      t.stance = static_cast<Stance>(i);
      s.remove_prefix(kStanceWords[i].size());
      matched = true;
      break;
    }
  }
  if (!matched) throw fail();
  if (s == kStill) return t;
  constexpr std::string_view kWith = " with ";
  if (!s.starts_with(kWith)) throw fail();
  s.remove_prefix(kWith.size());
  // Clauses must appear in canonical order, each at most once.
  int stage = 0;
  while (true) {
    const std::size_t cut = s.find(", ");
    const std::string_view clause = s.substr(0, cut);
    int k;
    if (stage < 1 && (k = lookup(kLeftArm, clause)) >= 0) {
      t.left_arm = static_cast<ArmPose>(k);
      stage = 1;
    } else if (stage < 2 && (k = lookup(kRightArm, clause)) >= 0) {
      t.right_arm = static_cast<ArmPose>(k);
      stage = 2;
    } else if (stage < 3 && (k = lookup(kTorsoPhrases, clause)) >= 0) {
      t.torso = static_cast<Torso>(k);
      stage = 3;
    } else if (stage < 4 && (k = lookup(kHeadPhrases, clause)) >= 0) {
      t.head = static_cast<HeadPose>(k);
      stage = 4;
    } else {
      throw fail();
    }
    if (cut == std::string_view::npos) break;
    s.remove_prefix(cut + 2);
  }
  return t;
}

void SynthSpec::validate() const {
  if (!(jitter_sigma >= 0.0) || !std::isfinite(jitter_sigma)) {
    throw ConfigError("jitter_sigma must be >= 0");
  }
  if (!(occlusion_rate >= 0.0 && occlusion_rate < 0.5)) {
    throw ConfigError("occlusion_rate must lie in [0, 0.5)");
  }
  if (n_samples < 100) throw ConfigError("n_samples must be >= 100");
  if (caption_paraphrase_count < 1 || caption_paraphrase_count > kMaxParaphrases) {
    throw ConfigError("caption_paraphrase_count must lie in [1, 3]");
  }
}

std::string SynthSpec::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["n_samples"] = n_samples;
  j["jitter_sigma"] = jitter_sigma;
  j["occlusion_rate"] = occlusion_rate;
  j["caption_paraphrase_count"] = caption_paraphrase_count;
  return j.dump(2) + "\n";
}

Corpus generate_corpus(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::vector<std::size_t> order(kNumTemplates);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<std::size_t>(order));

  const auto split_round = [](std::size_t total, double frac) {
    return static_cast<std::size_t>(std::llround(frac * static_cast<double>(total)));
  };
  const std::size_t t_train = split_round(kNumTemplates, 0.8);
  const std::size_t t_val = split_round(kNumTemplates, 0.1);
  Corpus c;
  c.train_templates.assign(order.begin(), order.begin() + t_train);
  c.val_templates.assign(order.begin() + t_train, order.begin() + t_train + t_val);
  c.test_templates.assign(order.begin() + t_train + t_val, order.end());
  for (auto* v : {&c.train_templates, &c.val_templates, &c.test_templates}) {
    std::sort(v->begin(), v->end());
  }

  const std::size_t n = spec.n_samples;
  const std::size_t n_train = split_round(n, 0.8);
  const std::size_t n_val = split_round(n, 0.1);
  const std::size_t n_test = n - n_train - n_val;

  const auto fill = [&](std::vector<PoseSample>& out,
                        const std::vector<std::size_t>& templates,
                        std::size_t count, const char* prefix) {
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t ti = templates[rng.below(templates.size())];
      const std::size_t variant = rng.below(spec.caption_paraphrase_count);
      const PoseTemplate t = template_at(ti);
      auto [pose, vis] = oracle_pose(t);
      for (std::size_t j = 0; j < kNumJoints; ++j) {
        if (vis[j] == 0.0) continue;
        if (spec.jitter_sigma > 0.0) {
          pose[j].x = std::clamp(pose[j].x + rng.normal(0.0, spec.jitter_sigma), -1.0, 1.0);
          pose[j].y = std::clamp(pose[j].y + rng.normal(0.0, spec.jitter_sigma), -1.0, 1.0);
        }
        if (spec.occlusion_rate > 0.0 && rng.bernoulli(spec.occlusion_rate)) {
          vis[j] = 0.0;
          pose[j] = {0.0, 0.0};
        }
      }
      PoseSample s;
      char id[32];
      std::snprintf(id, sizeof id, "%s-%06zu", prefix, i);
      s.id = id;
      s.caption = caption_of(t, variant);
      s.pose = pose;
      s.visibility = vis;
      out.push_back(std::move(s));
    }
  };
  fill(c.train, c.train_templates, n_train, "train");
  fill(c.val, c.val_templates, n_val, "val");
  fill(c.test, c.test_templates, n_test, "test");
  return c;
}

}  // namespace posegen
