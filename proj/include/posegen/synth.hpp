#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "posegen/skeleton.hpp"

namespace posegen {

enum class Stance : int { kStanding, kSitting, kWalking };
enum class ArmPose : int { kDown, kRaised, kExtended, kOnHip };
enum class Torso : int { kUpright, kTiltLeft, kTiltRight, kLeanForward };
enum class HeadPose : int { kForward, kTurnedLeft, kTurnedRight };

struct PoseTemplate {
  Stance stance = Stance::kStanding;
  ArmPose left_arm = ArmPose::kDown;
  ArmPose right_arm = ArmPose::kDown;
  Torso torso = Torso::kUpright;
  HeadPose head = HeadPose::kForward;

  friend bool operator==(const PoseTemplate&, const PoseTemplate&) = default;
};

inline constexpr std::size_t kNumTemplates = 3 * 4 * 4 * 4 * 3;
inline constexpr std::size_t kMaxParaphrases = 3;

// Bijection between templates and [0, 576).
std::size_t template_index(const PoseTemplate& t);
PoseTemplate template_at(std::size_t index);

// Jitter-free canonical pose. Self-occluded joints are invisible and parked
// at the origin.
std::pair<Pose, VisibilityVector> oracle_pose(const PoseTemplate& t);

// Throws ConfigError when variant >= kMaxParaphrases.
std::string caption_of(const PoseTemplate& t, std::size_t variant);
// Inverse of caption_of; throws DataError on text outside the grammar.
PoseTemplate parse_caption(const std::string& caption);

struct SynthSpec {
  std::uint64_t seed = 42;
  std::size_t n_samples = 5000;
  double jitter_sigma = 0.01;
  double occlusion_rate = 0.05;
  std::size_t caption_paraphrase_count = 3;

  // Throws ConfigError.
  void validate() const;
  std::string to_json() const;
};

struct Corpus {
  std::vector<PoseSample> train;
  std::vector<PoseSample> val;
  std::vector<PoseSample> test;
  // Template indices owned by each split.
  std::vector<std::size_t> train_templates;
  std::vector<std::size_t> val_templates;
  std::vector<std::size_t> test_templates;
};

Corpus generate_corpus(const SynthSpec& spec);

}  // namespace posegen
