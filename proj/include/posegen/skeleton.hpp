#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace posegen {

inline constexpr std::size_t kNumJoints = 18;

// COCO-18 / OpenPose joint order.
enum class Joint : int {
  kNose = 0,
  kNeck,
  kRShoulder,
  kRElbow,
  kRWrist,
  kLShoulder,
  kLElbow,
  kLWrist,
  kRHip,
  kRKnee,
  kRAnkle,
  kLHip,
  kLKnee,
  kLAnkle,
  kREye,
  kLEye,
  kREar,
  kLEar,
};

constexpr std::size_t idx(Joint j) { return static_cast<std::size_t>(j); }
const char* joint_name(std::size_t i);

// Normalized image coordinates: origin at the image center, +x right,
// +y down, image borders at +-1.
struct Keypoint2D {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Keypoint2D&, const Keypoint2D&) = default;
};

struct Pose {
  std::array<Keypoint2D, kNumJoints> joints{};

  Keypoint2D& operator[](std::size_t i) { return joints[i]; }
  const Keypoint2D& operator[](std::size_t i) const { return joints[i]; }
  static constexpr std::size_t size() { return kNumJoints; }

  friend bool operator==(const Pose&, const Pose&) = default;
};

// Ground truth holds exactly 0 or 1; predictions hold probabilities.
using VisibilityVector = std::array<double, kNumJoints>;

struct Edge {
  std::size_t a;
  std::size_t b;
};

class SkeletonTopology {
 public:
  // Throws ValidationError on out-of-range indices, self edges or
  // duplicate undirected edges.
  explicit SkeletonTopology(std::vector<Edge> edges);

  // The 17-limb OpenPose-18 skeleton.
  static const SkeletonTopology& openpose18();

  std::span<const Edge> edges() const { return edges_; }
  std::size_t size() const { return edges_.size(); }

 private:
  std::vector<Edge> edges_;
};

struct PoseSample {
  std::string id;
  std::string caption;
  Pose pose;
  VisibilityVector visibility{};
  int source_width = 256;
  int source_height = 256;

  friend bool operator==(const PoseSample&, const PoseSample&) = default;
};

// Unchecked sample as read from disk; validate before converting.
struct RawSample {
  std::string id;
  std::string caption;
  std::vector<Keypoint2D> joints;
  std::vector<double> visibility;
  int source_width = 0;
  int source_height = 0;
};

struct Violation {
  std::string field;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

Keypoint2D normalize_coords(double px, double py, double width, double height);
std::pair<double, double> denormalize_coords(const Keypoint2D& k, double width,
                                             double height);

std::vector<double> edge_lengths(const Pose& pose,
                                 const SkeletonTopology& topo =
                                     SkeletonTopology::openpose18());

ValidationReport validate_sample(const RawSample& s);
ValidationReport validate_sample(const PoseSample& s);

RawSample to_raw(const PoseSample& s);
// Throws ValidationError carrying the report text.
PoseSample to_pose_sample(const RawSample& s);

}  // namespace posegen
