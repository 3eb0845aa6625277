#include "posegen/skeleton.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "posegen/error.hpp"

namespace posegen {

namespace {

constexpr std::array<const char*, kNumJoints> kJointNames = {
    "nose",     "neck",    "r_shoulder", "r_elbow", "r_wrist", "l_shoulder",
    "l_elbow",  "l_wrist", "r_hip",      "r_knee",  "r_ankle", "l_hip",
    "l_knee",   "l_ankle", "r_eye",      "l_eye",   "r_ear",   "l_ear"};

}  // namespace

const char* joint_name(std::size_t i) {
  return i < kNumJoints ? kJointNames[i] : "?";
}

SkeletonTopology::SkeletonTopology(std::vector<Edge> edges)
    : edges_(std::move(edges)) {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const Edge& e : edges_) {
    if (e.a >= kNumJoints || e.b >= kNumJoints) {
      throw ValidationError("skeleton edge index out of range");
    }
    if (e.a == e.b) throw ValidationError("skeleton self edge");
    if (!seen.emplace(std::min(e.a, e.b), std::max(e.a, e.b)).second) {
      throw ValidationError("duplicate skeleton edge");
    }
  }
}

const SkeletonTopology& SkeletonTopology::openpose18() {
  static const SkeletonTopology topo({{0, 1},
                                      {1, 2},
                                      {2, 3},
                                      {3, 4},
                                      {1, 5},
                                      {5, 6},
                                      {6, 7},
                                      {1, 8},
                                      {8, 9},
                                      {9, 10},
                                      {1, 11},
                                      {11, 12},
                                      {12, 13},
                                      {0, 14},
                                      {14, 16},
                                      {0, 15},
                                      {15, 17}});
  return topo;
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) os << "; ";
    os << violations[i].field << ": " << violations[i].message;
  }
  return os.str();
}

Keypoint2D normalize_coords(double px, double py, double width,
                            double height) {
  if (!std::isfinite(px) || !std::isfinite(py) || !std::isfinite(width) ||
      !std::isfinite(height)) {
    throw ValidationError("normalize_coords: non-finite input");
  }
  if (width <= 0.0 || height <= 0.0) {
    throw ValidationError("normalize_coords: image size must be positive");
  }
  return {2.0 * px / width - 1.0, 2.0 * py / height - 1.0};
}

std::pair<double, double> denormalize_coords(const Keypoint2D& k, double width,
                                             double height) {
  return {(k.x + 1.0) * width / 2.0, (k.y + 1.0) * height / 2.0};
}

std::vector<double> edge_lengths(const Pose& pose,
                                 const SkeletonTopology& topo) {
  std::vector<double> out;
  out.reserve(topo.size());
  for (const Edge& e : topo.edges()) {
    out.push_back(std::hypot(pose[e.a].x - pose[e.b].x,
                             pose[e.a].y - pose[e.b].y));
  }
  return out;
}

ValidationReport validate_sample(const RawSample& s) {
  ValidationReport r;
  auto add = [&](std::string field, std::string msg) {
    r.violations.push_back({std::move(field), std::move(msg)});
  };
  if (s.caption.empty() ||
      std::all_of(s.caption.begin(), s.caption.end(),
                  [](unsigned char c) { return std::isspace(c); })) {
    add("caption", "empty caption");
  }
  if (s.source_width <= 0 || s.source_height <= 0) {
    add("source_size", "source dimensions must be positive");
  }
  if (s.joints.size() != kNumJoints) {
    add("joints", "joint count != 18 (got " + std::to_string(s.joints.size()) +
                      ")");
  }
  if (s.visibility.size() != kNumJoints) {
    add("visibility", "visibility count != 18 (got " +
                          std::to_string(s.visibility.size()) + ")");
  }
  for (std::size_t i = 0; i < s.joints.size(); ++i) {
    const auto& k = s.joints[i];
    if (!std::isfinite(k.x) || !std::isfinite(k.y)) {
      add("joints[" + std::to_string(i) + "]", "non-finite coordinate");
    } else if (std::abs(k.x) > 1.0 || std::abs(k.y) > 1.0) {
      add("joints[" + std::to_string(i) + "]", "coordinate out of [-1, 1]");
    }
  }
  for (std::size_t i = 0; i < s.visibility.size(); ++i) {
    if (s.visibility[i] != 0.0 && s.visibility[i] != 1.0) {
      add("visibility[" + std::to_string(i) + "]", "visibility not binary");
    }
  }
  return r;
}

RawSample to_raw(const PoseSample& s) {
  RawSample r;
  r.id = s.id;
  r.caption = s.caption;
  r.joints.assign(s.pose.joints.begin(), s.pose.joints.end());
  r.visibility.assign(s.visibility.begin(), s.visibility.end());
  r.source_width = s.source_width;
  r.source_height = s.source_height;
  return r;
}

ValidationReport validate_sample(const PoseSample& s) {
  return validate_sample(to_raw(s));
}

PoseSample to_pose_sample(const RawSample& s) {
  const auto report = validate_sample(s);
  if (!report.ok()) {
    throw ValidationError("sample '" + s.id + "': " + report.to_string());
  }
  PoseSample out;
  out.id = s.id;
  out.caption = s.caption;
  std::copy(s.joints.begin(), s.joints.end(), out.pose.joints.begin());
  std::copy(s.visibility.begin(), s.visibility.end(), out.visibility.begin());
  out.source_width = s.source_width;
  out.source_height = s.source_height;
  return out;
}

}  // namespace posegen
