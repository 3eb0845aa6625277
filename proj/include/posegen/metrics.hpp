#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>

#include "posegen/skeleton.hpp"

namespace posegen {

// Predictions and ground truth in normalized coordinates; errors are
// measured in pixels after denormalizing to width x height.
struct EvalSet {
  std::span<const Pose> preds;
  std::span<const Pose> gts;
  std::span<const VisibilityVector> vis;
  double width = 256.0;
  double height = 256.0;

  // Throws ShapeError on mismatched lengths, ValidationError when no
  // ground-truth joint is visible.
  void check() const;
};

struct PckhResult {
  double value = 0.0;
  // Samples whose nose or neck is invisible and used 0.1 x side instead.
  std::size_t head_fallbacks = 0;
};

inline constexpr double kHeadFallbackFrac = 0.1;

PckhResult pckh(const EvalSet& set, double alpha = 0.5);
double pck_at(const EvalSet& set, double frac);
double mpjpe(const EvalSet& set);

// Pooled average precision. Tied scores form one operating point. Throws
// DataError("AP undefined") when labels are all positive or all negative.
double visibility_map(std::span<const double> scores,
                      std::span<const double> labels);

struct EvalReport {
  double pckh_05 = 0.0;
  double pck_005 = 0.0;
  double pck_010 = 0.0;
  double mpjpe_px = 0.0;
  // NaN when the label set is degenerate; serialized as null.
  double vis_map = 0.0;
  std::size_t n_samples = 0;
  std::size_t head_fallbacks = 0;
  // Per joint; NaN where a joint is never visible.
  std::array<double, kNumJoints> joint_pckh{};
  std::array<double, kNumJoints> joint_mpjpe{};
  std::array<double, kNumJoints> joint_ap{};

  std::string to_json() const;
  static EvalReport from_json(const std::string& text);
};

// vis_probs[s][j] is the predicted visibility probability.
EvalReport evaluate(const EvalSet& set,
                    std::span<const std::array<double, kNumJoints>> vis_probs);

}  // namespace posegen
