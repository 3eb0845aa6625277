#pragma once

#include <span>
#include <vector>

#include "posegen/skeleton.hpp"

namespace posegen {

struct LossWeights {
  double lambda_inv = 0.50;
  double lambda_skel = 0.10;
  double lambda_con = 0.10;
  double tau = 0.07;
  double epsilon = 1e-8;

  void validate() const;
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

struct LossBreakdown {
  double coord = 0.0;
  double vis = 0.0;
  double inv = 0.0;
  double skel = 0.0;
  double con = 0.0;
  double total = 0.0;
};

// BCE probabilities are clamped to [kProbClamp, 1 - kProbClamp].
inline constexpr double kProbClamp = 1e-7;

// ---- per-sample forms -----------------------------------------------------

double coord_loss(const Pose& pred, const Pose& gt, const VisibilityVector& mask,
                  double eps = 1e-8);
double vis_loss(std::span<const double, kNumJoints> logits,
                const VisibilityVector& gt);
double inv_loss(const Pose& pred, const VisibilityVector& gt_vis,
                double eps = 1e-8);
double skel_loss(const Pose& pred, const Pose& gt,
                 const SkeletonTopology& topo = SkeletonTopology::openpose18());
// Rows of f_text / f_pose are unit vectors of width dim; both hold B rows.
// Throws ValidationError when a row norm deviates from 1 by more than 1e-3.
double contrastive_loss(std::span<const double> f_text,
                        std::span<const double> f_pose, std::size_t dim,
                        double tau);

LossBreakdown total_loss(double coord, double vis, double inv, double skel,
                         double con, const LossWeights& w);

// ---- batched forms with gradients -----------------------------------------
//
// Flat row-major buffers: coords [B, 36] as (x0, y0, x1, y1, ...), vis
// [B, 18], projections [B, proj_dim]. Per-sample terms are averaged over the
// batch; the contrastive term already carries its 1/2B.

struct BatchPrediction {
  std::size_t batch = 0;
  std::size_t proj_dim = 0;
  std::span<const double> coords;
  std::span<const double> vis_logits;  // empty when there is no vis head
  std::span<const double> f_text;
  std::span<const double> f_pose;
};

struct BatchTarget {
  std::span<const double> coords;
  std::span<const double> visibility;
};

struct BatchGradients {
  std::vector<double> coords;
  std::vector<double> vis_logits;
  std::vector<double> f_text;
  std::vector<double> f_pose;
};

struct LossOptions {
  // Off for the no-visibility-head ablation: the term is dropped entirely.
  bool include_vis = true;
  const SkeletonTopology* topology = nullptr;  // defaults to OpenPose-18
};

// Gradients of L_total with respect to every prediction buffer are written
// to *grads when it is non-null.
LossBreakdown batch_loss(const BatchPrediction& pred, const BatchTarget& target,
                         const LossWeights& weights, const LossOptions& options,
                         BatchGradients* grads);

}  // namespace posegen
