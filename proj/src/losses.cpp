#include "posegen/losses.hpp"

#include <algorithm>
#include <cmath>

#include "posegen/error.hpp"

namespace posegen {

void LossWeights::validate() const {
  if (lambda_inv < 0 || lambda_skel < 0 || lambda_con < 0) {
    throw ConfigError("loss weights must be non-negative");
  }
  if (!(tau > 0)) throw ConfigError("tau must be positive");
  if (!(epsilon > 0)) throw ConfigError("epsilon must be positive");
}

namespace {

// softplus(z) = log(1 + e^z) without overflow.
double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

const double kLogLo = std::log(kProbClamp);
const double kLogHi = std::log1p(-kProbClamp);

// Sample-level kernels on flat buffers. g_* may be null; gradients are
// scaled by `scale` and accumulated.

double coord_term(const double* pred, const double* gt, const double* mask,
                  double eps, double scale, double* g) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    const double dx = pred[2 * i] - gt[2 * i];
    const double dy = pred[2 * i + 1] - gt[2 * i + 1];
    num += mask[i] * (dx * dx + dy * dy);
    den += mask[i];
  }
  den += eps;
  if (g) {
    for (std::size_t i = 0; i < kNumJoints; ++i) {
      g[2 * i] += scale * 2.0 * mask[i] * (pred[2 * i] - gt[2 * i]) / den;
      g[2 * i + 1] += scale * 2.0 * mask[i] * (pred[2 * i + 1] - gt[2 * i + 1]) / den;
    }
  }
  return num / den;
}

double vis_term(const double* logits, const double* v, double scale, double* g) {
  double sum = 0.0;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    const double z = logits[i];
    // log p = -softplus(-z), log(1 - p) = -softplus(z), each clamped.
    const double log_p = -softplus(-z);
    const double log_q = -softplus(z);
    const double lp = std::clamp(log_p, kLogLo, kLogHi);
    const double lq = std::clamp(log_q, kLogLo, kLogHi);
    sum += -(v[i] * lp + (1.0 - v[i]) * lq);
    if (g) {
      const double p = sigmoid(z);
      double d = 0.0;
      // d(-log p)/dz = p - 1 and d(-log(1-p))/dz = p, zero where clamped.
      if (log_p > kLogLo && log_p < kLogHi) d += v[i] * (p - 1.0);
      if (log_q > kLogLo && log_q < kLogHi) d += (1.0 - v[i]) * p;
      g[i] += scale * d / static_cast<double>(kNumJoints);
    }
  }
  return sum / static_cast<double>(kNumJoints);
}

double inv_term(const double* pred, const double* v, double eps, double scale,
                double* g) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    const double w = 1.0 - v[i];
    num += w * (pred[2 * i] * pred[2 * i] + pred[2 * i + 1] * pred[2 * i + 1]);
    den += w;
  }
  den += eps;
  if (g) {
    for (std::size_t i = 0; i < kNumJoints; ++i) {
      const double w = 1.0 - v[i];
      g[2 * i] += scale * 2.0 * w * pred[2 * i] / den;
      g[2 * i + 1] += scale * 2.0 * w * pred[2 * i + 1] / den;
    }
  }
  return num / den;
}

double skel_term(const double* pred, const double* gt,
                 const SkeletonTopology& topo, double scale, double* g) {
  if (topo.size() == 0) throw ConfigError("skeleton topology is empty");
  const double inv_e = 1.0 / static_cast<double>(topo.size());
  double sum = 0.0;
  for (const Edge& e : topo.edges()) {
    const double px = pred[2 * e.a] - pred[2 * e.b];
    const double py = pred[2 * e.a + 1] - pred[2 * e.b + 1];
    const double gx = gt[2 * e.a] - gt[2 * e.b];
    const double gy = gt[2 * e.a + 1] - gt[2 * e.b + 1];
    const double lp = std::hypot(px, py);
    const double r = lp - std::hypot(gx, gy);
    sum += r * r;
    if (g && lp > 0.0) {
      // Zero subgradient when the endpoints coincide.
      const double c = scale * inv_e * 2.0 * r / lp;
      g[2 * e.a] += c * px;
      g[2 * e.a + 1] += c * py;
      g[2 * e.b] -= c * px;
      g[2 * e.b + 1] -= c * py;
    }
  }
  return sum * inv_e;
}

void check_unit_rows(std::span<const double> f, std::size_t dim,
                     const char* which) {
  for (std::size_t r = 0; r * dim < f.size(); ++r) {
    double n2 = 0.0;
    for (std::size_t i = 0; i < dim; ++i) n2 += f[r * dim + i] * f[r * dim + i];
    if (std::abs(std::sqrt(n2) - 1.0) > 1e-3) {
      throw ValidationError(std::string("contrastive_loss: ") + which +
                            " row " + std::to_string(r) + " is not unit norm");
    }
  }
}

double contrastive_term(std::span<const double> ft, std::span<const double> fp,
                        std::size_t batch, std::size_t dim, double tau,
                        double scale, double* g_text, double* g_pose) {
  if (batch == 0) throw ConfigError("contrastive_loss: empty batch");
  if (ft.size() != batch * dim || fp.size() != batch * dim) {
    throw ShapeError("contrastive_loss: projection buffers do not match B x dim");
  }
  check_unit_rows(ft, dim, "f_text");
  check_unit_rows(fp, dim, "f_pose");
  const std::size_t B = batch;
  std::vector<double> s(B * B);
  for (std::size_t p = 0; p < B; ++p) {
    for (std::size_t q = 0; q < B; ++q) {
      double d = 0.0;
      for (std::size_t i = 0; i < dim; ++i) d += ft[p * dim + i] * fp[q * dim + i];
      s[p * B + q] = d / tau;
    }
  }
  // Row-wise (text -> pose) and column-wise (pose -> text) softmaxes.
  std::vector<double> row_sm(B * B), col_sm(B * B);
  double loss = 0.0;
  for (std::size_t p = 0; p < B; ++p) {
    double mx = s[p * B];
    for (std::size_t q = 1; q < B; ++q) mx = std::max(mx, s[p * B + q]);
    double z = 0.0;
    for (std::size_t q = 0; q < B; ++q) z += std::exp(s[p * B + q] - mx);
    const double lse = mx + std::log(z);
    loss += lse - s[p * B + p];
    for (std::size_t q = 0; q < B; ++q) row_sm[p * B + q] = std::exp(s[p * B + q] - lse);
  }
  for (std::size_t p = 0; p < B; ++p) {
    double mx = s[p];
    for (std::size_t q = 1; q < B; ++q) mx = std::max(mx, s[q * B + p]);
    double z = 0.0;
    for (std::size_t q = 0; q < B; ++q) z += std::exp(s[q * B + p] - mx);
    const double lse = mx + std::log(z);
    loss += lse - s[p * B + p];
    for (std::size_t q = 0; q < B; ++q) col_sm[q * B + p] = std::exp(s[q * B + p] - lse);
  }
  const double norm = 1.0 / (2.0 * static_cast<double>(B));
  if (g_text || g_pose) {
    // dL/ds_pq = (row_pq + col_pq - 2 delta_pq) / 2B
    for (std::size_t p = 0; p < B; ++p) {
      for (std::size_t q = 0; q < B; ++q) {
        const double gs = scale * norm *
                          (row_sm[p * B + q] + col_sm[p * B + q] - (p == q ? 2.0 : 0.0)) /
                          tau;
        if (gs == 0.0) continue;
        for (std::size_t i = 0; i < dim; ++i) {
          if (g_text) g_text[p * dim + i] += gs * fp[q * dim + i];
          if (g_pose) g_pose[q * dim + i] += gs * ft[p * dim + i];
        }
      }
    }
  }
  return loss * norm;
}

std::array<double, 2 * kNumJoints> flatten(const Pose& p) {
  std::array<double, 2 * kNumJoints> out{};
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    out[2 * i] = p[i].x;
    out[2 * i + 1] = p[i].y;
  }
  return out;
}

}  // namespace

double coord_loss(const Pose& pred, const Pose& gt, const VisibilityVector& mask,
                  double eps) {
  const auto p = flatten(pred), g = flatten(gt);
  return coord_term(p.data(), g.data(), mask.data(), eps, 0.0, nullptr);
}

double vis_loss(std::span<const double, kNumJoints> logits,
                const VisibilityVector& gt) {
  return vis_term(logits.data(), gt.data(), 0.0, nullptr);
}

double inv_loss(const Pose& pred, const VisibilityVector& gt_vis, double eps) {
  const auto p = flatten(pred);
  return inv_term(p.data(), gt_vis.data(), eps, 0.0, nullptr);
}

double skel_loss(const Pose& pred, const Pose& gt, const SkeletonTopology& topo) {
  const auto p = flatten(pred), g = flatten(gt);
  return skel_term(p.data(), g.data(), topo, 0.0, nullptr);
}

double contrastive_loss(std::span<const double> f_text,
                        std::span<const double> f_pose, std::size_t dim,
                        double tau) {
  if (dim == 0 || f_text.size() % dim != 0) {
    throw ShapeError("contrastive_loss: buffer is not a multiple of dim");
  }
  return contrastive_term(f_text, f_pose, f_text.size() / dim, dim, tau, 0.0,
                          nullptr, nullptr);
}

LossBreakdown total_loss(double coord, double vis, double inv, double skel,
                         double con, const LossWeights& w) {
  w.validate();
  LossBreakdown b{coord, vis, inv, skel, con, 0.0};
  b.total = coord + vis + w.lambda_inv * inv + w.lambda_skel * skel +
            w.lambda_con * con;
  return b;
}

LossBreakdown batch_loss(const BatchPrediction& pred, const BatchTarget& target,
                         const LossWeights& weights, const LossOptions& options,
                         BatchGradients* grads) {
  weights.validate();
  const std::size_t B = pred.batch;
  if (B == 0) throw ConfigError("batch_loss: empty batch");
  if (pred.coords.size() != B * 2 * kNumJoints ||
      target.coords.size() != B * 2 * kNumJoints ||
      target.visibility.size() != B * kNumJoints) {
    throw ShapeError("batch_loss: buffer sizes do not match the batch");
  }
  const bool use_vis = options.include_vis;
  if (use_vis && pred.vis_logits.size() != B * kNumJoints) {
    throw ShapeError("batch_loss: visibility logits missing");
  }
  const SkeletonTopology& topo =
      options.topology ? *options.topology : SkeletonTopology::openpose18();

  double* gc = nullptr;
  double* gv = nullptr;
  double* gt = nullptr;
  double* gp = nullptr;
  if (grads) {
    grads->coords.assign(pred.coords.size(), 0.0);
    grads->vis_logits.assign(use_vis ? pred.vis_logits.size() : 0, 0.0);
    grads->f_text.assign(pred.f_text.size(), 0.0);
    grads->f_pose.assign(pred.f_pose.size(), 0.0);
    gc = grads->coords.data();
    gv = grads->vis_logits.data();
    gt = grads->f_text.data();
    gp = grads->f_pose.data();
  }

  const double inv_b = 1.0 / static_cast<double>(B);
  LossBreakdown out;
  for (std::size_t b = 0; b < B; ++b) {
    const double* pc = pred.coords.data() + b * 36;
    const double* tc = target.coords.data() + b * 36;
    const double* tv = target.visibility.data() + b * kNumJoints;
    double* g = gc ? gc + b * 36 : nullptr;
    out.coord += inv_b * coord_term(pc, tc, tv, weights.epsilon, inv_b, g);
    if (use_vis) {
      out.vis += inv_b * vis_term(pred.vis_logits.data() + b * kNumJoints, tv, inv_b,
                                  gv ? gv + b * kNumJoints : nullptr);
    }
    out.inv += inv_b * inv_term(pc, tv, weights.epsilon, weights.lambda_inv * inv_b, g);
    out.skel += inv_b * skel_term(pc, tc, topo, weights.lambda_skel * inv_b, g);
  }
  out.con = contrastive_term(pred.f_text, pred.f_pose, B, pred.proj_dim,
                             weights.tau, weights.lambda_con, gt, gp);
  out.total = out.coord + out.vis + weights.lambda_inv * out.inv +
              weights.lambda_skel * out.skel + weights.lambda_con * out.con;
  return out;
}

}  // namespace posegen
