#include "posegen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "json.hpp"

#include "posegen/error.hpp"

namespace posegen {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double pixel_error(const EvalSet& s, std::size_t n, std::size_t j) {
  const double dx = (s.preds[n][j].x - s.gts[n][j].x) * s.width / 2.0;
  const double dy = (s.preds[n][j].y - s.gts[n][j].y) * s.height / 2.0;
  return std::hypot(dx, dy);
}

double side(const EvalSet& s) { return std::max(s.width, s.height); }

// Returns the head size of sample n, or a negative value when unmeasurable.
double head_size(const EvalSet& s, std::size_t n) {
  const auto nose = idx(Joint::kNose), neck = idx(Joint::kNeck);
  if (s.vis[n][nose] < 0.5 || s.vis[n][neck] < 0.5) return -1.0;
  const double dx = (s.gts[n][nose].x - s.gts[n][neck].x) * s.width / 2.0;
  const double dy = (s.gts[n][nose].y - s.gts[n][neck].y) * s.height / 2.0;
  return std::hypot(dx, dy);
}

// Correct-count over visible joints with a per-sample threshold.
template <class Thresh>
double pck_generic(const EvalSet& s, Thresh thresh,
                   std::array<double, kNumJoints>* per_joint = nullptr) {
  std::size_t hit = 0, total = 0;
  std::array<std::size_t, kNumJoints> jh{}, jt{};
  for (std::size_t n = 0; n < s.preds.size(); ++n) {
    const double t = thresh(n);
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      if (s.vis[n][j] < 0.5) continue;
      ++total;
      ++jt[j];
      if (pixel_error(s, n, j) <= t) {
        ++hit;
        ++jh[j];
      }
    }
  }
  if (per_joint) {
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      (*per_joint)[j] = jt[j] ? static_cast<double>(jh[j]) / static_cast<double>(jt[j]) : kNaN;
    }
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

nlohmann::ordered_json num(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

double read_num(const nlohmann::json& j) {
  return j.is_null() ? kNaN : j.get<double>();
}

}  // namespace

void EvalSet::check() const {
  if (preds.size() != gts.size() || preds.size() != vis.size()) {
    throw ShapeError("evaluation set: preds, gts and visibility differ in length");
  }
  if (!(width > 0) || !(height > 0)) {
    throw ValidationError("evaluation set: non-positive image size");
  }
  for (const auto& v : vis) {
    for (double x : v) {
      if (x >= 0.5) return;
    }
  }
  throw ValidationError("evaluation set has no visible ground-truth joint");
}

PckhResult pckh(const EvalSet& set, double alpha) {
  set.check();
  PckhResult r;
  const double fallback = kHeadFallbackFrac * side(set);
  r.value = pck_generic(set, [&](std::size_t n) {
    double h = head_size(set, n);
    if (h < 0) {
      h = fallback;
      ++r.head_fallbacks;
    }
    return alpha * h;
  });
  return r;
}

double pck_at(const EvalSet& set, double frac) {
  set.check();
  const double t = frac * side(set);
  return pck_generic(set, [t](std::size_t) { return t; });
}

double mpjpe(const EvalSet& set) {
  set.check();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t n = 0; n < set.preds.size(); ++n) {
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      if (set.vis[n][j] < 0.5) continue;
      sum += pixel_error(set, n, j);
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

double visibility_map(std::span<const double> scores,
                      std::span<const double> labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("visibility_map: scores and labels differ in length");
  }
  std::size_t pos = 0;
  for (double l : labels) pos += l >= 0.5;
  if (pos == 0 || pos == labels.size()) throw DataError("AP undefined");
  for (double s : scores) {
    if (!std::isfinite(s)) throw ValidationError("visibility_map: non-finite score");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double ap = 0.0, prev_recall = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      tp += labels[order[i]] >= 0.5;
      ++seen;
      ++i;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

EvalReport evaluate(const EvalSet& set,
                    std::span<const std::array<double, kNumJoints>> vis_probs) {
  set.check();
  if (vis_probs.size() != set.preds.size()) {
    throw ShapeError("evaluate: visibility probabilities differ in length");
  }
  EvalReport r;
  r.n_samples = set.preds.size();
  const double fallback = kHeadFallbackFrac * side(set);
  std::size_t fallbacks = 0;
  r.pckh_05 = pck_generic(
      set,
      [&](std::size_t n) {
        double h = head_size(set, n);
        if (h < 0) {
          h = fallback;
          ++fallbacks;
        }
        return 0.5 * h;
      },
      &r.joint_pckh);
  r.head_fallbacks = fallbacks;
  r.pck_005 = pck_at(set, 0.05);
  r.pck_010 = pck_at(set, 0.10);
  r.mpjpe_px = mpjpe(set);

  for (std::size_t j = 0; j < kNumJoints; ++j) {
    double sum = 0.0;
    std::size_t c = 0;
    for (std::size_t n = 0; n < set.preds.size(); ++n) {
      if (set.vis[n][j] < 0.5) continue;
      sum += pixel_error(set, n, j);
      ++c;
    }
    r.joint_mpjpe[j] = c ? sum / static_cast<double>(c) : kNaN;
  }

  std::vector<double> scores, labels;
  scores.reserve(r.n_samples * kNumJoints);
  labels.reserve(r.n_samples * kNumJoints);
  for (std::size_t n = 0; n < r.n_samples; ++n) {
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      scores.push_back(vis_probs[n][j]);
      labels.push_back(set.vis[n][j] >= 0.5 ? 1.0 : 0.0);
    }
  }
  try {
    r.vis_map = visibility_map(scores, labels);
  } catch (const DataError&) {
    r.vis_map = kNaN;
  }
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    std::vector<double> s, l;
    for (std::size_t n = 0; n < r.n_samples; ++n) {
      s.push_back(scores[n * kNumJoints + j]);
      l.push_back(labels[n * kNumJoints + j]);
    }
    try {
      r.joint_ap[j] = visibility_map(s, l);
    } catch (const DataError&) {
      r.joint_ap[j] = kNaN;
    }
  }
  return r;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["pckh_05"] = num(pckh_05);
  j["pck_005"] = num(pck_005);
  j["pck_010"] = num(pck_010);
  j["mpjpe_px"] = num(mpjpe_px);
  j["vis_map"] = num(vis_map);
  j["n_samples"] = n_samples;
  j["head_fallbacks"] = head_fallbacks;
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (std::size_t k = 0; k < kNumJoints; ++k) {
    per[std::string(joint_name(k))] = {{"pckh_05", num(joint_pckh[k])},
                                       {"mpjpe_px", num(joint_mpjpe[k])},
                                       {"vis_ap", num(joint_ap[k])}};
  }
  j["per_joint"] = per;
  return j.dump(2) + "\n";
}

EvalReport EvalReport::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("eval report: ") + e.what());
  }
  try {
    EvalReport r;
    r.pckh_05 = read_num(j.at("pckh_05"));
    r.pck_005 = read_num(j.at("pck_005"));
    r.pck_010 = read_num(j.at("pck_010"));
    r.mpjpe_px = read_num(j.at("mpjpe_px"));
    r.vis_map = read_num(j.at("vis_map"));
    r.n_samples = j.at("n_samples").get<std::size_t>();
    r.head_fallbacks = j.value("head_fallbacks", std::size_t{0});
    if (j.contains("per_joint")) {
      const auto& per = j.at("per_joint");
      for (std::size_t k = 0; k < kNumJoints; ++k) {
        const auto& e = per.at(std::string(joint_name(k)));
        r.joint_pckh[k] = read_num(e.at("pckh_05"));
        r.joint_mpjpe[k] = read_num(e.at("mpjpe_px"));
        r.joint_ap[k] = read_num(e.at("vis_ap"));
      }
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("eval report: ") + e.what());
  }
}

}  // namespace posegen
