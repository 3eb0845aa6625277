#include "posegen/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "json.hpp"

#include "posegen/checkpoint.hpp"
#include "posegen/digest.hpp"
#include "posegen/error.hpp"
#include "posegen/kernels.hpp"
#include "posegen/synth.hpp"

namespace posegen {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---- config keys -------------------------------------------------------------

std::size_t as_size(const json& v, const std::string& key) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw ConfigError("config key '" + key + "' expects a non-negative integer");
  }
  return v.get<std::size_t>();
}

double as_double(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config key '" + key + "' expects a number");
  return v.get<double>();
}

bool as_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError("config key '" + key + "' expects true or false");
  return v.get<bool>();
}

struct KeyDef {
  const char* name;
  ojson (*get)(const TrainConfig&);
  void (*set)(TrainConfig&, const json&, const std::string&);
};

#define POSEGEN_SIZE_KEY(NAME, FIELD)                                              \
  KeyDef{NAME, [](const TrainConfig& c) { return ojson(c.FIELD); },                 \
         [](TrainConfig& c, const json& v, const std::string& k) { c.FIELD = as_size(v, k); }}
#define POSEGEN_DOUBLE_KEY(NAME, FIELD)                                            \
  KeyDef{NAME, [](const TrainConfig& c) { return ojson(c.FIELD); },                 \
         [](TrainConfig& c, const json& v, const std::string& k) { c.FIELD = as_double(v, k); }}
#define POSEGEN_BOOL_KEY(NAME, FIELD)                                              \
  KeyDef{NAME, [](const TrainConfig& c) { return ojson(c.FIELD); },                 \
         [](TrainConfig& c, const json& v, const std::string& k) { c.FIELD = as_bool(v, k); }}

const std::vector<KeyDef>& key_defs() {
  static const std::vector<KeyDef> defs = {
      POSEGEN_SIZE_KEY("epochs", epochs),
      POSEGEN_SIZE_KEY("batch_size", batch_size),
      POSEGEN_DOUBLE_KEY("learning_rate", learning_rate),
      POSEGEN_DOUBLE_KEY("adam_beta1", adam_beta1),
      POSEGEN_DOUBLE_KEY("adam_beta2", adam_beta2),
      POSEGEN_DOUBLE_KEY("adam_eps", adam_eps),
      POSEGEN_SIZE_KEY("seed", seed),
      POSEGEN_SIZE_KEY("eval_every", eval_every),
      POSEGEN_BOOL_KEY("use_contrastive", use_contrastive),
      POSEGEN_DOUBLE_KEY("lambda_inv", weights.lambda_inv),
      POSEGEN_DOUBLE_KEY("lambda_skel", weights.lambda_skel),
      POSEGEN_DOUBLE_KEY("lambda_con", weights.lambda_con),
      POSEGEN_DOUBLE_KEY("tau", weights.tau),
      POSEGEN_DOUBLE_KEY("epsilon", weights.epsilon),
      POSEGEN_SIZE_KEY("hidden_dim", model.hidden_dim),
      POSEGEN_SIZE_KEY("num_layers", model.num_layers),
      POSEGEN_SIZE_KEY("num_heads", model.num_heads),
      POSEGEN_DOUBLE_KEY("dropout_p", model.dropout_p),
      POSEGEN_SIZE_KEY("proj_dim", model.proj_dim),
      POSEGEN_SIZE_KEY("ffn_mult", model.ffn_mult),
      POSEGEN_SIZE_KEY("mlp_dim", model.mlp_dim),
      POSEGEN_SIZE_KEY("query_tokens", model.query_tokens),
      POSEGEN_BOOL_KEY("use_mlp", model.use_mlp),
      POSEGEN_BOOL_KEY("use_transformer", model.use_transformer),
      POSEGEN_BOOL_KEY("use_vis_head", model.use_vis_head),
  };
  return defs;
}

#undef POSEGEN_SIZE_KEY
#undef POSEGEN_DOUBLE_KEY
#undef POSEGEN_BOOL_KEY

const KeyDef* find_key(const std::string& key) {
  for (const auto& d : key_defs()) {
    if (key == d.name) return &d;
  }
  return nullptr;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += v[i];
  }
  return s;
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

// ---- training internals ------------------------------------------------------

struct Targets {
  std::vector<double> coords;
  std::vector<double> vis;
};

Targets gather_targets(const std::vector<PoseSample>& samples,
                       std::span<const std::size_t> idx) {
  Targets t;
  t.coords.reserve(idx.size() * 2 * kNumJoints);
  t.vis.reserve(idx.size() * kNumJoints);
  for (std::size_t i : idx) {
    const PoseSample& s = samples[i];
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      t.coords.push_back(s.pose[j].x);
      t.coords.push_back(s.pose[j].y);
      t.vis.push_back(s.visibility[j]);
    }
  }
  return t;
}

template <class T>
std::vector<double> to_double(const Tensor<T>& t) {
  return std::vector<double>(t.data.begin(), t.data.end());
}

template <class T>
Tensor<T> to_tensor(const std::vector<double>& v, const std::vector<std::size_t>& shape) {
  return Tensor<T>(shape, std::vector<T>(v.begin(), v.end()));
}

// Loss of one built graph; seeds the tape with dL/d(outputs) when asked.
template <class T>
LossBreakdown graph_loss(Tape<T>& tape, const typename PoseGenModel<T>::Graph& g,
                         const Targets& tgt, const LossWeights& w, bool seed) {
  const std::vector<double> coords = to_double(tape.value(g.coords));
  const std::vector<double> logits =
      g.has_vis ? to_double(tape.value(g.vis_logits)) : std::vector<double>{};
  const std::vector<double> ft = to_double(tape.value(g.f_text));
  const std::vector<double> fp = to_double(tape.value(g.f_pose));
  BatchPrediction pred;
  pred.batch = tape.value(g.coords).rows();
  pred.proj_dim = tape.value(g.f_text).cols();
  pred.coords = coords;
  pred.vis_logits = logits;
  pred.f_text = ft;
  pred.f_pose = fp;
  LossOptions opt;
  opt.include_vis = g.has_vis;
  BatchGradients grads;
  const LossBreakdown br =
      batch_loss(pred, BatchTarget{tgt.coords, tgt.vis}, w, opt, seed ? &grads : nullptr);
  if (seed) {
    tape.seed_grad(g.coords, to_tensor<T>(grads.coords, tape.value(g.coords).shape));
    if (g.has_vis) {
      tape.seed_grad(g.vis_logits, to_tensor<T>(grads.vis_logits, tape.value(g.vis_logits).shape));
    }
    if (w.lambda_con != 0.0) {
      tape.seed_grad(g.f_text, to_tensor<T>(grads.f_text, tape.value(g.f_text).shape));
      tape.seed_grad(g.f_pose, to_tensor<T>(grads.f_pose, tape.value(g.f_pose).shape));
    }
  }
  return br;
}

ojson breakdown_json(const LossBreakdown& b) {
  return ojson{{"coord", b.coord}, {"vis", b.vis}, {"inv", b.inv},
               {"skel", b.skel}, {"con", b.con}, {"total", b.total}};
}

ojson report_json(const EvalReport& r) { return ojson::parse(r.to_json()); }

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

// ---- config ------------------------------------------------------------------

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and >= 0");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  weights.validate();
  model.validate();
}

const std::vector<std::string>& train_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& d : key_defs()) k.emplace_back(d.name);
    return k;
  }();
  return keys;
}

std::string train_config_to_json(const TrainConfig& c) {
  ojson j = ojson::object();
  for (const auto& d : key_defs()) j[d.name] = d.get(c);
  return j.dump(2) + "\n";
}

TrainConfig parse_train_config(const std::string& json_text,
                               const std::vector<std::string>& extra_keys,
                               std::map<std::string, std::string>* extras) {
  const json j = parse_json(json_text, "config");
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  TrainConfig c;
  for (const auto& [key, value] : j.items()) {
    if (const KeyDef* d = find_key(key)) {
      d->set(c, value, key);
    } else if (std::find(extra_keys.begin(), extra_keys.end(), key) != extra_keys.end()) {
      if (extras) (*extras)[key] = value.dump();
    } else {
      std::vector<std::string> valid = train_config_keys();
      valid.insert(valid.end(), extra_keys.begin(), extra_keys.end());
      throw ConfigError("unknown config key '" + key + "'; valid keys: " + join(valid));
    }
  }
  c.validate();
  return c;
}

void set_train_config_value(TrainConfig& c, const std::string& key,
                            const std::string& json_value) {
  const KeyDef* d = find_key(key);
  if (!d) {
    throw ConfigError("unknown config key '" + key + "'; valid keys: " +
                      join(train_config_keys()));
  }
  d->set(c, parse_json(json_value, key.c_str()), key);
}

std::string get_train_config_value(const TrainConfig& c, const std::string& key) {
  const KeyDef* d = find_key(key);
  if (!d) throw ConfigError("unknown config key '" + key + "'");
  return d->get(c).dump();
}

// ---- data --------------------------------------------------------------------

Dataset make_dataset(std::vector<PoseSample> samples, const EmbeddingTable* table,
                     const ResolveOptions& opts) {
  Dataset d;
  d.embeddings.reserve(samples.size());
  for (const auto& s : samples) d.embeddings.push_back(resolve_embedding(s, table, opts).embedding);
  d.samples = std::move(samples);
  return d;
}

Predictions predict(PoseGenModel<float>& model, const std::vector<TextEmbedding>& embeddings,
                    std::size_t chunk) {
  Predictions out;
  out.coords.reserve(embeddings.size());
  out.vis_probs.reserve(embeddings.size());
  Rng unused(0);
  for (std::size_t start = 0; start < embeddings.size(); start += chunk) {
    const std::size_t n = std::min(chunk, embeddings.size() - start);
    const auto outs = batch_forward(
        model, std::span<const TextEmbedding>(embeddings.data() + start, n), Mode::kEval, unused);
    for (const auto& o : outs) {
      out.coords.push_back(o.coords);
      std::array<double, kNumJoints> p{};
      for (std::size_t j = 0; j < kNumJoints; ++j) {
        const double z = o.vis_logits[j];
        p[j] = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      }
      out.vis_probs.push_back(p);
    }
  }
  return out;
}

EvalReport evaluate_model(PoseGenModel<float>& model, const Dataset& data) {
  if (data.size() == 0) throw ConfigError("cannot evaluate on an empty split");
  const Predictions p = predict(model, data.embeddings);
  std::vector<Pose> gts;
  std::vector<VisibilityVector> vis;
  gts.reserve(data.size());
  vis.reserve(data.size());
  for (const auto& s : data.samples) {
    gts.push_back(s.pose);
    vis.push_back(s.visibility);
  }
  EvalSet set{p.coords, gts, vis, static_cast<double>(data.samples.front().source_width),
              static_cast<double>(data.samples.front().source_height)};
  return evaluate(set, p.vis_probs);
}

// ---- training ----------------------------------------------------------------

TrainResult train(const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.size() == 0) throw ConfigError("train split is empty");
  if (val_set.size() == 0) throw ConfigError("validation split is empty");
  if (train_set.embeddings.size() != train_set.size()) {
    throw ConfigError("train split lacks embeddings");
  }

  PoseGenConfig mc = config.model;
  mc.seed = config.seed;
  PoseGenModel<float> model(mc);
  TrainResult result{model, model, 0, {}};

  Rng root(config.seed);
  Rng order_rng = root.fork(1);
  Rng drop_rng = root.fork(2);

  LossWeights w = config.weights;
  if (!config.use_contrastive) w.lambda_con = 0.0;

  auto& params = model.parameters();
  std::vector<std::vector<float>> m(params.size()), v(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i].assign(params[i].size(), 0.0f);
    v[i].assign(params[i].size(), 0.0f);
  }
  const auto& k = kernels::active();
  std::uint64_t step = 0;
  double best_mpjpe = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<TextEmbedding> batch_emb;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(std::span<std::size_t>(order));
    EpochRecord rec;
    rec.epoch = epoch;
    std::size_t batch_id = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_id) {
      const std::size_t n = std::min(config.batch_size, order.size() - start);
      const std::span<const std::size_t> idx(order.data() + start, n);
      batch_emb.clear();
      for (std::size_t i : idx) batch_emb.push_back(train_set.embeddings[i]);
      const Targets tgt = gather_targets(train_set.samples, idx);

      model.zero_grad();
      Tape<float> tape;
      LossBreakdown br;
      try {
        const auto x = tape.constant(stack_embeddings<float>(batch_emb));
        const auto g = model.build(tape, x, Mode::kTrain, drop_rng);
        br = graph_loss<float>(tape, g, tgt, w, true);
        if (!std::isfinite(br.total)) throw NumericError("non-finite loss");
        tape.backward();
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch_id));
      }

      ++step;
      const float bc1 = static_cast<float>(1.0 - std::pow(config.adam_beta1, static_cast<double>(step)));
      const float bc2 = static_cast<float>(1.0 - std::pow(config.adam_beta2, static_cast<double>(step)));
      for (std::size_t i = 0; i < params.size(); ++i) {
        k.adam(params[i].size(), params[i].value.ptr(), params[i].grad.ptr(), m[i].data(),
               v[i].data(), static_cast<float>(config.learning_rate),
               static_cast<float>(config.adam_beta1), static_cast<float>(config.adam_beta2),
               static_cast<float>(config.adam_eps), bc1, bc2);
      }

      const double wn = static_cast<double>(n) / static_cast<double>(order.size());
      rec.train.coord += wn * br.coord;
      rec.train.vis += wn * br.vis;
      rec.train.inv += wn * br.inv;
      rec.train.skel += wn * br.skel;
      rec.train.con += wn * br.con;
      rec.train.total += wn * br.total;
    }

    if (epoch % config.eval_every == 0 || epoch == config.epochs) {
      rec.evaluated = true;
      rec.val = evaluate_model(model, val_set);
      if (rec.val.mpjpe_px < best_mpjpe) {
        best_mpjpe = rec.val.mpjpe_px;
        result.best = model;
        result.best_epoch = epoch;
      }
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  model.zero_grad();
  result.model = std::move(model);
  if (result.best_epoch == 0) result.best = result.model;
  return result;
}

std::string history_to_json(const std::vector<EpochRecord>& history) {
  ojson arr = ojson::array();
  for (const auto& r : history) {
    ojson e;
    e["epoch"] = r.epoch;
    e["train"] = breakdown_json(r.train);
    e["val"] = r.evaluated ? report_json(r.val) : ojson(nullptr);
    arr.push_back(std::move(e));
  }
  return arr.dump(2) + "\n";
}

// ---- checkpoints -------------------------------------------------------------

std::string model_sidecar_json(const PoseGenConfig& c) {
  ojson j;
  j["format"] = "PGCK1";
  j["model"] = {{"hidden_dim", c.hidden_dim}, {"num_layers", c.num_layers},
                {"num_heads", c.num_heads},   {"dropout_p", c.dropout_p},
                {"proj_dim", c.proj_dim},     {"ffn_mult", c.ffn_mult},
                {"mlp_dim", c.mlp_dim},       {"query_tokens", c.query_tokens},
                {"use_mlp", c.use_mlp},       {"use_transformer", c.use_transformer},
                {"use_vis_head", c.use_vis_head}, {"seed", c.seed}};
  j["text_embedding_dim"] = kTextDim;
  j["normalization"] = {{"width", 256}, {"height", 256}, {"origin", "center"},
                        {"y_axis", "down"}, {"coord_clamp", kCoordClamp}};
  return j.dump(2) + "\n";
}

PoseGenConfig parse_model_sidecar(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint sidecar: ") + e.what());
  }
  try {
    if (j.at("format") != "PGCK1") throw DataError("checkpoint sidecar: unsupported format");
    if (j.at("text_embedding_dim").get<std::size_t>() != kTextDim) {
      throw DataError("dimension mismatch: checkpoint expects " +
                      j.at("text_embedding_dim").dump() + "-d embeddings, encoder gives 768");
    }
    const json& m = j.at("model");
    PoseGenConfig c;
    c.hidden_dim = m.at("hidden_dim").get<std::size_t>();
    c.num_layers = m.at("num_layers").get<std::size_t>();
    c.num_heads = m.at("num_heads").get<std::size_t>();
    c.dropout_p = m.at("dropout_p").get<double>();
    c.proj_dim = m.at("proj_dim").get<std::size_t>();
    c.ffn_mult = m.at("ffn_mult").get<std::size_t>();
    c.mlp_dim = m.at("mlp_dim").get<std::size_t>();
    c.query_tokens = m.at("query_tokens").get<std::size_t>();
    c.use_mlp = m.at("use_mlp").get<bool>();
    c.use_transformer = m.at("use_transformer").get<bool>();
    c.use_vis_head = m.at("use_vis_head").get<bool>();
    c.seed = m.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint sidecar: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint sidecar: ") + e.what());
  }
}

void save_model(const fs::path& path, const PoseGenModel<float>& model) {
  save_checkpoint(path, model.to_named());
  write_file(fs::path(path.string() + ".json"), model_sidecar_json(model.config()));
}

PoseGenModel<float> load_model(const fs::path& path) {
  const PoseGenConfig c = parse_model_sidecar(read_file(fs::path(path.string() + ".json")));
  PoseGenModel<float> model(c);
  model.load_named(load_checkpoint(path));
  return model;
}

std::string RunManifest::to_json() const {
  ojson j;
  j["config_sha256"] = config_sha256;
  j["corpus_sha256"] = corpus_sha256;
  j["checkpoint_git_sha1"] = checkpoint_git_sha1;
  j["kernels"] = kernels;
  j["overrides"] = overrides;
  return j.dump(2) + "\n";
}

// ---- sweep and ablation -------------------------------------------------------

SweepGrid SweepGrid::standard() {
  SweepGrid g;
  g.hidden_dim = {384, 512, 640};
  g.num_layers = {4, 6, 8};
  g.num_heads = {4, 8};
  g.dropout_p = {0.05, 0.10, 0.20};
  g.lambda_inv = {0.25, 0.50, 1.00};
  g.lambda_con = {0.05, 0.10, 0.20};
  g.tau = {0.05, 0.07};
  return g;
}

std::size_t SweepGrid::size() const {
  return hidden_dim.size() + num_layers.size() + num_heads.size() + dropout_p.size() +
         lambda_inv.size() + lambda_con.size() + tau.size();
}

std::vector<std::pair<std::string, TrainConfig>> SweepGrid::expand(const TrainConfig& base) const {
  std::vector<std::pair<std::string, TrainConfig>> out;
  const auto add = [&](const char* factor, double value, auto&& mutate) {
    TrainConfig c = base;
    mutate(c);
    try {
      c.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("sweep candidate ") + factor + "=" + fmt_g(value) +
                        ": " + e.what());
    }
    out.emplace_back(std::string(factor) + "=" + fmt_g(value), c);
  };
  for (auto x : hidden_dim) add("hidden_dim", double(x), [x](TrainConfig& c) { c.model.hidden_dim = x; });
  for (auto x : num_layers) add("num_layers", double(x), [x](TrainConfig& c) { c.model.num_layers = x; });
  for (auto x : num_heads) add("num_heads", double(x), [x](TrainConfig& c) { c.model.num_heads = x; });
  for (auto x : dropout_p) add("dropout_p", x, [x](TrainConfig& c) { c.model.dropout_p = x; });
  for (auto x : lambda_inv) add("lambda_inv", x, [x](TrainConfig& c) { c.weights.lambda_inv = x; });
  for (auto x : lambda_con) add("lambda_con", x, [x](TrainConfig& c) { c.weights.lambda_con = x; });
  for (auto x : tau) add("tau", x, [x](TrainConfig& c) { c.weights.tau = x; });
  return out;
}

namespace {

RunRow run_one(const std::string& label, const TrainConfig& cfg, const Dataset& train_set,
               const Dataset& val_set, const Dataset& report_set) {
  RunRow row;
  row.label = label;
  row.seed = cfg.seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    TrainResult r = train(train_set, val_set, cfg);
    row.best_epoch = r.best_epoch;
    row.report = evaluate_model(r.best, report_set);
    row.ok = true;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  row.wall_seconds = seconds_since(t0);
  return row;
}

}  // namespace

RunTable sweep(const Dataset& train_set, const Dataset& val_set, const Dataset& report_set,
               const SweepGrid& grid, const TrainConfig& base, const RowCallback& on_row) {
  RunTable t;
  t.kind = "sweep";
  for (const auto& [label, cfg] : grid.expand(base)) {
    RunRow row = run_one(label, cfg, train_set, val_set, report_set);
    const auto eq = label.find('=');
    row.factor = label.substr(0, eq);
    row.value = std::stod(label.substr(eq + 1));
    if (on_row) on_row(row);
    t.rows.push_back(std::move(row));
  }
  return t;
}

void AblationFlags::validate() const {
  if (!use_contrastive && !use_mlp && !use_transformer && !use_vis_head) {
    throw ConfigError("ablation flags disable every component");
  }
}

std::string AblationFlags::label() const {
  const auto b = [](bool x) { return x ? "on" : "off"; };
  return std::string("contrastive=") + b(use_contrastive) + " mlp=" + b(use_mlp) +
         " transformer=" + b(use_transformer) + " vis_head=" + b(use_vis_head);
}

TrainConfig AblationFlags::apply(TrainConfig base) const {
  validate();
  base.use_contrastive = use_contrastive;
  base.model.use_mlp = use_mlp;
  base.model.use_transformer = use_transformer;
  base.model.use_vis_head = use_vis_head;
  return base;
}

std::vector<AblationFlags> ablation_preset() {
  return {
      {false, false, true, true},
      {false, true, false, true},
      {false, true, true, false},
      {false, true, true, true},
      {true, true, true, true},
  };
}

RunTable ablate(const Dataset& train_set, const Dataset& val_set, const Dataset& report_set,
                const std::vector<AblationFlags>& flags, const TrainConfig& base,
                const RowCallback& on_row) {
  if (flags.empty()) throw ConfigError("ablation list is empty");
  RunTable t;
  t.kind = "ablation";
  for (const auto& f : flags) {
    RunRow row;
    try {
      row = run_one(f.label(), f.apply(base), train_set, val_set, report_set);
    } catch (const ConfigError& e) {
      row.label = f.label();
      row.error = e.what();
    }
    if (on_row) on_row(row);
    t.rows.push_back(std::move(row));
  }
  return t;
}

long RunTable::best_row() const {
  long best = -1;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].ok) continue;
    if (best < 0 || rows[i].report.mpjpe_px < rows[static_cast<std::size_t>(best)].report.mpjpe_px) {
      best = static_cast<long>(i);
    }
  }
  return best;
}

std::string RunTable::to_json() const {
  ojson j;
  j["kind"] = kind;
  j["split"] = split;
  j["selection"] = "lowest mpjpe_px";
  j["best_row"] = best_row();
  ojson arr = ojson::array();
  for (const auto& r : rows) {
    ojson e;
    e["label"] = r.label;
    e["factor"] = r.factor;
    e["value"] = r.value;
    e["seed"] = r.seed;
    e["ok"] = r.ok;
    e["error"] = r.error;
    e["best_epoch"] = r.best_epoch;
    e["report"] = r.ok ? report_json(r.report) : ojson(nullptr);
    arr.push_back(std::move(e));
  }
  j["rows"] = std::move(arr);
  return j.dump(2) + "\n";
}

RunTable RunTable::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("run table: ") + e.what());
  }
  try {
    RunTable t;
    t.kind = j.at("kind").get<std::string>();
    t.split = j.at("split").get<std::string>();
    for (const auto& e : j.at("rows")) {
      RunRow r;
      r.label = e.at("label").get<std::string>();
      r.factor = e.at("factor").get<std::string>();
      r.value = e.at("value").get<double>();
      r.seed = e.at("seed").get<std::uint64_t>();
      r.ok = e.at("ok").get<bool>();
      r.error = e.at("error").get<std::string>();
      r.best_epoch = e.at("best_epoch").get<std::size_t>();
      if (r.ok) r.report = EvalReport::from_json(e.at("report").dump());
      t.rows.push_back(std::move(r));
    }
    return t;
  } catch (const json::exception& e) {
    throw DataError(std::string("run table: ") + e.what());
  }
}

std::string RunTable::timing_json() const {
  ojson arr = ojson::array();
  for (const auto& r : rows) arr.push_back({{"label", r.label}, {"wall_seconds", r.wall_seconds}});
  return ojson{{"kind", kind}, {"rows", arr}}.dump(2) + "\n";
}

std::string RunTable::to_text() const {
  std::string out;
  char buf[256];
  const bool sweep_kind = kind == "sweep";
  std::snprintf(buf, sizeof buf, "%-58s %8s %9s %9s %9s %9s\n", "setting",
                sweep_kind ? "PCKh" : "PCK@0.05", sweep_kind ? "PCK@0.05" : "PCKh",
                "PCK@0.10", "MPJPE", "Vis mAP");
  out += buf;
  for (const auto& r : rows) {
    if (!r.ok) {
      std::snprintf(buf, sizeof buf, "%-58s failed: %s\n", r.label.c_str(), r.error.c_str());
    } else {
      const auto& e = r.report;
      std::snprintf(buf, sizeof buf, "%-58s %8.3f %9.3f %9.3f %9.3f %9.3f\n", r.label.c_str(),
                    sweep_kind ? e.pckh_05 : e.pck_005, sweep_kind ? e.pck_005 : e.pckh_05,
                    e.pck_010, e.mpjpe_px, e.vis_map);
    }
    out += buf;
  }
  return out;
}

// ---- gradient check -----------------------------------------------------------

std::string GradCheckReport::to_string() const {
  std::string out;
  char buf[160];
  for (const auto& g : groups) {
    std::snprintf(buf, sizeof buf, "%-28s %-4s checked=%-7zu max_rel_err=%.3e\n",
                  g.name.c_str(), g.pass ? "ok" : "FAIL", g.checked, g.max_rel_err);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%s (%zu parameters%s)\n", pass ? "PASS" : "FAIL",
                parameters, sampled ? ", sampled entries" : "");
  out += buf;
  return out;
}

GradCheckReport grad_check(const PoseGenConfig& config, const GradCheckOptions& opt) {
  if (opt.batch == 0) throw ConfigError("grad_check: batch must be >= 1");
  PoseGenModel<double> model(config);

  // Deterministic batch: distinct templates, jittered away from the oracle so
  // every term has a non-zero gradient, one extra occluded joint per sample.
  Rng data_rng(opt.seed);
  std::vector<PoseSample> samples;
  std::vector<TextEmbedding> emb;
  for (std::size_t i = 0; i < opt.batch; ++i) {
    const PoseTemplate t = template_at((opt.seed * 131 + i * 97) % kNumTemplates);
    auto [pose, vis] = oracle_pose(t);
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      if (vis[j] == 0.0) continue;
      pose[j].x += data_rng.normal(0.0, 0.05);
      pose[j].y += data_rng.normal(0.0, 0.05);
    }
    const std::size_t hidden = (4 + 3 * i) % kNumJoints;
    vis[hidden] = 0.0;
    pose[hidden] = {0.0, 0.0};
    PoseSample s;
    s.caption = caption_of(t, i % kMaxParaphrases);
    s.pose = pose;
    s.visibility = vis;
    emb.push_back(embed_hashed(s.caption));
    samples.push_back(std::move(s));
  }
  std::vector<std::size_t> all(opt.batch);
  std::iota(all.begin(), all.end(), 0);
  const Targets tgt = gather_targets(samples, all);
  const Tensor<double> x_value = stack_embeddings<double>(emb);

  LossWeights w = opt.weights;
  if (!opt.use_contrastive) w.lambda_con = 0.0;

  const auto loss = [&](bool backward) {
    Tape<double> tape;
    Rng drop(opt.seed + 1);
    const auto x = tape.constant(x_value);
    const auto g = model.build(tape, x, Mode::kTrain, drop);
    const LossBreakdown br = graph_loss<double>(tape, g, tgt, w, backward);
    if (backward) tape.backward();
    return br.total;
  };

  model.zero_grad();
  loss(true);

  GradCheckReport rep;
  rep.parameters = model.parameter_count();
  rep.sampled = rep.parameters > opt.max_full_params;
  Rng pick(opt.seed + 2);
  rep.pass = true;
  for (auto& p : model.parameters()) {
    std::vector<std::size_t> entries;
    if (!rep.sampled || p.size() <= opt.sample_per_group) {
      entries.resize(p.size());
      std::iota(entries.begin(), entries.end(), 0);
    } else {
      // Largest analytic entries plus a uniform sample.
      std::vector<std::size_t> bymag(p.size());
      std::iota(bymag.begin(), bymag.end(), 0);
      const std::size_t top = std::min<std::size_t>(8, p.size());
      std::partial_sort(bymag.begin(), bymag.begin() + static_cast<long>(top), bymag.end(),
                        [&](std::size_t a, std::size_t b) {
                          return std::abs(p.grad.data[a]) > std::abs(p.grad.data[b]);
                        });
      entries.assign(bymag.begin(), bymag.begin() + static_cast<long>(top));
      for (std::size_t s = 0; s < opt.sample_per_group; ++s) entries.push_back(pick.below(p.size()));
      std::sort(entries.begin(), entries.end());
      entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
    }
    GradGroup g;
    g.name = p.name;
    for (std::size_t e : entries) {
      const double orig = p.value.data[e];
      p.value.data[e] = orig + opt.step;
      const double fp = loss(false);
      p.value.data[e] = orig - opt.step;
      const double fm = loss(false);
      p.value.data[e] = orig;
      const double numeric = (fp - fm) / (2.0 * opt.step);
      const double analytic = p.grad.data[e];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), opt.rel_floor});
      g.max_rel_err = std::max(g.max_rel_err, std::abs(analytic - numeric) / denom);
      ++g.checked;
    }
    g.pass = g.max_rel_err < opt.tolerance;
    rep.pass = rep.pass && g.pass;
    rep.groups.push_back(std::move(g));
  }
  return rep;
}

}  // namespace posegen
