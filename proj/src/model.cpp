#include "posegen/model.hpp"

#include <cmath>

namespace posegen {

void PoseGenConfig::validate() const {
  if (hidden_dim == 0 || num_heads == 0 || hidden_dim % num_heads != 0) {
    throw ConfigError("hidden_dim (" + std::to_string(hidden_dim) +
                      ") must be divisible by num_heads (" +
                      std::to_string(num_heads) + ")");
  }
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) {
    throw ConfigError("dropout_p must lie in [0, 1)");
  }
  if (proj_dim < 8) throw ConfigError("proj_dim must be >= 8");
  if (ffn_mult == 0) throw ConfigError("ffn_mult must be >= 1");
  if (mlp_dim == 0) throw ConfigError("mlp_dim must be >= 1");
  if (hidden_dim < 2) throw ConfigError("hidden_dim must be >= 2");
}

template <class T>
PoseGenModel<T>::PoseGenModel(const PoseGenConfig& config) : config_(config) {
  config_.validate();
  const std::size_t h = config_.hidden_dim;
  if (config_.use_mlp) {
    mlp_fc1_ = add_linear("mlp.fc1", kTextDim, config_.mlp_dim);
    mlp_fc2_ = add_linear("mlp.fc2", config_.mlp_dim, h);
  } else {
    mlp_proj_ = add_linear("mlp.proj", kTextDim, h);
  }
  pos_ = add_param("pos", {h});
  if (config_.use_transformer) {
    if (config_.query_tokens > 0) {
      query_ = add_param("encoder.query", {config_.query_tokens, h});
    }
    for (std::size_t l = 0; l < config_.num_layers; ++l) {
      const std::string p = "encoder." + std::to_string(l) + ".";
      Block b;
      b.ln1 = add_norm(p + "ln1", h);
      b.q = add_linear(p + "attn.q", h, h);
      b.k = add_linear(p + "attn.k", h, h);
      b.v = add_linear(p + "attn.v", h, h);
      b.o = add_linear(p + "attn.o", h, h);
      b.ln2 = add_norm(p + "ln2", h);
      b.fc1 = add_linear(p + "ffn.fc1", h, config_.ffn_mult * h);
      b.fc2 = add_linear(p + "ffn.fc2", config_.ffn_mult * h, h);
      blocks_.push_back(b);
    }
    ln_f_ = add_norm("encoder.ln_f", h);
  }
  pose_head_ = add_linear("pose_head", h, 2 * kNumJoints);
  if (config_.use_vis_head) vis_head_ = add_linear("vis_head", h, kNumJoints);
  text_proj_ = add_linear("text_proj", kTextDim, config_.proj_dim);
  text_ln_ = add_norm("text_proj.ln", config_.proj_dim);
  pose_proj_ = add_linear("pose_proj", h, config_.proj_dim);
  pose_ln_ = add_norm("pose_proj.ln", config_.proj_dim);
  initialize();
}

template <class T>
std::size_t PoseGenModel<T>::add_param(std::string name,
                                       std::vector<std::size_t> shape) {
  params_.emplace_back(std::move(name), std::move(shape));
  return params_.size() - 1;
}

template <class T>
typename PoseGenModel<T>::Linear PoseGenModel<T>::add_linear(
    const std::string& name, std::size_t in, std::size_t out) {
  const std::size_t w = add_param(name + ".weight", {in, out});
  const std::size_t b = add_param(name + ".bias", {out});
  return {w, b};
}

template <class T>
typename PoseGenModel<T>::Norm PoseGenModel<T>::add_norm(const std::string& name,
                                                        std::size_t d) {
  const std::size_t g = add_param(name + ".gain", {d});
  const std::size_t b = add_param(name + ".bias", {d});
  return {g, b};
}

template <class T>
void PoseGenModel<T>::initialize() {
  Rng rng(config_.seed);
  for (auto& p : params_) {
    const std::string& n = p.name;
    auto ends_with = [&](std::string_view suffix) {
      return n.size() >= suffix.size() &&
             n.compare(n.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (ends_with(".weight")) {
      const double fan_in = static_cast<double>(p.value.shape[0]);
      const double fan_out = static_cast<double>(p.value.shape[1]);
      const double bound = std::sqrt(6.0 / (fan_in + fan_out));
      for (auto& v : p.value.data) v = static_cast<T>(rng.uniform(-bound, bound));
    } else if (ends_with(".gain")) {
      std::fill(p.value.data.begin(), p.value.data.end(), T(1));
    } else if (n == "encoder.query") {
      // Distinct small tokens; zeros would make them indistinguishable.
      for (auto& v : p.value.data) v = static_cast<T>(rng.uniform(-0.02, 0.02));
    }
    // Biases and the positional vector stay zero.
  }
}

template <class T>
std::size_t PoseGenModel<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

template <class T>
std::size_t PoseGenModel<T>::parameter_count(const PoseGenConfig& c) {
  const std::size_t h = c.hidden_dim, P = c.proj_dim, D = kTextDim;
  std::size_t n = 0;
  n += c.use_mlp ? (D * c.mlp_dim + c.mlp_dim + c.mlp_dim * h + h) : (D * h + h);
  n += h;  // positional vector
  if (c.use_transformer) {
    n += c.query_tokens * h;
    const std::size_t f = c.ffn_mult * h;
    const std::size_t per_layer =
        4 * h + 4 * (h * h + h) + (h * f + f) + (f * h + h);
    n += c.num_layers * per_layer + 2 * h;
  }
  n += h * 2 * kNumJoints + 2 * kNumJoints;
  if (c.use_vis_head) n += h * kNumJoints + kNumJoints;
  n += D * P + P + 2 * P;
  n += h * P + P + 2 * P;
  return n;
}

template <class T>
Parameter<T>* PoseGenModel<T>::find(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

template <class T>
void PoseGenModel<T>::zero_grad() {
  for (auto& p : params_) {
    if (p.grad.shape != p.value.shape) {
      p.grad = Tensor<T>(p.value.shape);
    } else {
      p.grad.zero();
    }
  }
}

template <class T>
typename Tape<T>::Id PoseGenModel<T>::linear(Tape<T>& tape,
                                             typename Tape<T>::Id x,
                                             const Linear& l) {
  return tape.affine(x, tape.param(params_[l.w]), tape.param(params_[l.b]));
}

template <class T>
typename Tape<T>::Id PoseGenModel<T>::norm(Tape<T>& tape,
                                           typename Tape<T>::Id x,
                                           const Norm& n) {
  return tape.layer_norm(x, tape.param(params_[n.g]), tape.param(params_[n.b]));
}

template <class T>
typename PoseGenModel<T>::Graph PoseGenModel<T>::build(
    Tape<T>& tape, typename Tape<T>::Id embeddings, Mode mode, Rng& rng) {
  using Id = typename Tape<T>::Id;
  const bool train = mode == Mode::kTrain;
  const double p = config_.dropout_p;
  if (tape.value(embeddings).cols() != kTextDim) {
    throw ShapeError("embedding width must be 768");
  }

  tape.set_scope("mlp");
  Id h;
  if (config_.use_mlp) {
    h = tape.gelu(linear(tape, embeddings, mlp_fc1_));
    h = linear(tape, h, mlp_fc2_);
  } else {
    h = linear(tape, embeddings, mlp_proj_);
  }
  h = tape.dropout(h, p, train, rng);
  h = tape.add_row(h, tape.param(params_[pos_]));

  if (config_.use_transformer) {
    std::size_t seq = 1;
    if (config_.query_tokens > 0) {
      h = tape.prepend_tokens(h, tape.param(params_[query_]));
      seq = config_.query_tokens + 1;
    }
    for (std::size_t l = 0; l < blocks_.size(); ++l) {
      const Block& b = blocks_[l];
      tape.set_scope("encoder." + std::to_string(l) + ".attn");
      const Id a = norm(tape, h, b.ln1);
      const Id v = linear(tape, a, b.v);
      Id att;
      if (seq == 1) {
        // One token: the softmax weight is exactly 1 and the output is the
        // value row; the query/key projections cannot affect anything.
        att = v;
      } else {
        att = tape.attention(linear(tape, a, b.q), linear(tape, a, b.k), v, seq,
                             config_.num_heads);
      }
      Id o = linear(tape, att, b.o);
      o = tape.dropout(o, p, train, rng);
      h = tape.add(h, o);

      tape.set_scope("encoder." + std::to_string(l) + ".ffn");
      Id f = norm(tape, h, b.ln2);
      f = tape.gelu(linear(tape, f, b.fc1));
      f = linear(tape, f, b.fc2);
      f = tape.dropout(f, p, train, rng);
      h = tape.add(h, f);
    }
    tape.set_scope("encoder.ln_f");
    h = norm(tape, h, ln_f_);
    if (seq > 1) h = tape.mean_pool(h, seq);
  }

  Graph g{};
  g.x_trans = h;
  tape.set_scope("heads");
  g.coords = tape.clamp(linear(tape, h, pose_head_), static_cast<T>(-kCoordClamp),
                        static_cast<T>(kCoordClamp));
  g.has_vis = config_.use_vis_head;
  if (g.has_vis) g.vis_logits = linear(tape, h, vis_head_);
  tape.set_scope("text_proj");
  g.f_text = tape.l2_normalize(norm(tape, linear(tape, embeddings, text_proj_), text_ln_));
  tape.set_scope("pose_proj");
  g.f_pose = tape.l2_normalize(norm(tape, linear(tape, h, pose_proj_), pose_ln_));
  tape.set_scope("");
  return g;
}

template <class T>
std::vector<NamedTensor> PoseGenModel<T>::to_named() const {
  std::vector<NamedTensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back({p.name, p.value.template cast<float>()});
  return out;
}

template <class T>
void PoseGenModel<T>::load_named(const std::vector<NamedTensor>& named) {
  if (named.size() != params_.size()) {
    throw DataError("checkpoint has " + std::to_string(named.size()) +
                    " parameters, configuration expects " +
                    std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < named.size(); ++i) {
    if (named[i].name != params_[i].name ||
        named[i].tensor.shape != params_[i].value.shape) {
      throw DataError("checkpoint parameter mismatch at '" + named[i].name +
                      "' (expected '" + params_[i].name + "' " +
                      Tensor<T>::shape_string(params_[i].value.shape) + ")");
    }
    params_[i].value = named[i].tensor.template cast<T>();
  }
}

template class PoseGenModel<float>;
template class PoseGenModel<double>;

template <class T>
Tensor<T> stack_embeddings(std::span<const TextEmbedding> embeddings) {
  if (embeddings.empty()) throw ConfigError("empty batch");
  Tensor<T> out({embeddings.size(), kTextDim});
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    if (embeddings[i].values.size() != kTextDim) {
      throw ShapeError("embedding dimension " +
                       std::to_string(embeddings[i].values.size()) + " != 768");
    }
    std::copy(embeddings[i].values.begin(), embeddings[i].values.end(),
              out.data.begin() + i * kTextDim);
  }
  return out;
}

template Tensor<float> stack_embeddings<float>(std::span<const TextEmbedding>);
template Tensor<double> stack_embeddings<double>(std::span<const TextEmbedding>);

template <class T>
std::vector<ModelOutput> collect_outputs(
    const Tape<T>& tape, const typename PoseGenModel<T>::Graph& g) {
  const Tensor<T>& coords = tape.value(g.coords);
  const Tensor<T>& ft = tape.value(g.f_text);
  const Tensor<T>& fp = tape.value(g.f_pose);
  const std::size_t batch = coords.rows();
  std::vector<ModelOutput> out(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    ModelOutput& o = out[b];
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      o.coords[j] = {static_cast<double>(coords.data[b * 36 + 2 * j]),
                     static_cast<double>(coords.data[b * 36 + 2 * j + 1])};
      o.vis_logits[j] = g.has_vis
                            ? static_cast<double>(tape.value(g.vis_logits).data[b * kNumJoints + j])
                            : kAlwaysVisibleLogit;
    }
    o.f_text.assign(ft.row(b).begin(), ft.row(b).end());
    o.f_pose.assign(fp.row(b).begin(), fp.row(b).end());
  }
  return out;
}

template std::vector<ModelOutput> collect_outputs<float>(
    const Tape<float>&, const PoseGenModel<float>::Graph&);
template std::vector<ModelOutput> collect_outputs<double>(
    const Tape<double>&, const PoseGenModel<double>::Graph&);

std::vector<ModelOutput> batch_forward(PoseGenModel<float>& model,
                                       std::span<const TextEmbedding> batch,
                                       Mode mode, Rng& rng) {
  Tape<float> tape;
  const auto x = tape.constant(stack_embeddings<float>(batch));
  const auto g = model.build(tape, x, mode, rng);
  return collect_outputs<float>(tape, g);
}

ModelOutput forward(PoseGenModel<float>& model, const TextEmbedding& e_c,
                    Mode mode, Rng& rng) {
  return batch_forward(model, std::span<const TextEmbedding>(&e_c, 1), mode, rng)
      .front();
}

}  // namespace posegen
