#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "posegen/checkpoint.hpp"
#include "posegen/rng.hpp"
#include "posegen/skeleton.hpp"
#include "posegen/tape.hpp"
#include "posegen/textenc.hpp"

namespace posegen {

// Output coordinates are clamped to this box at the pose head.
inline constexpr double kCoordClamp = 1.5;
// Logit reported for every joint when the visibility head is disabled, so
// that sigmoid(logit) rounds to exactly 1.
inline constexpr double kAlwaysVisibleLogit = 40.0;

struct PoseGenConfig {
  std::size_t hidden_dim = 512;
  std::size_t num_layers = 6;
  std::size_t num_heads = 8;
  double dropout_p = 0.10;
  std::size_t proj_dim = 256;
  std::size_t ffn_mult = 4;
  std::uint64_t seed = 0;
  // Width of the projector MLP's inner layer.
  std::size_t mlp_dim = 1024;
  // Learned tokens prepended to the sequence; 0 keeps the single-token
  // encoder input.
  std::size_t query_tokens = 0;
  // Architecture switches for the ablation harness.
  bool use_mlp = true;
  bool use_transformer = true;
  bool use_vis_head = true;

  // Throws ConfigError.
  void validate() const;
  friend bool operator==(const PoseGenConfig&, const PoseGenConfig&) = default;
};

enum class Mode { kTrain, kEval };

// Value-level result of one forward pass.
struct ModelOutput {
  Pose coords;
  std::array<double, kNumJoints> vis_logits{};
  std::vector<double> f_text;
  std::vector<double> f_pose;
};

template <class T>
class PoseGenModel {
 public:
  // Node ids of one batched forward pass on a tape.
  struct Graph {
    typename Tape<T>::Id x_trans;
    typename Tape<T>::Id coords;      // [B, 36], clamped
    typename Tape<T>::Id vis_logits;  // [B, 18]; unset without a vis head
    typename Tape<T>::Id f_text;      // [B, proj_dim], unit rows
    typename Tape<T>::Id f_pose;      // [B, proj_dim], unit rows
    bool has_vis = true;
  };

  // Scaled-uniform weights, zero biases, unit norm gains, zero positional
  // vector; deterministic given config.seed.
  explicit PoseGenModel(const PoseGenConfig& config);

  const PoseGenConfig& config() const { return config_; }
  std::vector<Parameter<T>>& parameters() { return params_; }
  const std::vector<Parameter<T>>& parameters() const { return params_; }
  std::size_t parameter_count() const;
  Parameter<T>* find(std::string_view name);

  // Closed-form parameter count for a configuration.
  static std::size_t parameter_count(const PoseGenConfig& config);

  // Records the batched forward pass. embeddings is a [B, 768] node.
  Graph build(Tape<T>& tape, typename Tape<T>::Id embeddings, Mode mode,
              Rng& rng);

  void zero_grad();

  template <class U>
  PoseGenModel<U> cast() const {
    PoseGenModel<U> out(config_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      out.parameters()[i].value = params_[i].value.template cast<U>();
    }
    return out;
  }

  std::vector<NamedTensor> to_named() const;
  // Throws DataError when names or shapes do not match the configuration.
  void load_named(const std::vector<NamedTensor>& named);

 private:
  struct Linear {
    std::size_t w, b;
  };
  struct Norm {
    std::size_t g, b;
  };
  struct Block {
    Norm ln1;
    Linear q, k, v, o;
    Norm ln2;
    Linear fc1, fc2;
  };

  std::size_t add_param(std::string name, std::vector<std::size_t> shape);
  Linear add_linear(const std::string& name, std::size_t in, std::size_t out);
  Norm add_norm(const std::string& name, std::size_t d);
  void initialize();

  typename Tape<T>::Id linear(Tape<T>& tape, typename Tape<T>::Id x,
                              const Linear& l);
  typename Tape<T>::Id norm(Tape<T>& tape, typename Tape<T>::Id x,
                            const Norm& n);

  PoseGenConfig config_;
  std::vector<Parameter<T>> params_;
  Linear mlp_fc1_{}, mlp_fc2_{}, mlp_proj_{};
  std::size_t pos_ = 0;
  std::size_t query_ = 0;
  std::vector<Block> blocks_;
  Norm ln_f_{};
  Linear pose_head_{}, vis_head_{}, text_proj_{}, pose_proj_{};
  Norm text_ln_{}, pose_ln_{};
};

extern template class PoseGenModel<float>;
extern template class PoseGenModel<double>;

// Stacks embeddings into a [B, 768] tensor. Throws ShapeError on a bad
// dimension and ConfigError on an empty batch.
template <class T>
Tensor<T> stack_embeddings(std::span<const TextEmbedding> embeddings);

ModelOutput forward(PoseGenModel<float>& model, const TextEmbedding& e_c,
                    Mode mode, Rng& rng);
std::vector<ModelOutput> batch_forward(PoseGenModel<float>& model,
                                       std::span<const TextEmbedding> batch,
                                       Mode mode, Rng& rng);

// Unpacks tape outputs into per-sample ModelOutputs.
template <class T>
std::vector<ModelOutput> collect_outputs(const Tape<T>& tape,
                                         const typename PoseGenModel<T>::Graph& g);

}  // namespace posegen
