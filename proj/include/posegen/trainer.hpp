#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "posegen/losses.hpp"
#include "posegen/metrics.hpp"
#include "posegen/model.hpp"
#include "posegen/textenc.hpp"

namespace posegen {

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  LossWeights weights;
  // model.seed is ignored; the model is initialized from `seed`.
  PoseGenConfig model;
  std::uint64_t seed = 0;
  // Validate every this many epochs (and always after the last one).
  std::size_t eval_every = 1;
  bool use_contrastive = true;

  // Throws ConfigError.
  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Flat key set of the JSON config file.
const std::vector<std::string>& train_config_keys();
std::string train_config_to_json(const TrainConfig& c);
// Throws ConfigError on an unknown key (listing the valid ones) or a value of
// the wrong type. Keys in extra_keys are accepted and returned, as JSON text,
// through *extras.
TrainConfig parse_train_config(const std::string& json_text,
                               const std::vector<std::string>& extra_keys = {},
                               std::map<std::string, std::string>* extras = nullptr);
// Sets one key from JSON text such as "0.001" or "true".
void set_train_config_value(TrainConfig& c, const std::string& key,
                            const std::string& json_value);
// Current value of one key as JSON text.
std::string get_train_config_value(const TrainConfig& c, const std::string& key);

struct Dataset {
  std::vector<PoseSample> samples;
  std::vector<TextEmbedding> embeddings;

  std::size_t size() const { return samples.size(); }
};

Dataset make_dataset(std::vector<PoseSample> samples,
                     const EmbeddingTable* table = nullptr,
                     const ResolveOptions& opts = {});

struct Predictions {
  std::vector<Pose> coords;
  std::vector<std::array<double, kNumJoints>> vis_probs;
};

Predictions predict(PoseGenModel<float>& model,
                    const std::vector<TextEmbedding>& embeddings,
                    std::size_t chunk = 256);
EvalReport evaluate_model(PoseGenModel<float>& model, const Dataset& data);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  LossBreakdown train;    // sample-weighted mean over the epoch
  bool evaluated = false;
  EvalReport val;
};

struct TrainResult {
  PoseGenModel<float> model;  // after the last epoch
  PoseGenModel<float> best;   // lowest validation MPJPE
  std::size_t best_epoch = 0;  // 0 = the initial model
  std::vector<EpochRecord> history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Throws ConfigError on an empty split and NumericError (naming epoch and
// batch) on a non-finite loss.
TrainResult train(const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

std::string history_to_json(const std::vector<EpochRecord>& history);

// ---- checkpoints -----------------------------------------------------------

// Writes the PGCK1 file and a JSON sidecar at path + ".json".
void save_model(const std::filesystem::path& path,
                const PoseGenModel<float>& model);
PoseGenModel<float> load_model(const std::filesystem::path& path);
std::string model_sidecar_json(const PoseGenConfig& config);
PoseGenConfig parse_model_sidecar(const std::string& json_text);

struct RunManifest {
  std::string config_sha256;
  std::string corpus_sha256;
  std::string checkpoint_git_sha1;
  std::string kernels;
  std::vector<std::string> overrides;

  std::string to_json() const;
};

// ---- sweep (one factor at a time) -------------------------------------------

struct SweepGrid {
  std::vector<std::size_t> hidden_dim;
  std::vector<std::size_t> num_layers;
  std::vector<std::size_t> num_heads;
  std::vector<double> dropout_p;
  std::vector<double> lambda_inv;
  std::vector<double> lambda_con;
  std::vector<double> tau;

  static SweepGrid standard();
  std::size_t size() const;
  // One config per candidate, each differing from base in one factor.
  // Throws ConfigError when a candidate is invalid.
  std::vector<std::pair<std::string, TrainConfig>> expand(const TrainConfig& base) const;
};

struct RunRow {
  std::string label;     // e.g. "hidden_dim=384" or "con=0 mlp=1 ..."
  std::string factor;    // sweep factor, empty for ablation rows
  double value = 0.0;    // sweep factor value
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::size_t best_epoch = 0;
  EvalReport report;
  double wall_seconds = 0.0;  // kept out of to_json
};

struct RunTable {
  std::string kind;  // "sweep" or "ablation"
  std::string split;
  std::vector<RunRow> rows;

  // Row with the lowest MPJPE among successful rows, or -1.
  long best_row() const;
  // Deterministic: excludes wall time.
  std::string to_json() const;
  static RunTable from_json(const std::string& text);
  std::string timing_json() const;
  // Fixed-width text table, one row per run.
  std::string to_text() const;
};

using RowCallback = std::function<void(const RunRow&)>;

// Each run trains on train_set, picks its best epoch on val_set and is
// reported on report_set. A failing run becomes a failed row.
RunTable sweep(const Dataset& train_set, const Dataset& val_set,
               const Dataset& report_set, const SweepGrid& grid,
               const TrainConfig& base, const RowCallback& on_row = {});

struct AblationFlags {
  bool use_contrastive = true;
  bool use_mlp = true;
  bool use_transformer = true;
  bool use_vis_head = true;

  // Throws ConfigError when every component is off.
  void validate() const;
  std::string label() const;
  TrainConfig apply(TrainConfig base) const;
  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

// Four single-component ablations followed by the full model.
std::vector<AblationFlags> ablation_preset();

RunTable ablate(const Dataset& train_set, const Dataset& val_set,
                const Dataset& report_set, const std::vector<AblationFlags>& flags,
                const TrainConfig& base, const RowCallback& on_row = {});

// ---- gradient check ---------------------------------------------------------

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor of the relative error.
  double rel_floor = 1e-6;
  std::size_t batch = 2;
  std::uint64_t seed = 7;
  // Above this many parameters only a sample of entries per group is checked.
  std::size_t max_full_params = 100000;
  std::size_t sample_per_group = 64;
  LossWeights weights;
  bool use_contrastive = true;
};

struct GradGroup {
  std::string name;
  std::size_t checked = 0;
  double max_rel_err = 0.0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradGroup> groups;
  bool pass = false;
  std::size_t parameters = 0;
  bool sampled = false;

  std::string to_string() const;
};

// Analytic dL_total/dtheta against central differences in f64, train mode
// with a fixed dropout stream, on a deterministic batch of synthetic samples.
GradCheckReport grad_check(const PoseGenConfig& config,
                           const GradCheckOptions& opt = {});

}  // namespace posegen
