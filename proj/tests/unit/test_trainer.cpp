#include <cmath>

#include "doctest.h"
#include "posegen/error.hpp"
#include "posegen/synth.hpp"
#include "posegen/trainer.hpp"
#include "support.hpp"

using namespace posegen;

namespace {

TrainConfig tiny_config() {
  TrainConfig c;
  c.epochs = 2;
  c.batch_size = 8;
  c.learning_rate = 1e-3;
  c.seed = 3;
  c.model.hidden_dim = 32;
  c.model.num_layers = 1;
  c.model.num_heads = 2;
  c.model.mlp_dim = 64;
  c.model.proj_dim = 16;
  c.model.dropout_p = 0.05;
  return c;
}

struct Splits {
  Dataset train, val, test;
};

const Splits& tiny_data() {
  static const Splits s = [] {
    SynthSpec spec;
    spec.n_samples = 200;
    spec.seed = 11;
    auto c = generate_corpus(spec);
    return Splits{make_dataset(c.train), make_dataset(c.val), make_dataset(c.test)};
  }();
  return s;
}

bool same_params(const PoseGenModel<float>& a, const PoseGenModel<float>& b) {
  if (a.parameters().size() != b.parameters().size()) return false;
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    if (!(a.parameters()[i].value == b.parameters()[i].value)) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("config json round trip and key access") {
  TrainConfig c = tiny_config();
  c.weights.lambda_inv = 0.25;
  c.use_contrastive = false;
  const auto text = train_config_to_json(c);
  CHECK(parse_train_config(text) == c);

  set_train_config_value(c, "learning_rate", "0.002");
  CHECK(c.learning_rate == 0.002);
  CHECK(get_train_config_value(c, "learning_rate") == "0.002");
  set_train_config_value(c, "use_mlp", "false");
  CHECK_FALSE(c.model.use_mlp);
  CHECK(train_config_keys().size() == 25);
}

TEST_CASE("config errors") {
  try {
    parse_train_config(R"({"learnin_rate": 0.1})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("learnin_rate") != std::string::npos);
    CHECK(msg.find("learning_rate") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_train_config(R"({"epochs": "ten"})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config(R"({"batch_size": 0})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config(R"({"learning_rate": -1})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config(R"({"num_heads": 3})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config("[1, 2]"), ConfigError);
  CHECK_NOTHROW(parse_train_config(R"({"learning_rate": 0})"));

  std::map<std::string, std::string> extras;
  const auto c = parse_train_config(R"({"epochs": 4, "data": "corpus"})", {"data"}, &extras);
  CHECK(c.epochs == 4);
  CHECK(extras.at("data") == "\"corpus\"");

  TrainConfig t;
  CHECK_THROWS_AS(set_train_config_value(t, "nope", "1"), ConfigError);
}

TEST_CASE("zero epochs returns the initial model") {
  auto cfg = tiny_config();
  cfg.epochs = 0;
  const auto& d = tiny_data();
  const auto r = train(d.train, d.val, cfg);
  auto init_cfg = cfg.model;
  init_cfg.seed = cfg.seed;
  CHECK(r.history.empty());
  CHECK(r.best_epoch == 0);
  CHECK(same_params(r.model, PoseGenModel<float>(init_cfg)));
  CHECK(same_params(r.best, r.model));
}

TEST_CASE("learning rate zero leaves parameters bit-equal") {
  auto cfg = tiny_config();
  cfg.learning_rate = 0.0;
  const auto& d = tiny_data();
  const auto r = train(d.train, d.val, cfg);
  auto init_cfg = cfg.model;
  init_cfg.seed = cfg.seed;
  CHECK(r.history.size() == 2);
  CHECK(same_params(r.model, PoseGenModel<float>(init_cfg)));
}

TEST_CASE("training is deterministic") {
  const auto& d = tiny_data();
  const auto a = train(d.train, d.val, tiny_config());
  const auto b = train(d.train, d.val, tiny_config());
  CHECK(same_params(a.model, b.model));
  CHECK(history_to_json(a.history) == history_to_json(b.history));
}

TEST_CASE("checkpoint round trip preserves the evaluation") {
  const auto& d = tiny_data();
  auto r = train(d.train, d.val, tiny_config());
  testing::TempDir dir;
  save_model(dir / "m.pgck", r.best);
  auto loaded = load_model(dir / "m.pgck");
  CHECK(loaded.config() == r.best.config());
  CHECK(same_params(loaded, r.best));
  CHECK(evaluate_model(loaded, d.test).to_json() == evaluate_model(r.best, d.test).to_json());
  CHECK(parse_model_sidecar(model_sidecar_json(r.best.config())) == r.best.config());
}

TEST_CASE("best epoch tracks the lowest validation MPJPE") {
  auto cfg = tiny_config();
  cfg.epochs = 4;
  const auto& d = tiny_data();
  auto r = train(d.train, d.val, cfg);
  double best = evaluate_model(r.best, d.val).mpjpe_px;
  for (const auto& e : r.history) {
    REQUIRE(e.evaluated);
    CHECK(best <= e.val.mpjpe_px + 1e-12);
  }
  if (r.best_epoch > 0) CHECK(r.history[r.best_epoch - 1].val.mpjpe_px == best);
}

TEST_CASE("training loss goes down") {
  auto cfg = tiny_config();
  cfg.epochs = 12;
  cfg.eval_every = 12;
  const auto& d = tiny_data();
  const auto r = train(d.train, d.val, cfg);
  const auto& h = r.history;
  const double first = (h[0].train.total + h[1].train.total + h[2].train.total) / 3;
  const double last = (h[9].train.total + h[10].train.total + h[11].train.total) / 3;
  CHECK(last < first);
  CHECK(h[11].evaluated);
  CHECK_FALSE(h[5].evaluated);
}

TEST_CASE("empty splits are rejected") {
  const auto& d = tiny_data();
  Dataset empty;
  CHECK_THROWS_AS(train(empty, d.val, tiny_config()), ConfigError);
  CHECK_THROWS_AS(train(d.train, empty, tiny_config()), ConfigError);
}

TEST_CASE("sweep grid") {
  const auto g = SweepGrid::standard();
  CHECK(g.size() == 19);
  const auto expanded = g.expand(TrainConfig{});
  CHECK(expanded.size() == 19);
  CHECK(expanded.front().first == "hidden_dim=384");
  CHECK(expanded.back().first == "tau=0.07");
  for (const auto& [label, c] : expanded) {
    // Exactly one factor moved away from the defaults.
    int moved = (c.model.hidden_dim != 512) + (c.model.num_layers != 6) +
                (c.model.num_heads != 8) + (c.model.dropout_p != 0.10) +
                (c.weights.lambda_inv != 0.5) + (c.weights.lambda_con != 0.1) +
                (c.weights.tau != 0.07);
    CHECK(moved <= 1);
  }

  SweepGrid bad;
  bad.num_heads = {5};
  CHECK_THROWS_AS(bad.expand(TrainConfig{}), ConfigError);
}

TEST_CASE("single-entry sweep equals a plain run") {
  const auto& d = tiny_data();
  const auto cfg = tiny_config();
  SweepGrid g;
  g.hidden_dim = {cfg.model.hidden_dim};
  const auto table = sweep(d.train, d.val, d.val, g, cfg);
  REQUIRE(table.rows.size() == 1);
  REQUIRE(table.rows[0].ok);
  CHECK(table.rows[0].factor == "hidden_dim");
  CHECK(table.rows[0].value == 32.0);
  auto r = train(d.train, d.val, cfg);
  CHECK(table.rows[0].best_epoch == r.best_epoch);
  CHECK(table.rows[0].report.to_json() == evaluate_model(r.best, d.val).to_json());
  CHECK(table.best_row() == 0);

  const auto back = RunTable::from_json(table.to_json());
  CHECK(back.to_json() == table.to_json());
  CHECK(table.to_text().find("hidden_dim=32") != std::string::npos);
}

TEST_CASE("failed sweep rows are kept") {
  const auto& d = tiny_data();
  auto cfg = tiny_config();
  cfg.epochs = 1;
  cfg.learning_rate = 1e300;
  SweepGrid g;
  g.tau = {0.07};
  const auto table = sweep(d.train, d.val, d.val, g, cfg);
  REQUIRE(table.rows.size() == 1);
  CHECK_FALSE(table.rows[0].ok);
  CHECK_FALSE(table.rows[0].error.empty());
  CHECK(table.best_row() == -1);
}

TEST_CASE("ablation preset") {
  const auto p = ablation_preset();
  REQUIRE(p.size() == 5);
  CHECK(p.back() == AblationFlags{});
  for (const auto& f : p) CHECK_NOTHROW(f.validate());
  CHECK_THROWS_AS((AblationFlags{false, false, false, false}.validate()), ConfigError);

  const auto c = AblationFlags{false, true, false, true}.apply(tiny_config());
  CHECK_FALSE(c.use_contrastive);
  CHECK_FALSE(c.model.use_transformer);
  CHECK(c.model.use_mlp);
  CHECK(AblationFlags{}.label() == "contrastive=on mlp=on transformer=on vis_head=on");
}

TEST_CASE("gradient check") {
  PoseGenConfig c = tiny_config().model;
  const auto ok = grad_check(c);
  CHECK(ok.pass);
  CHECK_FALSE(ok.sampled);
  CHECK(ok.parameters == PoseGenModel<double>::parameter_count(c));

  GradCheckOptions strict;
  strict.tolerance = 0.0;
  CHECK_FALSE(grad_check(c, strict).pass);
}

}  // TEST_SUITE
