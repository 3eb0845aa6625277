// posegen command-line driver.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 data error,
// 4 runtime error. Failures print one JSON object on stderr.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "posegen/checkpoint.hpp"
#include "posegen/digest.hpp"
#include "posegen/error.hpp"
#include "posegen/kernels.hpp"
#include "posegen/posecap.hpp"
#include "posegen/render.hpp"
#include "posegen/synth.hpp"
#include "posegen/trainer.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using namespace posegen;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

void log_event(const ojson& j) { std::cerr << j.dump() << "\n"; }

int fail(const char* kind, const std::string& message, int code) {
  ojson j;
  j["error"] = kind;
  j["message"] = message;
  j["exit_code"] = code;
  std::cerr << j.dump() << "\n";
  return code;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory", dir.string());
}

std::string read_text_or_empty(const fs::path& p) {
  return fs::exists(p) ? read_file(p) : std::string();
}

// ---- shared training options ---------------------------------------------------

struct FlagOverride {
  const char* flag;
  const char* key;
  std::string value;
  CLI::Option* opt = nullptr;
};

struct RunOptions {
  std::string config;
  std::string data_dir;
  std::string embeddings;
  std::string out_dir;
  bool no_fallback = false;
  std::vector<std::string> sets;
  std::vector<FlagOverride> flags = {
      {"--epochs", "epochs", {}},         {"--batch-size", "batch_size", {}},
      {"--lr", "learning_rate", {}},      {"--seed", "seed", {}},
      {"--hidden-dim", "hidden_dim", {}}, {"--num-layers", "num_layers", {}},
      {"--num-heads", "num_heads", {}},   {"--dropout", "dropout_p", {}},
      {"--eval-every", "eval_every", {}},
  };
  CLI::Option* data_opt = nullptr;
  CLI::Option* emb_opt = nullptr;
  CLI::Option* out_opt = nullptr;
};

void add_run_options(CLI::App* sub, RunOptions& o) {
  sub->add_option("--config", o.config, "JSON config file");
  o.data_opt = sub->add_option("--data", o.data_dir, "corpus directory with train/val/test.jsonl");
  o.emb_opt = sub->add_option("--embeddings", o.embeddings, "PCEB embedding table");
  sub->add_flag("--no-fallback", o.no_fallback, "fail on ids missing from the embedding table");
  o.out_opt = sub->add_option("--out", o.out_dir, "output directory");
  sub->add_option("--set", o.sets, "override a config key, KEY=JSON_VALUE");
  for (auto& f : o.flags) f.opt = sub->add_option(f.flag, f.value, std::string("config key ") + f.key);
}

struct ResolvedRun {
  TrainConfig config;
  fs::path data_dir;
  fs::path out_dir;
  std::optional<EmbeddingTable> table;
  bool allow_fallback = true;
  std::vector<std::string> overrides;
};

const std::vector<std::string> kPathKeys = {"data_dir", "embeddings", "out_dir"};

std::string unquote(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  if (!j.is_string()) throw ConfigError("path keys expect strings");
  return j.get<std::string>();
}

ResolvedRun resolve_run(const RunOptions& o) {
  ResolvedRun r;
  std::map<std::string, std::string> extras;
  if (!o.config.empty()) {
    const fs::path p(o.config);
    if (p.extension() == ".toml") {
      throw ConfigError("TOML configs are not supported; use a JSON config");
    }
    r.config = parse_train_config(read_file(p), kPathKeys, &extras);
  }
  const auto apply = [&](const std::string& key, const std::string& value, const std::string& source) {
    const std::string before = get_train_config_value(r.config, key);
    set_train_config_value(r.config, key, value);
    const std::string after = get_train_config_value(r.config, key);
    if (!o.config.empty() && before != after) {
      log_event({{"event", "override"}, {"key", key}, {"config", before}, {"flag", after},
                 {"source", source}, {"precedence", "flag wins"}});
      r.overrides.push_back(key + ": " + before + " -> " + after);
    }
  };
  for (const auto& f : o.flags) {
    if (f.opt->count() > 0) apply(f.key, f.value, f.flag);
  }
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + s + "'");
    apply(s.substr(0, eq), s.substr(eq + 1), "--set");
  }
  r.config.validate();

  const auto pick = [&](CLI::Option* opt, const std::string& flag_value, const char* key) {
    const auto it = extras.find(key);
    if (opt->count() > 0) {
      if (it != extras.end() && unquote(it->second) != flag_value) {
        log_event({{"event", "override"}, {"key", key}, {"config", unquote(it->second)},
                   {"flag", flag_value}, {"precedence", "flag wins"}});
        r.overrides.push_back(std::string(key) + ": " + unquote(it->second) + " -> " + flag_value);
      }
      return flag_value;
    }
    return it != extras.end() ? unquote(it->second) : std::string();
  };
  r.data_dir = pick(o.data_opt, o.data_dir, "data_dir");
  r.out_dir = pick(o.out_opt, o.out_dir, "out_dir");
  const std::string emb = pick(o.emb_opt, o.embeddings, "embeddings");
  if (r.data_dir.empty()) throw ConfigError("--data is required (or data_dir in the config)");
  if (r.out_dir.empty()) throw ConfigError("--out is required (or out_dir in the config)");
  if (!emb.empty()) r.table = load_embedding_table(emb);
  r.allow_fallback = !o.no_fallback;
  return r;
}

Dataset load_split(const ResolvedRun& r, const char* name) {
  ResolveOptions ro;
  ro.allow_hashed_fallback = r.allow_fallback;
  return make_dataset(load_corpus(r.data_dir / (std::string(name) + ".jsonl")),
                      r.table ? &*r.table : nullptr, ro);
}

std::string corpus_digest(const fs::path& dir) {
  std::string all;
  for (const char* s : {"train.jsonl", "val.jsonl", "test.jsonl"}) all += read_text_or_empty(dir / s);
  return sha256_hex(all);
}

void log_epoch(const EpochRecord& r, std::size_t epochs, double seconds) {
  ojson j{{"event", "epoch"}, {"epoch", r.epoch}, {"of", epochs},
          {"train_loss", r.train.total}, {"seconds", seconds}};
  if (r.evaluated) {
    j["val_pckh_05"] = r.val.pckh_05;
    j["val_mpjpe_px"] = r.val.mpjpe_px;
  }
  log_event(j);
}

// ---- commands --------------------------------------------------------------------

int cmd_synth(const SynthSpec& spec, const fs::path& out) {
  const Corpus c = generate_corpus(spec);
  ensure_dir(out);
  save_corpus(out / "train.jsonl", c.train);
  save_corpus(out / "val.jsonl", c.val);
  save_corpus(out / "test.jsonl", c.test);
  write_file(out / "spec.json", spec.to_json());
  log_event({{"event", "synth"}, {"train", c.train.size()}, {"val", c.val.size()},
             {"test", c.test.size()}, {"out", out.string()}});
  return 0;
}

int cmd_import(const fs::path& in, const fs::path& captions, const fs::path& out,
               const ImportOptions& opt) {
  const ImportResult res = import_openpose(in, captions, opt);
  write_posecap(out, res.records);
  ojson errs = ojson::array();
  for (const auto& e : res.errors) errs.push_back({{"file", e.file}, {"message", e.message}});
  ojson j{{"converted", res.records.size()},
          {"skipped_no_caption", res.skipped_no_caption},
          {"skipped_no_people", res.skipped_no_people},
          {"errors", errs}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_train(const RunOptions& o) {
  const ResolvedRun r = resolve_run(o);
  const Dataset tr = load_split(r, "train");
  const Dataset va = load_split(r, "val");
  ensure_dir(r.out_dir);
  auto t0 = std::chrono::steady_clock::now();
  const auto start = t0;
  ojson timing = ojson::array();
  TrainResult res = train(tr, va, r.config, [&](const EpochRecord& e) {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - t0).count();
    t0 = now;
    timing.push_back({{"epoch", e.epoch}, {"seconds", s}});
    log_epoch(e, r.config.epochs, s);
  });
  const fs::path final_ckpt = r.out_dir / "final.pgck";
  save_model(final_ckpt, res.model);
  save_model(r.out_dir / "best.pgck", res.best);
  write_file(r.out_dir / "history.json", history_to_json(res.history));
  const std::string cfg_json = train_config_to_json(r.config);
  write_file(r.out_dir / "config.json", cfg_json);
  RunManifest m;
  m.config_sha256 = sha256_hex(cfg_json);
  m.corpus_sha256 = corpus_digest(r.data_dir);
  m.checkpoint_git_sha1 = git_blob_sha1(read_file(final_ckpt));
  m.kernels = std::string(kernels::backend_name(kernels::active_backend()));
  m.overrides = r.overrides;
  write_file(r.out_dir / "manifest.json", m.to_json());
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_file(r.out_dir / "timing.json",
             ojson{{"epochs", timing}, {"total_seconds", total}}.dump(2) + "\n");
  log_event({{"event", "trained"}, {"best_epoch", res.best_epoch}, {"out", r.out_dir.string()}});
  return 0;
}

int cmd_eval(const fs::path& ckpt, const fs::path& data, const std::string& emb,
             bool no_fallback, const std::string& out) {
  PoseGenModel<float> model = load_model(ckpt);
  std::optional<EmbeddingTable> table;
  if (!emb.empty()) table = load_embedding_table(emb);
  ResolveOptions ro;
  ro.allow_hashed_fallback = !no_fallback;
  const Dataset d = make_dataset(load_corpus(data), table ? &*table : nullptr, ro);
  const std::string report = evaluate_model(model, d).to_json();
  if (out.empty()) {
    std::cout << report;
  } else {
    write_file(out, report);
  }
  return 0;
}

int cmd_table(const RunOptions& o, bool is_sweep) {
  const ResolvedRun r = resolve_run(o);
  const Dataset tr = load_split(r, "train");
  const Dataset va = load_split(r, "val");
  ensure_dir(r.out_dir);
  const auto on_row = [](const RunRow& row) {
    ojson j{{"event", "row"}, {"label", row.label}, {"ok", row.ok}, {"seconds", row.wall_seconds}};
    if (row.ok) {
      j["mpjpe_px"] = row.report.mpjpe_px;
      j["pckh_05"] = row.report.pckh_05;
    } else {
      j["error"] = row.error;
    }
    log_event(j);
  };
  RunTable t;
  if (is_sweep) {
    t = sweep(tr, va, va, SweepGrid::standard(), r.config, on_row);
    t.split = "val";
  } else {
    const Dataset te = load_split(r, "test");
    t = ablate(tr, va, te, ablation_preset(), r.config, on_row);
    t.split = "test";
  }
  const std::string stem = is_sweep ? "sweep" : "ablation";
  write_file(r.out_dir / (stem + ".json"), t.to_json());
  write_file(r.out_dir / (stem + ".txt"), t.to_text());
  write_file(r.out_dir / (stem + ".timing.json"), t.timing_json());
  write_file(r.out_dir / "config.json", train_config_to_json(r.config));
  std::cout << t.to_text();
  return 0;
}

int cmd_infer(const fs::path& ckpt, const std::string& caption, const std::string& captions_file,
              const std::string& emb, const std::string& out, const std::string& render_dir) {
  PoseGenModel<float> model = load_model(ckpt);
  std::vector<std::string> captions;
  if (!caption.empty()) captions.push_back(caption);
  if (!captions_file.empty()) {
    std::ifstream in(captions_file);
    if (!in) throw IoError("cannot open", captions_file);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) captions.push_back(line);
    }
  }
  if (captions.empty()) throw ConfigError("give --caption or --captions");
  std::optional<EmbeddingTable> table;
  if (!emb.empty()) {
    table = load_embedding_table(emb);
  }

  std::string lines, timing;
  if (!render_dir.empty()) ensure_dir(render_dir);
  for (std::size_t i = 0; i < captions.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "caption-%06zu", i);
    const auto t0 = std::chrono::steady_clock::now();
    PoseSample probe;
    probe.id = id;
    probe.caption = captions[i];
    const TextEmbedding e = resolve_embedding(probe, table ? &*table : nullptr).embedding;
    const Predictions p = predict(model, {e});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    PoseSample s = probe;
    s.pose = p.coords[0];
    for (std::size_t j = 0; j < kNumJoints; ++j) s.visibility[j] = p.vis_probs[0][j] >= 0.5 ? 1.0 : 0.0;
    PoseCapRecord rec;
    rec.id = s.id;
    rec.caption = s.caption;
    rec.width = rec.height = 256;
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      // Predictions keep their coordinates even when judged invisible.
      const auto [px, py] = denormalize_coords(s.pose[j], 256, 256);
      rec.keypoints.push_back({px, py});
      rec.visibility.push_back(s.visibility[j] >= 0.5 ? 1 : 0);
    }
    auto j = ojson::parse(to_jsonl_line(rec));
    j["visibility_prob"] = p.vis_probs[0];
    lines += j.dump() + "\n";
    timing += ojson{{"id", s.id}, {"seconds", secs}}.dump() + "\n";
    if (!render_dir.empty()) {
      write_file(fs::path(render_dir) / (s.id + ".svg"), render_svg(s.pose, s.visibility));
    }
  }
  if (out.empty()) {
    std::cout << lines;
  } else {
    write_file(out, lines);
    write_file(out + ".timing.jsonl", timing);
  }
  return 0;
}

int cmd_render(const fs::path& poses, const fs::path& out, const std::string& format) {
  ensure_dir(out);
  const auto records = read_posecap(poses);
  for (const auto& r : records) {
    if (r.keypoints.size() != kNumJoints || r.visibility.size() != kNumJoints) {
      throw ValidationError(r.id + ": expected 18 keypoints and 18 visibility flags");
    }
    Pose pose;
    VisibilityVector vis{};
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      pose[j] = normalize_coords(r.keypoints[j][0], r.keypoints[j][1], r.width, r.height);
      vis[j] = r.visibility[j] ? 1.0 : 0.0;
    }
    if (format == "svg") {
      write_file(out / (r.id + ".svg"), render_svg(pose, vis));
    } else {
      write_file(out / (r.id + ".png"), encode_png(rasterize(pose, vis)));
    }
  }
  log_event({{"event", "render"}, {"count", records.size()}, {"format", format}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"posegen: text-conditioned 2D pose generation toolkit"};
  app.require_subcommand(1);

  SynthSpec spec;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "generate the synthetic caption/pose corpus");
  synth->add_option("--seed", spec.seed, "random seed");
  synth->add_option("--n", spec.n_samples, "number of samples (>= 100)");
  synth->add_option("--jitter", spec.jitter_sigma, "coordinate jitter sigma, normalized units");
  synth->add_option("--occlusion", spec.occlusion_rate, "extra occlusion probability in [0, 0.5)");
  synth->add_option("--paraphrases", spec.caption_paraphrase_count, "caption variants per template (1-3)");
  synth->add_option("--out", synth_out, "output directory")->required();

  std::string imp_in, imp_caps, imp_out;
  ImportOptions imp;
  auto* importer = app.add_subcommand("import-openpose", "convert OpenPose JSON files to PoseCap JSONL");
  importer->add_option("--in", imp_in, "directory of OpenPose JSON files")->required();
  importer->add_option("--captions", imp_caps, "JSON object mapping id to caption")->required();
  importer->add_option("--out", imp_out, "output JSONL file")->required();
  importer->add_option("--conf-threshold", imp.conf_threshold, "visibility requires confidence above this");
  importer->add_option("--width", imp.width, "image width in pixels");
  importer->add_option("--height", imp.height, "image height in pixels");

  RunOptions train_opts, sweep_opts, ablate_opts;
  auto* trainc = app.add_subcommand("train", "train a model");
  add_run_options(trainc, train_opts);
  auto* sweepc = app.add_subcommand("sweep", "one-factor-at-a-time hyperparameter sweep");
  add_run_options(sweepc, sweep_opts);
  auto* ablatec = app.add_subcommand("ablate", "component ablation table");
  add_run_options(ablatec, ablate_opts);

  std::string ev_ckpt, ev_data, ev_emb, ev_out;
  bool ev_nofb = false;
  auto* evalc = app.add_subcommand("eval", "evaluate a checkpoint on a PoseCap file");
  evalc->add_option("--checkpoint", ev_ckpt, "PGCK1 checkpoint")->required();
  evalc->add_option("--data", ev_data, "PoseCap JSONL file")->required();
  evalc->add_option("--embeddings", ev_emb, "PCEB embedding table");
  evalc->add_flag("--no-fallback", ev_nofb, "fail on ids missing from the embedding table");
  evalc->add_option("--out", ev_out, "report path (default stdout)");

  std::string in_ckpt, in_caption, in_captions, in_emb, in_out, in_render;
  auto* inferc = app.add_subcommand("infer", "predict poses for captions");
  inferc->add_option("--checkpoint", in_ckpt, "PGCK1 checkpoint")->required();
  auto* one = inferc->add_option("--caption", in_caption, "a single caption");
  auto* many = inferc->add_option("--captions", in_captions, "text file, one caption per line");
  one->excludes(many);
  inferc->add_option("--embeddings", in_emb, "PCEB embedding table keyed by caption-NNNNNN ids");
  inferc->add_option("--out", in_out, "output JSONL (default stdout)");
  inferc->add_option("--render", in_render, "also write SVG renders to this directory");

  std::string rd_poses, rd_out, rd_format = "svg";
  auto* renderc = app.add_subcommand("render", "draw skeletons from a PoseCap file");
  renderc->add_option("--poses", rd_poses, "PoseCap JSONL file")->required();
  renderc->add_option("--out", rd_out, "output directory")->required();
  renderc->add_option("--format", rd_format, "svg or png")->check(CLI::IsMember({"svg", "png"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help() << "\n";
    return fail("usage_error", e.what(), kExitUsage);
  }

  try {
    if (*synth) return cmd_synth(spec, synth_out);
    if (*importer) return cmd_import(imp_in, imp_caps, imp_out, imp);
    if (*trainc) return cmd_train(train_opts);
    if (*sweepc) return cmd_table(sweep_opts, true);
    if (*ablatec) return cmd_table(ablate_opts, false);
    if (*evalc) return cmd_eval(ev_ckpt, ev_data, ev_emb, ev_nofb, ev_out);
    if (*inferc) return cmd_infer(in_ckpt, in_caption, in_captions, in_emb, in_out, in_render);
    if (*renderc) return cmd_render(rd_poses, rd_out, rd_format);
  } catch (const ConfigError& e) {
    return fail(e.kind(), e.what(), kExitUsage);
  } catch (const DataError& e) {
    return fail(e.kind(), e.what(), kExitData);
  } catch (const IoError& e) {
    return fail(e.kind(), e.what(), kExitData);
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), kExitRuntime);
  } catch (const nlohmann::json::exception& e) {
    return fail("config_error", e.what(), kExitUsage);
  } catch (const std::exception& e) {
    return fail("runtime_error", e.what(), kExitRuntime);
  }
  return kExitUsage;
}
