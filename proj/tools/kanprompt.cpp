/* Copyright 2026 The kanprompt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// kanprompt command-line tool: synth, train, eval, ablate, report.
//
// Settings resolve as flags > --config file > defaults; the seed falls back
// to KANPROMPT_SEED when neither a flag nor the config sets it. Each command
// writes run_manifest.json into its output directory, including on failure.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kanprompt/checkpoint.hpp"
#include "kanprompt/config.hpp"
#include "kanprompt/dataset.hpp"
#include "kanprompt/errors.hpp"
#include "kanprompt/image_io.hpp"
#include "kanprompt/report.hpp"
#include "kanprompt/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kanprompt;

namespace {

struct Options {
  std::vector<std::string> data;
  std::string out;
  std::string ckpt;
  std::string config;
  std::uint64_t seed = 0;
  int k = 2;
  int n = 20;
  int size = 64;
  int epochs = 100;
  int batch = 4;
  double lr = 1e-5;
  double weight_decay = 1e-2;
  double alpha = 0.125;
  double beta = 0.01;
  std::string prompt_kind = "kan";
  std::string freeze = "none";
  std::string aggregation = "per_sample";
  int panels = 4;
};

class Manifest {
 public:
  explicit Manifest(std::string command)
      : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {}

  json& body() { return body_; }

  void write(const fs::path& dir, bool ok, const std::string& error = {}) const {
    json j;
    j["command"] = command_;
    j["status"] = ok ? "ok" : "failed";
    if (!ok) j["error"] = error;
    j["version"] = KANPROMPT_VERSION;
    j["duration_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    for (auto it = body_.begin(); it != body_.end(); ++it) j[it.key()] = it.value();
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream(dir / "run_manifest.json") << j.dump(2) << "\n";
  }

 private:
  std::string command_;
  std::chrono::steady_clock::time_point start_;
  json body_ = json::object();
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("KANPROMPT_SEED");
  if (s == nullptr || *s == '\0') return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (*end != '\0') throw InvalidArgument(std::string("KANPROMPT_SEED is not an integer: ") + s);
  return v;
}

bool given(const CLI::App& app, const char* flag) { return app.count(flag) > 0; }

// Seed resolution: flag, then config file, then environment, then 0.
std::uint64_t resolve_seed(const CLI::App& app, const Options& o, const json* config) {
  if (given(app, "--seed")) return o.seed;
  if (config != nullptr && config->contains("seed")) return config->at("seed").get<std::uint64_t>();
  if (auto e = env_seed()) return *e;
  return 0;
}

json read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument("config file " + path + " is not valid JSON: " + e.what());
  }
}

TrainConfig resolve_train_config(const CLI::App& app, const Options& o) {
  TrainConfig cfg;
  json file;
  const bool has_file = !o.config.empty();
  if (has_file) {
    file = read_config(o.config);
    file.get_to(cfg);
  }
  const std::uint64_t seed = resolve_seed(app, o, has_file ? &file : nullptr);
  cfg.seed = seed;
  if (!has_file || !file.contains("model") || !file.at("model").contains("seed") ||
      given(app, "--seed")) {
    cfg.model.seed = seed;
  }
  if (!has_file || !file.contains("split_seed") || given(app, "--seed")) cfg.split.seed = seed;
  if (given(app, "--k")) cfg.model.num_classes = o.k;
  if (given(app, "--epochs")) cfg.epochs = o.epochs;
  if (given(app, "--batch")) cfg.batch_size = o.batch;
  if (given(app, "--lr")) cfg.learning_rate = o.lr;
  if (given(app, "--weight-decay")) cfg.weight_decay = o.weight_decay;
  if (given(app, "--alpha")) cfg.loss.alpha = o.alpha;
  if (given(app, "--beta")) cfg.loss.beta = o.beta;
  if (given(app, "--prompt-kind")) cfg.model.prompt_kind = parse_prompt_kind(o.prompt_kind);
  if (given(app, "--freeze")) {
    cfg.freeze_sam2 = o.freeze == "sam2_stub" || o.freeze == "both";
    cfg.freeze_pathology = o.freeze == "pathology_stub" || o.freeze == "both";
  }
  if (given(app, "--aggregation")) {
    cfg.aggregation = o.aggregation == "pooled" ? metrics::Aggregation::kPooled
                                                : metrics::Aggregation::kPerSample;
  }
  validate(cfg);
  return cfg;
}

metrics::Aggregation aggregation_of(const Options& o) {
  return o.aggregation == "pooled" ? metrics::Aggregation::kPooled
                                   : metrics::Aggregation::kPerSample;
}

void cmd_synth(const CLI::App& app, const Options& o, Manifest& m) {
  SynthConfig sc;
  sc.seed = resolve_seed(app, o, nullptr);
  sc.count = o.n;
  sc.num_classes = o.k;
  sc.size = o.size;
  m.body()["seed"] = sc.seed;
  m.body()["config"] = {{"n", sc.count}, {"k", sc.num_classes}, {"size", sc.size}};
  m.body()["paths"] = {{"out", o.out}};
  const auto dataset = synth_generate(sc, o.out);
  std::printf("wrote %zu samples to %s\n", dataset.samples.size(), o.out.c_str());
}

void cmd_train(const CLI::App& app, const Options& o, Manifest& m) {
  const TrainConfig cfg = resolve_train_config(app, o);
  m.body()["seed"] = cfg.seed;
  m.body()["config"] = cfg;
  m.body()["paths"] = {{"data", o.data.front()}, {"out", o.out}};
  const auto dataset = load_dataset(o.data.front(), cfg.model.num_classes);
  const auto [tr, va] = split_train_val(dataset, cfg.split);
  SegmentationModel model(cfg.model);
  const fs::path out = o.out;
  fs::create_directories(out);
  const auto result = train(model, tr, va, cfg, [](const EpochRecord& r) {
    std::printf("epoch %d  loss %.6f  val_mIoU %.4f  val_mDSC %.4f\n", r.epoch, r.train_loss,
                r.val_mean_iou, r.val_mean_dsc);
    std::fflush(stdout);
  });
  checkpoint_save(result.best, out / "checkpoint");
  checkpoint_save(result.last, out / "last");
  write_text(out / "history.csv", history_csv(result.history));
  m.body()["outputs"] = {{"checkpoint", (out / "checkpoint").string()},
                         {"last", (out / "last").string()},
                         {"history", (out / "history.csv").string()}};
  m.body()["best_epoch"] = result.best_epoch;
  m.body()["train_samples"] = tr.samples.size();
  m.body()["val_samples"] = va.samples.size();
}

void cmd_eval(const CLI::App&, const Options& o, Manifest& m) {
  const auto ckpt = checkpoint_load(o.ckpt);
  m.body()["seed"] = ckpt.config.seed;
  m.body()["config"] = ckpt.config;
  m.body()["paths"] = {{"data", o.data.front()}, {"ckpt", o.ckpt}, {"out", o.out}};
  const auto dataset = load_dataset(o.data.front(), ckpt.config.model.num_classes);
  const auto report = evaluate(ckpt, dataset, aggregation_of(o));
  const fs::path out = o.out;
  fs::create_directories(out);
  const std::string csv = report::metric_csv(report);
  write_text(out / "metrics.csv", csv);
  write_text(out / "metrics.json", report::metric_json(report).dump(2) + "\n");
  m.body()["outputs"] = {{"metrics", (out / "metrics.csv").string()}};
  std::fputs(csv.c_str(), stdout);
}

NamedDataset named_dataset(const fs::path& root, int k) {
  NamedDataset d;
  d.name = root.filename().empty() ? root.parent_path().filename().string()
                                   : root.filename().string();
  if (fs::is_directory(root / "train") && fs::is_directory(root / "test")) {
    d.train = load_dataset(root / "train", k, SplitTag::kTrain);
    d.test = load_dataset(root / "test", k, SplitTag::kTest);
  } else {
    d.train = load_dataset(root, k, SplitTag::kTrain);
  }
  return d;
}

void cmd_ablate(const CLI::App& app, const Options& o, Manifest& m) {
  const TrainConfig cfg = resolve_train_config(app, o);
  m.body()["seed"] = cfg.seed;
  m.body()["config"] = cfg;
  m.body()["paths"] = {{"data", o.data}, {"out", o.out}};
  std::vector<NamedDataset> sets;
  for (const auto& d : o.data) sets.push_back(named_dataset(d, cfg.model.num_classes));
  const auto table = ablate(cfg, sets);
  const fs::path out = o.out;
  fs::create_directories(out);
  const std::string csv = table.csv();
  write_text(out / "ablation.csv", csv);
  m.body()["outputs"] = {{"table", (out / "ablation.csv").string()}};
  m.body()["kan_at_least_mlp"] = table.kan_at_least_mlp;
  std::fputs(csv.c_str(), stdout);
  std::printf("KAN >= MLP on every dataset: %s\n", table.kan_at_least_mlp ? "yes" : "no");
}

void cmd_report(const CLI::App&, const Options& o, Manifest& m) {
  const auto ckpt = checkpoint_load(o.ckpt);
  m.body()["seed"] = ckpt.config.seed;
  m.body()["config"] = ckpt.config;
  m.body()["paths"] = {{"data", o.data.front()}, {"ckpt", o.ckpt}, {"out", o.out}};
  const fs::path out = o.out;
  fs::create_directories(out / "panels");
  fs::create_directories(out / "predictions");
  io::write_png_rgb(out / "loss_curve.png", report::loss_curve(ckpt.history));

  const auto model = model_from_checkpoint(ckpt);
  const auto dataset = load_dataset(o.data.front(), ckpt.config.model.num_classes);
  metrics::MetricAccumulator acc(static_cast<std::size_t>(dataset.num_classes), aggregation_of(o));
  int shown = 0;
  for (const auto& entry : dataset.samples) {
    const auto s = load_sample(entry);
    const auto output = model->predict(s.image);
    const auto pred = predict_semantic(output);
    acc.add(pred, s.mask);
    if (shown < o.panels) {
      io::write_png_rgb(out / "panels" / (s.name + ".png"),
                        report::qualitative_panel(s.image, s.mask, pred));
      report::export_prediction(output, out / "predictions" / s.name);
      io::write_label_png(out / "predictions" / (s.name + "_labels.png"), pred);
      ++shown;
    }
  }
  const auto r = acc.report();
  io::write_png_rgb(out / "iou_bars.png", report::iou_bars(r));
  write_text(out / "metrics.csv", report::metric_csv(r));
  write_text(out / "history.csv", history_csv(ckpt.history));
  m.body()["outputs"] = {{"loss_curve", (out / "loss_curve.png").string()},
                         {"iou_bars", (out / "iou_bars.png").string()},
                         {"panels", (out / "panels").string()},
                         {"predictions", (out / "predictions").string()},
                         {"metrics", (out / "metrics.csv").string()}};
  std::printf("report written to %s (%d panels)\n", out.c_str(), shown);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kanprompt: prompt-learning segmentation toolkit"};
  app.require_subcommand(1);
  Options o;

  auto add_seed = [&](CLI::App* c) {
    c->add_option("--seed", o.seed, "Random seed (fallback: KANPROMPT_SEED)");
  };
  auto add_train_flags = [&](CLI::App* c) {
    c->add_option("--config", o.config, "JSON training config")->check(CLI::ExistingFile);
    c->add_option("--k", o.k, "Number of classes including background")
        ->check(CLI::Range(1, 255));
    c->add_option("--epochs", o.epochs, "Training epochs")->check(CLI::PositiveNumber);
    c->add_option("--batch", o.batch, "Batch size")->check(CLI::PositiveNumber);
    c->add_option("--lr", o.lr, "Learning rate")->capture_default_str();
    c->add_option("--weight-decay", o.weight_decay, "Decoupled weight decay")
        ->capture_default_str();
    c->add_option("--alpha", o.alpha, "Dice/focal balance")->capture_default_str();
    c->add_option("--beta", o.beta, "IoU-head loss weight")->capture_default_str();
    c->add_option("--prompt-kind", o.prompt_kind, "Prompt network")
        ->check(CLI::IsMember({"kan", "mlp"}));
    c->add_option("--freeze", o.freeze, "Encoders to freeze")
        ->check(CLI::IsMember({"sam2_stub", "pathology_stub", "none", "both"}));
    c->add_option("--aggregation", o.aggregation, "Metric aggregation")
        ->check(CLI::IsMember({"per_sample", "pooled"}));
    add_seed(c);
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--out", o.out, "Output dataset directory")->required();
  synth->add_option("--n", o.n, "Number of samples")->check(CLI::PositiveNumber);
  synth->add_option("--k", o.k, "Number of classes including background")
      ->check(CLI::Range(2, 255));
  synth->add_option("--size", o.size, "Image side length (multiple of 16)")
      ->check(CLI::PositiveNumber);
  add_seed(synth);

  auto* trn = app.add_subcommand("train", "Train on a dataset with a 20% validation split");
  trn->add_option("--data", o.data, "Dataset root")->required()->expected(1);
  trn->add_option("--out", o.out, "Output directory")->required();
  add_train_flags(trn);

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  ev->add_option("--ckpt", o.ckpt, "Checkpoint directory")->required();
  ev->add_option("--data", o.data, "Dataset root")->required()->expected(1);
  ev->add_option("--out", o.out, "Output directory")->default_val("eval");
  ev->add_option("--aggregation", o.aggregation, "Metric aggregation")
      ->check(CLI::IsMember({"per_sample", "pooled"}));

  auto* abl = app.add_subcommand("ablate", "Compare KAN and MLP prompt networks");
  abl->add_option("--data", o.data,
                  "Dataset root(s); train/ and test/ subdirectories are used when present")
      ->required();
  abl->add_option("--out", o.out, "Output directory")->default_val("ablation");
  add_train_flags(abl);

  auto* rep = app.add_subcommand("report", "Plots, qualitative panels and prediction exports");
  rep->add_option("--ckpt", o.ckpt, "Checkpoint directory")->required();
  rep->add_option("--data", o.data, "Dataset root")->required()->expected(1);
  rep->add_option("--out", o.out, "Output directory")->default_val("report");
  rep->add_option("--panels", o.panels, "Number of qualitative panels")
      ->check(CLI::NonNegativeNumber);
  rep->add_option("--aggregation", o.aggregation, "Metric aggregation")
      ->check(CLI::IsMember({"per_sample", "pooled"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0 && e.get_exit_code() != static_cast<int>(CLI::ExitCodes::Success)) {
      std::cerr << app.help();
    }
    return code;
  }

  CLI::App* cmd = app.get_subcommands().front();
  Manifest manifest(cmd->get_name());
  try {
    if (cmd == synth) cmd_synth(*cmd, o, manifest);
    if (cmd == trn) cmd_train(*cmd, o, manifest);
    if (cmd == ev) cmd_eval(*cmd, o, manifest);
    if (cmd == abl) cmd_ablate(*cmd, o, manifest);
    if (cmd == rep) cmd_report(*cmd, o, manifest);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "kanprompt %s: error: %s\n", cmd->get_name().c_str(), e.what());
    manifest.write(o.out, false, e.what());
    return 1;
  }
  manifest.write(o.out, true);
  return 0;
}
