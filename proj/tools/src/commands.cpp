#include "commands.hpp"

#include <spawn.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <stdexcept>
#include <vector>

#include "hgconv/baselines.hpp"
#include "hgconv/config_io.hpp"
#include "hgconv/eval.hpp"
#include "hgconv/graph_io.hpp"
#include "hgconv/grad_suite.hpp"
#include "hgconv/param_io.hpp"
#include "hgconv/rng.hpp"
#include "hgconv/synthetic.hpp"
#include "hgconv/train.hpp"
#include "run_manifest.hpp"

extern char** environ;

namespace fs = std::filesystem;
using nlohmann::json;

namespace hgconv::cli {

namespace {

RunConfig load_config(const std::string& path) {
  return path.empty() ? RunConfig{} : parse_run_config(read_text_file(path));
}

std::size_t classes_for(const RunConfig& cfg, const Dataset& data) {
  return cfg.train.strategy == Strategy::unsupervised ? 0 : data.labels.num_classes;
}

std::string history_tsv(const TrainHistory& h) {
  std::string out = "epoch\ttrain_loss\tval_metric\n";
  for (const EpochRecord& e : h.epochs) {
    out += std::to_string(e.epoch) + "\t" + format_double(e.train_loss) + "\t" +
           format_double(e.val_metric) + "\n";
  }
  return out;
}

json metrics_json(const EvalReport& r, bool has_f1, const RunConfig& cfg, std::size_t num_test) {
  json j;
  if (has_f1) {
    j["macro_f1"] = r.f1.macro_f1;
    j["micro_f1"] = r.f1.micro_f1;
    j["per_class"] = json::array();
    for (std::size_t c = 0; c < r.f1.f1.size(); ++c) {
      j["per_class"].push_back(
          {{"class", c}, {"precision", r.f1.precision[c]}, {"recall", r.f1.recall[c]}, {"f1", r.f1.f1[c]}});
    }
    j["num_test"] = num_test;
  } else {
    j["macro_f1"] = nullptr;
    j["micro_f1"] = nullptr;
  }
  j["ari"] = r.clustering.ari;
  j["nmi"] = r.clustering.nmi;
  j["nmi_normalization"] = r.nmi_normalization;
  j["kmeans_restarts"] = 10;
  j["config"] = json::parse(run_config_json(cfg));
  return j;
}

struct TrainedRun {
  TrainResult result;
  ModelConfig model;
};

TrainedRun run_training(const Dataset& data, const RunConfig& cfg) {
  TrainedRun run;
  run.model = cfg.model(classes_for(cfg, data));
  run.result = train_hgconv(data, run.model, cfg.train);
  return run;
}

fs::path default_config_for(const std::string& model, const std::string& config) {
  return config.empty() ? fs::path(model).parent_path() / "config.json" : fs::path(config);
}

int run_sweep(const TrainOptions& o) {
  const json configs = json::parse(read_text_file(o.sweep));
  if (!configs.is_array() || configs.empty()) throw std::runtime_error("--sweep expects a nonempty JSON array");
  for (const json& c : configs) parse_run_config(c.dump());  // validate everything up front
  prepare_output_dir(o.out, o.force);
  RunManifest manifest("train --sweep", o.out);
  manifest.add_input("data", o.data);
  manifest.add_input("sweep", o.sweep);

  struct Child {
    pid_t pid;
    std::string name;
  };
  std::vector<std::string> names;
  std::vector<int> codes(configs.size(), -1);
  std::vector<Child> running;
  auto reap_one = [&]() {
    int status = 0;
    const pid_t pid = waitpid(-1, &status, 0);
    for (auto it = running.begin(); it != running.end(); ++it) {
      if (it->pid != pid) continue;
      const std::size_t idx = static_cast<std::size_t>(std::stoul(it->name.substr(4)));
      codes[idx] = WIFEXITED(status) ? WEXITSTATUS(status) : 128;
      running.erase(it);
      break;
    }
  };
  const std::string exe = fs::exists("/proc/self/exe") ? fs::read_symlink("/proc/self/exe").string() : o.self;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "run_%03zu", i);
    const std::string name = buf;
    names.push_back(name);
    manifest.write_output(name + ".config.json", configs[i].dump(2) + "\n");
    std::vector<std::string> args = {exe, "train", "--data", o.data, "--config",
                                     (fs::path(o.out) / (name + ".config.json")).string(), "--out",
                                     (fs::path(o.out) / name).string()};
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    while (running.size() >= std::max<std::size_t>(1, o.jobs)) reap_one();
    pid_t pid = 0;
    if (posix_spawn(&pid, exe.c_str(), nullptr, nullptr, argv.data(), environ) != 0) {
      throw std::runtime_error("cannot spawn sweep run " + name);
    }
    running.push_back({pid, name});
  }
  while (!running.empty()) reap_one();

  json runs = json::array();
  bool ok = true;
  for (std::size_t i = 0; i < names.size(); ++i) {
    runs.push_back({{"run", names[i]}, {"exit_code", codes[i]}});
    manifest.record_output(names[i]);
    ok = ok && codes[i] == 0;
  }
  manifest.set_config(json{{"runs", runs}});
  manifest.commit();
  return ok ? 0 : 1;
}

}  // namespace

int cmd_gen(const GenOptions& o) {
  const SyntheticSpec spec = parse_synthetic_spec(read_text_file(o.spec));
  const Dataset d = generate_synthetic(spec, o.seed);
  prepare_output_dir(o.out, o.force);
  save_dataset(o.out, d.graph, d.meta, d.labels, d.split);
  RunManifest manifest("gen", o.out);
  manifest.set_config(json::parse(synthetic_spec_json(spec)));
  manifest.set_seed(o.seed);
  manifest.add_input("spec", o.spec);
  for (const auto& entry : fs::directory_iterator(o.out)) {
    if (entry.path().filename() != "manifest.json") manifest.record_output(entry.path().filename().string());
  }
  manifest.commit();
  return 0;
}

int cmd_train(const TrainOptions& o) {
  thread_setting();
  if (!o.sweep.empty()) {
    if (!o.config.empty()) throw std::runtime_error("--sweep and --config are mutually exclusive");
    return run_sweep(o);
  }
  const RunConfig cfg = load_config(o.config);
  const Dataset data = load_dataset(o.data);
  prepare_output_dir(o.out, o.force);
  RunManifest manifest("train", o.out);
  manifest.set_config(json::parse(run_config_json(cfg)));
  manifest.set_seed(cfg.train.seed);
  manifest.add_input("data", o.data);
  if (!o.config.empty()) manifest.add_input("config", o.config);

  const TrainedRun run = run_training(data, cfg);
  manifest.write_output("model.json", params_to_json(run.result.params));
  manifest.write_output("config.json", run_config_json(cfg) + "\n");
  manifest.write_output("history.tsv", history_tsv(run.result.history));
  manifest.commit();
  std::cout << "best epoch " << run.result.history.best_epoch << " of "
            << run.result.history.stopped_epoch << "\n";
  return 0;
}

int cmd_eval(const EvalOptions& o) {
  thread_setting();
  const fs::path config_path = default_config_for(o.model, o.config);
  const RunConfig cfg = parse_run_config(read_text_file(config_path.string()));
  const Dataset data = load_dataset(o.data);
  const ParamStore params = load_params(o.model);
  const ModelConfig model_cfg = cfg.model(classes_for(cfg, data));
  HGConvModel model(data.graph, model_cfg, data.labels.node_type);
  const EvalReport report = evaluate(model, data, params, cfg.train.seed);

  prepare_output_dir(o.out, o.force);
  RunManifest manifest("eval", o.out);
  manifest.set_config(json::parse(run_config_json(cfg)));
  manifest.set_seed(cfg.train.seed);
  manifest.add_input("data", o.data);
  manifest.add_input("model", o.model);
  manifest.add_input("config", config_path);
  const json m = metrics_json(report, model_cfg.num_classes > 0, cfg, data.split.test.size());
  manifest.write_output("metrics.json", m.dump(2) + "\n");
  manifest.commit();
  if (model_cfg.num_classes > 0) {
    std::cout << "macro_f1 " << format_double(report.f1.macro_f1) << "\nmicro_f1 "
              << format_double(report.f1.micro_f1) << "\n";
  }
  std::cout << "ari " << format_double(report.clustering.ari) << "\nnmi "
            << format_double(report.clustering.nmi) << "\n";
  return 0;
}

int cmd_ablate(const AblateOptions& o) {
  thread_setting();
  RunConfig cfg = load_config(o.config);
  cfg.ablation = parse_ablation(o.variant);
  if (cfg.ablation == Ablation::none) throw std::runtime_error("ablate: variant must not be none");
  cfg.validate();
  const Dataset data = load_dataset(o.data);
  prepare_output_dir(o.out, o.force);
  RunManifest manifest("ablate", o.out);
  manifest.set_config(json::parse(run_config_json(cfg)));
  manifest.set_seed(cfg.train.seed);
  manifest.add_input("data", o.data);
  if (!o.config.empty()) manifest.add_input("config", o.config);

  const TrainedRun run = run_training(data, cfg);
  HGConvModel model(data.graph, with_dropout(run.model, cfg.train.dropout), data.labels.node_type);
  const EvalReport report = evaluate(model, data, run.result.params, cfg.train.seed);
  manifest.write_output("model.json", params_to_json(run.result.params));
  manifest.write_output("config.json", run_config_json(cfg) + "\n");
  manifest.write_output("history.tsv", history_tsv(run.result.history));
  const json m = metrics_json(report, run.model.num_classes > 0, cfg, data.split.test.size());
  manifest.write_output("metrics.json", m.dump(2) + "\n");
  manifest.commit();
  if (run.model.num_classes > 0) std::cout << "macro_f1 " << format_double(report.f1.macro_f1) << "\n";
  return 0;
}

int cmd_gradcheck(const GradcheckOptions& o) {
  thread_setting();
  const auto entries = run_grad_suite(o.seed, o.instances);
  bool ok = true;
  for (const GradCheckEntry& e : entries) {
    const bool pass = e.max_rel_err <= 1e-4;
    ok = ok && pass;
    std::printf("%-24s %.3e  %s\n", e.op.c_str(), e.max_rel_err, pass ? "ok" : "FAIL");
  }
  return ok ? 0 : 1;
}

int cmd_export(const ExportOptions& o) {
  thread_setting();
  const fs::path config_path = default_config_for(o.model, o.config);
  const RunConfig cfg = parse_run_config(read_text_file(config_path.string()));
  const Dataset data = load_dataset(o.data);
  const ParamStore params = load_params(o.model);
  const ModelConfig model_cfg = cfg.model(classes_for(cfg, data));
  const NodeTypeId type = o.type.empty() ? data.labels.node_type : data.graph.find_node_type(o.type);

  std::string name, text;
  if (o.what == "attention") {
    if (!o.node) throw std::runtime_error("export attention: --node is required");
    const AttentionRecord rec = export_attention(data.graph, model_cfg, params, type, *o.node);
    name = "attention_" + std::to_string(*o.node) + ".tsv";
    text = attention_tsv(data.graph, rec);
  } else {
    Tape tape;
    BoundParams bound(tape, params);
    const ModelOutput out =
        model_forward(tape, data.graph, model_cfg, bound, data.labels.node_type, ForwardContext{false, 0});
    const Tensor& emb = out.embeddings.at(type).value();
    if (o.what == "embeddings") {
      name = "embeddings.tsv";
      text = embeddings_tsv(emb);
    } else if (o.what == "projection") {
      const PcaResult pca = pca_project(emb, 2, derive_seed(cfg.train.seed, "pca"));
      if (pca.rank_deficient) {
        std::cerr << "hgconv: warning: embeddings have rank < 2; projection has "
                  << pca.projection.cols() << " column(s)\n";
      }
      name = "projection.tsv";
      const LabelSet none{type, {}, 0};
      text = projection_tsv(pca.projection, type == data.labels.node_type ? data.labels : none);
    } else {
      throw std::runtime_error("export: unknown --what " + o.what);
    }
  }
  prepare_output_dir(o.out, o.force);
  RunManifest manifest("export " + o.what, o.out);
  manifest.set_config(json::parse(run_config_json(cfg)));
  manifest.set_seed(cfg.train.seed);
  manifest.add_input("data", o.data);
  manifest.add_input("model", o.model);
  manifest.add_input("config", config_path);
  manifest.write_output(name, text);
  manifest.commit();
  return 0;
}

}  // namespace hgconv::cli
