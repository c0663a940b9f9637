#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

using namespace hgconv::cli;

int main(int argc, char** argv) {
  CLI::App app{"hgconv: hybrid micro/macro heterogeneous graph convolution toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", HGCONV_VERSION);

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic graph directory");
  g->add_option("--spec", gen.spec, "Synthetic spec JSON")->required()->check(CLI::ExistingFile);
  g->add_option("--seed", gen.seed, "Root seed")->required();
  g->add_option("--out", gen.out, "Output graph directory")->required();
  g->add_flag("--force", gen.force, "Replace an existing output directory");

  TrainOptions tr;
  tr.self = argv[0];
  auto* t = app.add_subcommand("train", "Train HGConv and write model.json, history.tsv");
  t->add_option("--data", tr.data, "Graph directory")->required()->check(CLI::ExistingDirectory);
  t->add_option("--config", tr.config, "Run config JSON")->check(CLI::ExistingFile);
  t->add_option("--out", tr.out, "Output directory")->required();
  t->add_flag("--force", tr.force, "Replace an existing output directory");
  t->add_option("--sweep", tr.sweep, "JSON array of configs, one process per entry")
      ->check(CLI::ExistingFile);
  t->add_option("--jobs", tr.jobs, "Concurrent sweep processes")->check(CLI::PositiveNumber);

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "Evaluate a trained model and write metrics.json");
  e->add_option("--data", ev.data, "Graph directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--model", ev.model, "model.json")->required()->check(CLI::ExistingFile);
  e->add_option("--config", ev.config, "Run config (default: config.json next to the model)")
      ->check(CLI::ExistingFile);
  e->add_option("--out", ev.out, "Output directory")->required();
  e->add_flag("--force", ev.force, "Replace an existing output directory");

  AblateOptions ab;
  auto* a = app.add_subcommand("ablate", "Train and evaluate one ablation variant");
  a->add_option("--variant", ab.variant, "Ablation variant")
      ->required()
      ->check(CLI::IsMember({"no-micro", "no-macro", "no-wrc"}));
  a->add_option("--data", ab.data, "Graph directory")->required()->check(CLI::ExistingDirectory);
  a->add_option("--config", ab.config, "Run config JSON")->check(CLI::ExistingFile);
  a->add_option("--out", ab.out, "Output directory")->required();
  a->add_flag("--force", ab.force, "Replace an existing output directory");

  GradcheckOptions gc;
  auto* c = app.add_subcommand("gradcheck", "Finite-difference check of every op and the full model");
  c->add_option("--seed", gc.seed, "Root seed")->required();
  c->add_option("--instances", gc.instances, "Random instances per op")->check(CLI::PositiveNumber);

  ExportOptions ex;
  auto* x = app.add_subcommand("export", "Export attention, embeddings or a 2-D projection");
  x->add_option("--what", ex.what, "What to export")
      ->required()
      ->check(CLI::IsMember({"attention", "embeddings", "projection"}));
  x->add_option("--data", ex.data, "Graph directory")->required()->check(CLI::ExistingDirectory);
  x->add_option("--model", ex.model, "model.json")->required()->check(CLI::ExistingFile);
  x->add_option("--config", ex.config, "Run config (default: config.json next to the model)")
      ->check(CLI::ExistingFile);
  x->add_option("--out", ex.out, "Output directory")->required();
  x->add_option("--type", ex.type, "Node type (default: the labeled type)");
  x->add_option("--node", ex.node, "Focal node id for attention");
  x->add_flag("--force", ex.force, "Replace an existing output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*g) return cmd_gen(gen);
    if (*t) return cmd_train(tr);
    if (*e) return cmd_eval(ev);
    if (*a) return cmd_ablate(ab);
    if (*c) return cmd_gradcheck(gc);
    if (*x) return cmd_export(ex);
  } catch (const std::exception& err) {
    std::cerr << "hgconv: error: " << err.what() << "\n";
    return 1;
  }
  return 1;
}
