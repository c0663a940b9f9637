#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "hgconv/graph_io.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace hgconv;
using hgconv::testing::read_text;
using hgconv::testing::run_cli;
using hgconv::testing::scratch_dir;
using hgconv::testing::tree_contents;
using hgconv::testing::write_text;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kTinySpec = R"({
  "node_types": [{"name": "P", "count": 36, "attr_dim": 4}, {"name": "A", "count": 12, "attr_dim": 4}],
  "relations": [{"src": "A", "edge": "writes", "dst": "P", "mean_degree": 2}],
  "label_type": "P", "num_classes": 3, "signal": "mixed"})";

constexpr const char* kShortConfig = R"({"heads": 2, "head_dim": 4, "max_epochs": 15, "patience": 15})";

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = scratch_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    write_text(dir / "spec.json", kTinySpec);
    write_text(dir / "short.json", kShortConfig);
    ASSERT_EQ(run_cli("gen --spec " + q(dir / "spec.json") + " --seed 4 --out " + q(dir / "g"), dir / "gen.log"), 0)
        << read_text(dir / "gen.log");
  }

  int run(const std::string& args) { return run_cli(args, dir / "cli.log"); }
  std::string log() const { return read_text(dir / "cli.log"); }

  fs::path dir;
};

}  // namespace

TEST_F(Cli, GenIsDeterministic) {
  ASSERT_EQ(run("gen --spec " + q(dir / "spec.json") + " --seed 4 --out " + q(dir / "g2")), 0) << log();
  EXPECT_EQ(tree_contents(dir / "g"), tree_contents(dir / "g2"));
  ASSERT_EQ(run("gen --spec " + q(dir / "spec.json") + " --seed 5 --out " + q(dir / "g3")), 0) << log();
  EXPECT_NE(tree_contents(dir / "g"), tree_contents(dir / "g3"));
}

TEST_F(Cli, GenWritesAllClasses) {
  std::istringstream labels(read_text(dir / "g" / "labels.tsv"));
  std::set<int> classes;
  std::size_t node = 0;
  int cls = 0;
  while (labels >> node >> cls) classes.insert(cls);
  EXPECT_EQ(classes, (std::set<int>{0, 1, 2}));
  const json m = json::parse(read_text(dir / "g" / "manifest.json"));
  EXPECT_EQ(m["command"], "gen");
  EXPECT_EQ(m["seed"], 4);
}

TEST_F(Cli, ExistingOutputNeedsForce) {
  EXPECT_EQ(run("gen --spec " + q(dir / "spec.json") + " --seed 4 --out " + q(dir / "g")), 1);
  EXPECT_NE(log().find("hgconv: error:"), std::string::npos);
  EXPECT_NE(log().find("--force"), std::string::npos);
  EXPECT_EQ(run("gen --spec " + q(dir / "spec.json") + " --seed 4 --out " + q(dir / "g") + " --force"), 0) << log();
}

TEST_F(Cli, TrainDefaultsEchoInConfig) {
  ASSERT_EQ(run("train --data " + q(dir / "g") + " --out " + q(dir / "run")), 0) << log();
  const json c = json::parse(read_text(dir / "run" / "config.json"));
  EXPECT_EQ(c["heads"], 8);
  EXPECT_EQ(c["head_dim"], 8);
  EXPECT_EQ(c["num_layers"], 2);
  const json model = json::parse(read_text(dir / "run" / "model.json"));
  EXPECT_TRUE(model.contains("layer2.res.gate.P"));
  const json m = json::parse(read_text(dir / "run" / "manifest.json"));
  std::set<std::string> outputs(m["outputs"].begin(), m["outputs"].end());
  EXPECT_EQ(outputs, (std::set<std::string>{"model.json", "config.json", "history.tsv"}));
  for (const auto& name : outputs) EXPECT_TRUE(fs::exists(dir / "run" / name));
}

TEST_F(Cli, UnknownConfigKeyIsAnError) {
  write_text(dir / "bad.json", R"({"heads": 2, "hidden": 16})");
  EXPECT_EQ(run("train --data " + q(dir / "g") + " --config " + q(dir / "bad.json") + " --out " + q(dir / "run")), 1);
  EXPECT_NE(log().find("unknown key \"hidden\""), std::string::npos) << log();
  EXPECT_FALSE(fs::exists(dir / "run"));
}

TEST_F(Cli, TrainEvalAreReproducible) {
  const std::string cfg = " --config " + q(dir / "short.json");
  ASSERT_EQ(run("train --data " + q(dir / "g") + cfg + " --out " + q(dir / "a")), 0) << log();
  ASSERT_EQ(run("train --data " + q(dir / "g") + cfg + " --out " + q(dir / "b")), 0) << log();
  EXPECT_EQ(tree_contents(dir / "a"), tree_contents(dir / "b"));
  ASSERT_EQ(run("eval --data " + q(dir / "g") + " --model " + q(dir / "a" / "model.json") + " --out " + q(dir / "ea")),
            0)
      << log();
  ASSERT_EQ(run("eval --data " + q(dir / "g") + " --model " + q(dir / "b" / "model.json") + " --out " + q(dir / "eb")),
            0)
      << log();
  EXPECT_EQ(read_text(dir / "ea" / "metrics.json"), read_text(dir / "eb" / "metrics.json"));
  const json m = json::parse(read_text(dir / "ea" / "metrics.json"));
  for (const char* key : {"macro_f1", "micro_f1", "per_class", "num_test", "ari", "nmi", "nmi_normalization"})
    EXPECT_TRUE(m.contains(key)) << key;
  EXPECT_EQ(m["per_class"].size(), 3u);
  EXPECT_EQ(m["config"]["heads"], 2);
}

TEST_F(Cli, NoWrcModelHasNoResidualParameters) {
  ASSERT_EQ(run("ablate --variant no-wrc --data " + q(dir / "g") + " --config " + q(dir / "short.json") +
                " --out " + q(dir / "ab")),
            0)
      << log();
  const json model = json::parse(read_text(dir / "ab" / "model.json"));
  ASSERT_FALSE(model.empty());
  for (const auto& [key, value] : model.items()) EXPECT_EQ(key.find(".res."), std::string::npos) << key;
  EXPECT_TRUE(fs::exists(dir / "ab" / "metrics.json"));
  EXPECT_EQ(json::parse(read_text(dir / "ab" / "config.json"))["ablation"], "no-wrc");
}

TEST_F(Cli, ExportsAttentionAndProjection) {
  ASSERT_EQ(run("train --data " + q(dir / "g") + " --config " + q(dir / "short.json") + " --out " + q(dir / "run")),
            0)
      << log();
  const Dataset d = load_dataset(dir / "g");
  const NodeTypeId a = d.graph.find_node_type("A");
  std::size_t focal = 0;
  while (d.graph.relations_of(focal, a).empty()) ++focal;
  const std::string model = " --model " + q(dir / "run" / "model.json") + " --data " + q(dir / "g");
  ASSERT_EQ(run("export --what attention --type A --node " + std::to_string(focal) + model + " --out " +
                q(dir / "att")),
            0)
      << log();
  std::istringstream rows(read_text(dir / "att" / ("attention_" + std::to_string(focal) + ".tsv")));
  std::string first;
  std::getline(rows, first);
  EXPECT_EQ(first, d.graph.relation_name(d.graph.relations_of(focal, a).front()) + "\t1");
  double alpha_sum = 0.0;
  for (std::string line; std::getline(rows, line);) alpha_sum += std::stod(line.substr(line.rfind('\t') + 1));
  EXPECT_NEAR(alpha_sum, 1.0, 1e-9);

  ASSERT_EQ(run("export --what projection" + model + " --out " + q(dir / "proj")), 0) << log();
  std::istringstream proj(read_text(dir / "proj" / "projection.tsv"));
  std::size_t lines = 0;
  for (std::string line; std::getline(proj, line);) ++lines;
  EXPECT_EQ(lines, 36u);
}

TEST_F(Cli, GradcheckPassesAtSeedZero) {
  EXPECT_EQ(run("gradcheck --seed 0 --instances 2"), 0) << log();
  EXPECT_NE(log().find("segment_softmax"), std::string::npos) << log();
}

TEST_F(Cli, BadThreadSettingIsRejected) {
  const std::string cmd = std::string("HGCONV_THREADS=zero '") + HGCONV_CLI_PATH + "' gradcheck --seed 0 > " +
                          (dir / "t.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  EXPECT_NE(WEXITSTATUS(status), 0);
}
