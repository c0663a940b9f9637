#include "hgconv/config_io.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace hgconv {

using nlohmann::json;

Ablation parse_ablation(std::string_view name) {
  if (name == "none") return Ablation::none;
  if (name == "no-micro") return Ablation::no_micro;
  if (name == "no-macro") return Ablation::no_macro;
  if (name == "no-wrc") return Ablation::no_wrc;
  throw std::invalid_argument("unknown ablation variant: " + std::string(name));
}

std::string ablation_name(Ablation a) {
  switch (a) {
    case Ablation::none: return "none";
    case Ablation::no_micro: return "no-micro";
    case Ablation::no_macro: return "no-macro";
    case Ablation::no_wrc: return "no-wrc";
  }
  return "none";
}

LayerConfig apply_ablation(LayerConfig layer, Ablation a) {
  layer.no_micro = a == Ablation::no_micro;
  layer.no_macro = a == Ablation::no_macro;
  layer.no_wrc = a == Ablation::no_wrc;
  return layer;
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "elu") return Activation::elu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "identity") return Activation::identity;
  throw std::invalid_argument("unknown activation: " + std::string(name));
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::elu: return "elu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::identity: return "identity";
  }
  return "relu";
}

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::semi_supervised: return "semi_supervised";
    case Strategy::unsupervised: return "unsupervised";
    case Strategy::joint: return "joint";
  }
  return "semi_supervised";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "semi_supervised") return Strategy::semi_supervised;
  if (name == "unsupervised") return Strategy::unsupervised;
  if (name == "joint") return Strategy::joint;
  throw std::invalid_argument("unknown strategy: " + std::string(name));
}

LayerConfig RunConfig::layer() const {
  LayerConfig l;
  l.heads = heads;
  l.head_dim = head_dim;
  l.activation = activation;
  l.attn_dropout = train.dropout;
  l.feat_dropout = train.dropout;
  return apply_ablation(l, ablation);
}

ModelConfig RunConfig::model(std::size_t num_classes) const {
  ModelConfig m = ModelConfig::stacked(num_layers, layer(), num_classes);
  m.rgcn.enabled = rgcn_mode;
  m.rgcn.norm = rgcn_norm;
  return m;
}

void RunConfig::validate() const {
  if (num_layers < 1) throw std::invalid_argument("config: num_layers must be >= 1");
  if (heads < 1 || head_dim < 1) throw std::invalid_argument("config: heads and head_dim must be >= 1");
  if (rgcn_mode && ablation != Ablation::none) {
    throw std::invalid_argument("config: rgcn_mode cannot be combined with an ablation");
  }
  train.validate();
}

namespace {

json parse_object(std::string_view text, const char* what) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string(what) + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + ": expected a JSON object");
  return j;
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& what) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument(what + ": unknown key \"" + key + "\"");
  }
}

template <class T>
T get(const json& j, const std::string& key, const std::string& what) {
  try {
    if constexpr (std::is_same_v<T, std::size_t>) {
      if (!j.at(key).is_number_unsigned()) throw std::invalid_argument("not a non-negative integer");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!j.at(key).is_number()) throw std::invalid_argument("not a number");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!j.at(key).is_boolean()) throw std::invalid_argument("not a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!j.at(key).is_string()) throw std::invalid_argument("not a string");
    }
    return j.at(key).get<T>();
  } catch (const std::exception& e) {
    throw std::invalid_argument(what + ": key \"" + key + "\": " + e.what());
  }
}

}  // namespace

RunConfig parse_run_config(std::string_view text) {
  const json j = parse_object(text, "config");
  reject_unknown(j, {"num_layers", "heads", "head_dim", "activation", "ablation", "rgcn_mode",
                     "rgcn_norm", "max_epochs", "patience", "lr", "dropout", "seed", "strategy",
                     "joint_weight", "negatives", "train_fraction"},
                 "config");
  RunConfig c;
  const std::string w = "config";
  if (j.contains("num_layers")) c.num_layers = get<std::size_t>(j, "num_layers", w);
  if (j.contains("heads")) c.heads = get<std::size_t>(j, "heads", w);
  if (j.contains("head_dim")) c.head_dim = get<std::size_t>(j, "head_dim", w);
  if (j.contains("activation")) c.activation = parse_activation(get<std::string>(j, "activation", w));
  if (j.contains("ablation")) c.ablation = parse_ablation(get<std::string>(j, "ablation", w));
  if (j.contains("rgcn_mode")) c.rgcn_mode = get<bool>(j, "rgcn_mode", w);
  if (j.contains("rgcn_norm")) {
    const auto n = get<std::string>(j, "rgcn_norm", w);
    if (n == "mean") c.rgcn_norm = RgcnNorm::mean;
    else if (n == "symmetric") c.rgcn_norm = RgcnNorm::symmetric;
    else throw std::invalid_argument("config: key \"rgcn_norm\": expected mean or symmetric");
  }
  TrainConfig& t = c.train;
  if (j.contains("max_epochs")) t.max_epochs = get<std::size_t>(j, "max_epochs", w);
  if (j.contains("patience")) t.patience = get<std::size_t>(j, "patience", w);
  if (j.contains("lr")) t.lr = get<double>(j, "lr", w);
  if (j.contains("dropout")) t.dropout = get<double>(j, "dropout", w);
  if (j.contains("seed")) t.seed = get<std::uint64_t>(j, "seed", w);
  if (j.contains("strategy")) t.strategy = parse_strategy(get<std::string>(j, "strategy", w));
  if (j.contains("joint_weight")) t.joint_weight = get<double>(j, "joint_weight", w);
  if (j.contains("negatives")) t.negatives = get<std::size_t>(j, "negatives", w);
  if (j.contains("train_fraction")) t.train_fraction = get<double>(j, "train_fraction", w);
  c.validate();
  return c;
}

std::string run_config_json(const RunConfig& c) {
  json j;
  j["num_layers"] = c.num_layers;
  j["heads"] = c.heads;
  j["head_dim"] = c.head_dim;
  j["activation"] = activation_name(c.activation);
  j["ablation"] = ablation_name(c.ablation);
  j["rgcn_mode"] = c.rgcn_mode;
  j["rgcn_norm"] = c.rgcn_norm == RgcnNorm::mean ? "mean" : "symmetric";
  j["max_epochs"] = c.train.max_epochs;
  j["patience"] = c.train.patience;
  j["lr"] = c.train.lr;
  j["dropout"] = c.train.dropout;
  j["seed"] = c.train.seed;
  j["strategy"] = strategy_name(c.train.strategy);
  j["joint_weight"] = c.train.joint_weight;
  j["negatives"] = c.train.negatives;
  j["train_fraction"] = c.train.train_fraction;
  return j.dump(2);
}

SyntheticSpec parse_synthetic_spec(std::string_view text) {
  const json j = parse_object(text, "spec");
  const std::string w = "spec";
  reject_unknown(j, {"node_types", "relations", "label_type", "num_classes", "signal", "homophily",
                     "signal_strength", "label_attr_strength"},
                 w);
  SyntheticSpec s;
  if (!j.contains("node_types") || !j["node_types"].is_array()) {
    throw std::invalid_argument("spec: \"node_types\" array required");
  }
  for (const json& t : j["node_types"]) {
    if (!t.is_object()) throw std::invalid_argument("spec: node type entries must be objects");
    reject_unknown(t, {"name", "count", "attr_dim"}, "spec node type");
    s.node_types.push_back({get<std::string>(t, "name", "spec node type"),
                            get<std::size_t>(t, "count", "spec node type"),
                            get<std::size_t>(t, "attr_dim", "spec node type")});
  }
  if (!j.contains("relations") || !j["relations"].is_array()) {
    throw std::invalid_argument("spec: \"relations\" array required");
  }
  for (const json& r : j["relations"]) {
    if (!r.is_object()) throw std::invalid_argument("spec: relation entries must be objects");
    const std::string rw = "spec relation";
    reject_unknown(r, {"src", "edge", "dst", "mean_degree", "homophily"}, rw);
    SyntheticRelation rel;
    rel.src = get<std::string>(r, "src", rw);
    rel.edge = get<std::string>(r, "edge", rw);
    rel.dst = get<std::string>(r, "dst", rw);
    rel.mean_degree = get<double>(r, "mean_degree", rw);
    if (r.contains("homophily")) rel.homophily = get<double>(r, "homophily", rw);
    s.relations.push_back(rel);
  }
  s.label_type = get<std::string>(j, "label_type", w);
  s.num_classes = get<std::size_t>(j, "num_classes", w);
  const std::string sig = j.contains("signal") ? get<std::string>(j, "signal", w) : "structure_only";
  if (sig == "structure_only") s.signal = Signal::structure_only;
  else if (sig == "attribute_only") s.signal = Signal::attribute_only;
  else if (sig == "mixed") s.signal = Signal::mixed;
  else throw std::invalid_argument("spec: unknown signal \"" + sig + "\"");
  if (j.contains("homophily")) s.homophily = get<double>(j, "homophily", w);
  if (j.contains("signal_strength")) s.signal_strength = get<double>(j, "signal_strength", w);
  if (j.contains("label_attr_strength")) s.label_attr_strength = get<double>(j, "label_attr_strength", w);
  return s;
}

std::string synthetic_spec_json(const SyntheticSpec& s) {
  json j;
  j["node_types"] = json::array();
  for (const auto& t : s.node_types) {
    j["node_types"].push_back({{"name", t.name}, {"count", t.count}, {"attr_dim", t.attr_dim}});
  }
  j["relations"] = json::array();
  for (const auto& r : s.relations) {
    json rj = {{"src", r.src}, {"edge", r.edge}, {"dst", r.dst}, {"mean_degree", r.mean_degree}};
    if (r.homophily) rj["homophily"] = *r.homophily;
    j["relations"].push_back(rj);
  }
  j["label_type"] = s.label_type;
  j["num_classes"] = s.num_classes;
  j["signal"] = s.signal == Signal::structure_only ? "structure_only"
                : s.signal == Signal::attribute_only ? "attribute_only"
                                                     : "mixed";
  j["homophily"] = s.homophily;
  j["signal_strength"] = s.signal_strength;
  j["label_attr_strength"] = s.label_attr_strength;
  return j.dump(2);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace hgconv
