#pragma once

#include <string>
#include <string_view>

#include "hgconv/conv.hpp"
#include "hgconv/synthetic.hpp"
#include "hgconv/train.hpp"

namespace hgconv {

enum class Ablation { none, no_micro, no_macro, no_wrc };

Ablation parse_ablation(std::string_view name);  // "none" | "no-micro" | "no-macro" | "no-wrc"
std::string ablation_name(Ablation a);
LayerConfig apply_ablation(LayerConfig layer, Ablation a);

Activation parse_activation(std::string_view name);  // relu | elu | sigmoid | identity
std::string activation_name(Activation a);

std::string strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);  // semi_supervised | unsupervised | joint

/// Everything a training run needs besides the data. Flat JSON object; every key
/// is optional and unknown keys are rejected.
struct RunConfig {
  std::size_t num_layers = 2;
  std::size_t heads = 8;
  std::size_t head_dim = 8;
  Activation activation = Activation::relu;
  Ablation ablation = Ablation::none;
  bool rgcn_mode = false;
  RgcnNorm rgcn_norm = RgcnNorm::mean;
  TrainConfig train;

  LayerConfig layer() const;
  /// Stacked model for `num_classes` (0 under the unsupervised strategy).
  ModelConfig model(std::size_t num_classes) const;
  void validate() const;
};

RunConfig parse_run_config(std::string_view json_text);
/// Fully resolved config, every key present, sorted, 2-space indent.
std::string run_config_json(const RunConfig& cfg);

/// {"node_types": [{"name", "count", "attr_dim"}], "relations": [{"src", "edge",
/// "dst", "mean_degree", "homophily"?}], "label_type", "num_classes", "signal",
/// "homophily"?, "signal_strength"?, "label_attr_strength"?}
SyntheticSpec parse_synthetic_spec(std::string_view json_text);
std::string synthetic_spec_json(const SyntheticSpec& spec);

std::string read_text_file(const std::string& path);

}  // namespace hgconv
