#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "hgconv/conv.hpp"
#include "hgconv/eval.hpp"
#include "hgconv/graph_io.hpp"
#include "hgconv/optim.hpp"

namespace hgconv {

enum class Strategy { semi_supervised, unsupervised, joint };

struct TrainConfig {
  std::size_t max_epochs = 300;
  std::size_t patience = 100;
  double lr = 0.005;
  double dropout = 0.0;        // feature and attention dropout of every layer
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::semi_supervised;
  double joint_weight = 0.5;   // ω: ω·cross-entropy + (1-ω)·skip-gram
  std::size_t negatives = 1;   // per positive pair
  double train_fraction = 1.0; // leading share of the training split actually used

  void validate() const;
};

struct NodeRef {
  NodeTypeId type = 0;
  std::size_t node = 0;
  friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

struct NodePair {
  NodeRef a;  // focal / destination
  NodeRef b;  // source (or its negative replacement)
  RelationId relation = 0;
  friend bool operator==(const NodePair&, const NodePair&) = default;
};

struct PairSet {
  std::vector<NodePair> positives;
  std::vector<NodePair> negatives;
  friend bool operator==(const PairSet&, const PairSet&) = default;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;
  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  std::size_t stopped_epoch = 0;
  friend bool operator==(const TrainHistory&, const TrainHistory&) = default;
};

/// Summed softmax cross-entropy of rows against labels. Requires C >= 2.
Var semi_supervised_loss(Var logits, const Index& labels);

/// -Σ_P log σ(h_v·h_u) - Σ_N log σ(-h_v'·h_u').
Var unsupervised_loss(const NodeReps& embeddings, const PairSet& pairs);

/// ω·supervised + (1-ω)·unsupervised; returns the single term unchanged at ω = 1 or 0,
/// so only that term needs to be valid there.
Var joint_loss(Var supervised, Var unsupervised, double weight);

/// Positives: every edge of every non-inverse relation. Each positive gets k
/// negatives whose source is a uniform non-neighbor of the same type.
/// Deterministic per (seed, epoch).
PairSet sample_pairs(const HeteroGraph& g, std::size_t k, std::uint64_t seed, std::size_t epoch);

/// Tracks the best validation metric; ties keep the earliest epoch.
class EarlyStopping {
 public:
  EarlyStopping(std::size_t patience, bool higher_is_better);

  /// Records an epoch's metric; returns true when it is a new best.
  bool update(std::size_t epoch, double metric);
  bool should_stop() const { return since_best_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_metric() const { return best_; }

 private:
  std::size_t patience_;
  bool higher_;
  double best_;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
};

/// Anything with parameters that maps the dataset to label-type logits and
/// per-type embeddings.
class Trainable {
 public:
  virtual ~Trainable() = default;
  virtual ParamStore init(std::uint64_t seed) const = 0;
  virtual ModelOutput forward(Tape& tape, const BoundParams& p, const ForwardContext& ctx) const = 0;
};

class HGConvModel final : public Trainable {
 public:
  HGConvModel(const HeteroGraph& g, ModelConfig cfg, NodeTypeId label_type);

  ParamStore init(std::uint64_t seed) const override;
  ModelOutput forward(Tape& tape, const BoundParams& p, const ForwardContext& ctx) const override;
  const ModelConfig& config() const { return cfg_; }

 private:
  const HeteroGraph& g_;
  ModelConfig cfg_;
  NodeTypeId label_type_;
};

struct TrainResult {
  ParamStore params;  // from the best validation epoch
  TrainHistory history;
};

/// Full-batch training with one Adam step per epoch and early stopping on the
/// validation metric (Macro-F1, or skip-gram loss for the unsupervised strategy).
TrainResult train(const Trainable& model, const Dataset& data, const TrainConfig& cfg);

/// Convenience: HGConv with layer dropouts taken from the train config.
TrainResult train_hgconv(const Dataset& data, ModelConfig model_cfg, const TrainConfig& cfg);

/// Applies TrainConfig::dropout to every layer.
ModelConfig with_dropout(ModelConfig cfg, double dropout);

/// Leading share of the training split used for a given fraction (at least one node).
std::vector<std::size_t> training_nodes(const SplitSpec& split, double fraction);

/// Test-split F1 plus k-means clustering (k = C, restarts seeded from `seed`) of
/// the labeled nodes' final embeddings.
EvalReport evaluate(const Trainable& model, const Dataset& data, const ParamStore& params,
                    std::uint64_t seed, std::size_t restarts = 10);

/// Argmax per row.
std::vector<std::size_t> predict(const Tensor& logits, const std::vector<std::size_t>& rows);

}  // namespace hgconv
