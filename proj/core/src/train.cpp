#include "hgconv/train.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hgconv/eval.hpp"
#include "hgconv/rng.hpp"

namespace hgconv {

void TrainConfig::validate() const {
  if (max_epochs < 1) throw std::invalid_argument("train: max_epochs must be >= 1");
  if (patience > max_epochs) throw std::invalid_argument("train: patience must be <= max_epochs");
  if (!(lr > 0.0)) throw std::invalid_argument("train: lr must be > 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("train: dropout must be in [0, 1)");
  if (!(joint_weight >= 0.0 && joint_weight <= 1.0)) {
    throw std::invalid_argument("train: joint_weight must be in [0, 1]");
  }
  if (negatives < 1) throw std::invalid_argument("train: negatives must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw std::invalid_argument("train: train_fraction must be in (0, 1]");
  }
}

Var semi_supervised_loss(Var logits, const Index& labels) {
  if (logits.cols() < 2) throw std::invalid_argument("semi_supervised_loss: need at least 2 classes");
  return softmax_cross_entropy(logits, labels);
}

Var unsupervised_loss(const NodeReps& embeddings, const PairSet& pairs) {
  if (embeddings.empty()) throw std::invalid_argument("unsupervised_loss: no embeddings");
  if (pairs.positives.empty() && pairs.negatives.empty()) {
    throw std::invalid_argument("unsupervised_loss: empty pair set");
  }
  std::vector<std::size_t> offset(embeddings.size() + 1, 0);
  for (std::size_t t = 0; t < embeddings.size(); ++t) offset[t + 1] = offset[t] + embeddings[t].rows();
  Var all = embeddings.size() == 1 ? embeddings.front() : concat_rows(embeddings);
  auto global = [&](const NodeRef& r) {
    if (r.type >= embeddings.size() || r.node >= embeddings[r.type].rows()) {
      throw std::out_of_range("unsupervised_loss: invalid pair id");
    }
    return offset[r.type] + r.node;
  };
  auto log_likelihood = [&](const std::vector<NodePair>& set, double sign) {
    Index lhs, rhs;
    for (const NodePair& p : set) {
      lhs.push_back(global(p.a));
      rhs.push_back(global(p.b));
    }
    Var dots = row_dot(row_select(all, lhs), row_select(all, rhs));
    return sum(log_sigmoid(sign == 1.0 ? dots : scale(dots, sign)));
  };
  Var total;
  if (!pairs.positives.empty()) total = log_likelihood(pairs.positives, 1.0);
  if (!pairs.negatives.empty()) {
    Var neg = log_likelihood(pairs.negatives, -1.0);
    total = total.valid() ? add(total, neg) : neg;
  }
  return scale(total, -1.0);
}

Var joint_loss(Var supervised, Var unsupervised, double weight) {
  if (!(weight >= 0.0 && weight <= 1.0)) throw std::invalid_argument("joint_loss: weight must be in [0, 1]");
  if (weight == 1.0) return supervised;
  if (weight == 0.0) return unsupervised;
  return add(scale(supervised, weight), scale(unsupervised, 1.0 - weight));
}

PairSet sample_pairs(const HeteroGraph& g, std::size_t k, std::uint64_t seed, std::size_t epoch) {
  if (k < 1) throw std::invalid_argument("sample_pairs: k must be >= 1");
  Rng rng(derive_seed(seed, "negatives", epoch));
  PairSet out;
  for (const Relation& rel : g.relations()) {
    if (rel.is_inverse) continue;
    const std::size_t ns = g.node_type(rel.src_type).count;
    const std::size_t nd = g.node_type(rel.dst_type).count;
    for (std::size_t v = 0; v < nd; ++v) {
      const auto nbrs = g.neighbors(rel.id, v);
      if (nbrs.empty()) continue;
      if (nbrs.size() >= ns) {
        throw std::invalid_argument("sample_pairs: negative sampling infeasible for relation " +
                                    g.relation_name(rel.id) + " (node " + std::to_string(v) +
                                    " neighbors every source)");
      }
      for (std::size_t u : nbrs) {
        out.positives.push_back({{rel.dst_type, v}, {rel.src_type, u}, rel.id});
        for (std::size_t j = 0; j < k; ++j) {
          // r-th non-neighbor, walking the sorted neighbor list.
          std::size_t cand = rng.below(ns - nbrs.size());
          for (std::size_t n : nbrs) {
            if (n <= cand) ++cand;
            else break;
          }
          out.negatives.push_back({{rel.dst_type, v}, {rel.src_type, cand}, rel.id});
        }
      }
    }
  }
  if (out.positives.empty()) throw std::invalid_argument("sample_pairs: graph has no edges");
  return out;
}

EarlyStopping::EarlyStopping(std::size_t patience, bool higher_is_better)
    : patience_(patience),
      higher_(higher_is_better),
      best_(higher_is_better ? -std::numeric_limits<double>::infinity()
                             : std::numeric_limits<double>::infinity()) {}

bool EarlyStopping::update(std::size_t epoch, double metric) {
  const bool improved = best_epoch_ == 0 || (higher_ ? metric > best_ : metric < best_);
  if (improved) {
    best_ = metric;
    best_epoch_ = epoch;
    since_best_ = 0;
  } else {
    ++since_best_;
  }
  return improved;
}

HGConvModel::HGConvModel(const HeteroGraph& g, ModelConfig cfg, NodeTypeId label_type)
    : g_(g), cfg_(std::move(cfg)), label_type_(label_type) {
  cfg_.validate();
}

ParamStore HGConvModel::init(std::uint64_t seed) const { return init_params(g_, cfg_, seed); }

ModelOutput HGConvModel::forward(Tape& tape, const BoundParams& p, const ForwardContext& ctx) const {
  return model_forward(tape, g_, cfg_, p, label_type_, ctx);
}

ModelConfig with_dropout(ModelConfig cfg, double dropout) {
  for (LayerConfig& l : cfg.layers) {
    l.feat_dropout = dropout;
    l.attn_dropout = dropout;
  }
  return cfg;
}

std::vector<std::size_t> training_nodes(const SplitSpec& split, double fraction) {
  const auto n = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(split.train.size()) - 1e-9));
  const std::size_t keep = std::clamp<std::size_t>(n, 1, split.train.size());
  return {split.train.begin(), split.train.begin() + static_cast<long>(keep)};
}

std::vector<std::size_t> predict(const Tensor& logits, const std::vector<std::size_t>& rows) {
  std::vector<std::size_t> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) {
    auto row = logits.row(r);
    out.push_back(static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()));
  }
  return out;
}

namespace {

Index labels_of(const LabelSet& ls, const std::vector<std::size_t>& nodes) {
  Index out;
  out.reserve(nodes.size());
  for (std::size_t v : nodes) out.push_back(ls.labels.at(v));
  return out;
}

}  // namespace

TrainResult train(const Trainable& model, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  const bool supervised = cfg.strategy != Strategy::unsupervised;
  const bool uses_pairs = cfg.strategy == Strategy::unsupervised ||
                          (cfg.strategy == Strategy::joint && cfg.joint_weight < 1.0);
  const bool uses_labels = cfg.strategy == Strategy::semi_supervised ||
                           (cfg.strategy == Strategy::joint && cfg.joint_weight > 0.0);
  std::vector<std::size_t> train_ids;
  Index train_labels;
  if (supervised) {
    data.labels.validate(data.graph);
    data.split.validate(data.labels);
    train_ids = training_nodes(data.split, cfg.train_fraction);
    train_labels = labels_of(data.labels, train_ids);
  }
  const Index val_labels = supervised ? labels_of(data.labels, data.split.val) : Index{};
  const PairSet val_pairs = supervised ? PairSet{}
                                       : sample_pairs(data.graph, cfg.negatives,
                                                      derive_seed(cfg.seed, "val.pairs"), 0);

  ParamStore params = model.init(derive_seed(cfg.seed, "init"));
  AdamState adam(AdamOptions{cfg.lr, 0.9, 0.999, 1e-8});
  EarlyStopping stopper(cfg.patience, supervised);
  TrainResult result;
  result.params = params;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    try {
      Tape tape;
      BoundParams bound(tape, params);
      const ForwardContext ctx{true, derive_seed(cfg.seed, "dropout", epoch)};
      ModelOutput out = model.forward(tape, bound, ctx);
      Var sup, unsup;
      if (uses_labels) sup = semi_supervised_loss(row_select(out.logits, train_ids), train_labels);
      if (uses_pairs) {
        unsup = unsupervised_loss(out.embeddings, sample_pairs(data.graph, cfg.negatives, cfg.seed, epoch));
      }
      Var loss = cfg.strategy == Strategy::joint ? joint_loss(sup, unsup, cfg.joint_weight)
                                                 : (sup.valid() ? sup : unsup);
      rec.train_loss = loss.value().item();
      tape.backward(loss);
      adam_step(params, bound.gradients(), adam);
      for (const auto& [name, t] : params) {
        if (!t.all_finite()) throw std::domain_error("non-finite parameter " + name);
      }

      Tape eval_tape;
      BoundParams eval_bound(eval_tape, params);
      ModelOutput ev = model.forward(eval_tape, eval_bound, ForwardContext{false, 0});
      if (supervised) {
        const auto pred = predict(ev.logits.value(), data.split.val);
        rec.val_metric = f1_scores(pred, val_labels, data.labels.num_classes).macro_f1;
      } else {
        rec.val_metric = unsupervised_loss(ev.embeddings, val_pairs).value().item();
      }
    } catch (const std::domain_error& e) {
      throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
    }
    result.history.epochs.push_back(rec);
    result.history.stopped_epoch = epoch;
    if (stopper.update(epoch, rec.val_metric)) result.params = params;
    if (stopper.should_stop()) break;
  }
  result.history.best_epoch = stopper.best_epoch();
  return result;
}

EvalReport evaluate(const Trainable& model, const Dataset& data, const ParamStore& params,
                    std::uint64_t seed, std::size_t restarts) {
  data.labels.validate(data.graph);
  Tape tape;
  BoundParams bound(tape, params);
  const ModelOutput out = model.forward(tape, bound, ForwardContext{false, 0});
  EvalReport report;
  if (out.logits.valid() && !data.split.test.empty()) {
    report.f1 = f1_scores(predict(out.logits.value(), data.split.test),
                          labels_of(data.labels, data.split.test), data.labels.num_classes);
  }
  const Tensor& emb = out.embeddings.at(data.labels.node_type).value();
  Tensor labeled(data.labels.labels.size(), emb.cols());
  std::vector<std::size_t> truth;
  std::size_t i = 0;
  for (const auto& [v, c] : data.labels.labels) {
    std::copy(emb.row(v).begin(), emb.row(v).end(), labeled.row(i++).begin());
    truth.push_back(c);
  }
  report.clustering = cluster_and_score(labeled, truth, data.labels.num_classes,
                                        derive_seed(seed, "kmeans"), restarts);
  return report;
}

TrainResult train_hgconv(const Dataset& data, ModelConfig model_cfg, const TrainConfig& cfg) {
  model_cfg = with_dropout(std::move(model_cfg), cfg.dropout);
  model_cfg.num_classes = cfg.strategy == Strategy::unsupervised ? 0 : data.labels.num_classes;
  HGConvModel model(data.graph, model_cfg, data.labels.node_type);
  return train(model, data, cfg);
}

}  // namespace hgconv
