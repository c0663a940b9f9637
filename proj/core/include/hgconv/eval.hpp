#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hgconv/conv.hpp"
#include "hgconv/params.hpp"

namespace hgconv {

struct F1Result {
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  std::vector<double> precision;  // per class
  std::vector<double> recall;
  std::vector<double> f1;
};

/// Macro-F1 is the unweighted class mean (a class absent from both inputs
/// scores 0); Micro-F1 equals accuracy.
F1Result f1_scores(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth,
                   std::size_t num_classes);

struct KMeansRun {
  std::vector<std::size_t> assignment;
  double inertia = 0.0;
  std::size_t iterations = 0;
};

/// k-means++ seeding then Lloyd iterations until the assignment is a fixed point
/// (or max_iter). One run per restart, each from its own derived seed.
std::vector<KMeansRun> kmeans(const Tensor& points, std::size_t k, std::uint64_t seed,
                              std::size_t restarts = 10, std::size_t max_iter = 300);

/// Sum of squared distances of points to the mean of their assigned cluster.
double clustering_inertia(const Tensor& points, const std::vector<std::size_t>& assignment,
                          std::size_t k);

/// Rows scaled to unit L2 norm; zero rows are left as is.
Tensor row_normalize(const Tensor& x);

double adjusted_rand_index(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth);
/// Mutual information normalized by the arithmetic mean of the two entropies.
double normalized_mutual_info(const std::vector<std::size_t>& pred,
                              const std::vector<std::size_t>& truth);

struct ClusteringScore {
  double ari = 0.0;
  double nmi = 0.0;
};

/// Row-normalizes, runs k-means with `restarts` restarts, scores every restart
/// and averages ARI/NMI.
ClusteringScore cluster_and_score(const Tensor& embeddings, const std::vector<std::size_t>& truth,
                                  std::size_t k, std::uint64_t seed, std::size_t restarts = 10);

struct EvalReport {
  F1Result f1;
  ClusteringScore clustering;
  std::string nmi_normalization = "arithmetic";
};

struct NeighborScore {
  std::size_t neighbor = 0;
  double alpha = 0.0;
};

struct RelationScore {
  RelationId relation = 0;
  double beta = 0.0;
  std::vector<NeighborScore> neighbors;
};

/// Head-averaged last-layer attention around one focal node.
struct AttentionRecord {
  NodeTypeId node_type = 0;
  std::size_t node = 0;
  std::vector<RelationScore> relations;
};

/// Runs an eval-mode forward and extracts the record for (type, node). Throws
/// for isolated nodes and for the RGCN reduction (it has no attention).
AttentionRecord export_attention(const HeteroGraph& g, const ModelConfig& cfg,
                                 const ParamStore& params, NodeTypeId type, std::size_t node);

/// Same extraction from an already captured layer.
AttentionRecord attention_record(const HeteroGraph& g, const LayerAttention& layer,
                                 NodeTypeId type, std::size_t node);

/// `relation<TAB>beta` rows, then `relation<TAB>neighbor_id<TAB>alpha` rows.
std::string attention_tsv(const HeteroGraph& g, const AttentionRecord& rec);

struct PcaResult {
  Tensor projection;                  // n × r, r <= requested dims
  std::vector<double> explained_variance;
  std::vector<std::vector<double>> components;
  bool rank_deficient = false;
};

/// Mean-centred projection onto the leading principal directions, found by power
/// iteration with deflation on the covariance (1/n normalization). Directions
/// are sign-fixed so their largest-magnitude entry is positive.
PcaResult pca_project(const Tensor& x, std::size_t dims = 2, std::uint64_t seed = 0);

/// `node_id` followed by the row values, one line per node.
std::string embeddings_tsv(const Tensor& embeddings);
/// `node_id x y class`; class is -1 for unlabeled nodes and y is 0 for a 1-D projection.
std::string projection_tsv(const Tensor& projection, const LabelSet& labels);

}  // namespace hgconv
