#include "hgconv/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "hgconv/param_io.hpp"
#include "hgconv/rng.hpp"

namespace hgconv {

F1Result f1_scores(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth,
                   std::size_t num_classes) {
  if (pred.size() != truth.size()) throw std::invalid_argument("f1_scores: length mismatch");
  if (pred.empty()) throw std::invalid_argument("f1_scores: empty input");
  std::vector<double> tp(num_classes, 0.0), fp(num_classes, 0.0), fn(num_classes, 0.0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] >= num_classes || truth[i] >= num_classes) {
      throw std::out_of_range("f1_scores: class id out of range");
    }
    if (pred[i] == truth[i]) {
      tp[pred[i]] += 1.0;
      ++correct;
    } else {
      fp[pred[i]] += 1.0;
      fn[truth[i]] += 1.0;
    }
  }
  F1Result r;
  double total = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    const double p = tp[c] + fp[c] > 0 ? tp[c] / (tp[c] + fp[c]) : 0.0;
    const double q = tp[c] + fn[c] > 0 ? tp[c] / (tp[c] + fn[c]) : 0.0;
    const double f = tp[c] > 0 ? 2.0 * tp[c] / (2.0 * tp[c] + fp[c] + fn[c]) : 0.0;
    r.precision.push_back(p);
    r.recall.push_back(q);
    r.f1.push_back(f);
    total += f;
  }
  r.macro_f1 = num_classes > 0 ? total / static_cast<double>(num_classes) : 0.0;
  r.micro_f1 = static_cast<double>(correct) / static_cast<double>(pred.size());
  return r;
}

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

Tensor cluster_means(const Tensor& x, const std::vector<std::size_t>& assign, std::size_t k,
                     const Tensor* fallback) {
  Tensor centers(k, x.cols());
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    ++counts[assign[i]];
    for (std::size_t j = 0; j < x.cols(); ++j) centers(assign[i], j) += x(i, j);
  }
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (counts[c] > 0) centers(c, j) /= static_cast<double>(counts[c]);
      else if (fallback) centers(c, j) = (*fallback)(c, j);
    }
  }
  return centers;
}

std::size_t nearest(std::span<const double> point, const Tensor& centers) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.rows(); ++c) {
    const double d = sq_dist(point, centers.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

Tensor kmeanspp_init(const Tensor& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows();
  Tensor centers(k, x.cols());
  auto place = [&](std::size_t c, std::size_t i) {
    std::copy(x.row(i).begin(), x.row(i).end(), centers.row(c).begin());
  };
  place(0, rng.below(n));
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(x.row(i), centers.row(c - 1)));
      total += d2[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);
    }
    place(c, pick);
  }
  return centers;
}

}  // namespace

double clustering_inertia(const Tensor& points, const std::vector<std::size_t>& assignment,
                          std::size_t k) {
  if (assignment.size() != points.rows()) throw std::invalid_argument("inertia: length mismatch");
  for (std::size_t a : assignment) {
    if (a >= k) throw std::out_of_range("inertia: cluster id out of range");
  }
  const Tensor centers = cluster_means(points, assignment, k, nullptr);
  double s = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) s += sq_dist(points.row(i), centers.row(assignment[i]));
  return s;
}

std::vector<KMeansRun> kmeans(const Tensor& points, std::size_t k, std::uint64_t seed,
                              std::size_t restarts, std::size_t max_iter) {
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (k > points.rows()) throw std::invalid_argument("kmeans: k exceeds the number of points");
  if (restarts < 1) throw std::invalid_argument("kmeans: restarts must be >= 1");
  const std::size_t n = points.rows();
  std::vector<KMeansRun> runs;
  for (std::size_t r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, "kmeans.restart", r));
    Tensor centers = kmeanspp_init(points, k, rng);
    KMeansRun run;
    run.assignment.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) run.assignment[i] = nearest(points.row(i), centers);
    for (run.iterations = 1; run.iterations < max_iter; ++run.iterations) {
      centers = cluster_means(points, run.assignment, k, &centers);
      bool changed = false;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = nearest(points.row(i), centers);
        if (c != run.assignment[i]) {
          run.assignment[i] = c;
          changed = true;
        }
      }
      if (!changed) break;
    }
    run.inertia = clustering_inertia(points, run.assignment, k);
    runs.push_back(std::move(run));
  }
  return runs;
}

Tensor row_normalize(const Tensor& x) {
  Tensor out = x;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    double norm = 0.0;
    for (double v : out.row(i)) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0)
      for (double& v : out.row(i)) v /= norm;
  }
  return out;
}

namespace {

struct Contingency {
  std::map<std::pair<std::size_t, std::size_t>, double> cells;
  std::map<std::size_t, double> rows, cols;
  double n = 0.0;
};

Contingency contingency(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b,
                        const char* who) {
  if (a.size() != b.size()) throw std::invalid_argument(std::string(who) + ": length mismatch");
  if (a.empty()) throw std::invalid_argument(std::string(who) + ": empty input");
  Contingency t;
  for (std::size_t i = 0; i < a.size(); ++i) {
    t.cells[{a[i], b[i]}] += 1.0;
    t.rows[a[i]] += 1.0;
    t.cols[b[i]] += 1.0;
  }
  t.n = static_cast<double>(a.size());
  return t;
}

double pairs(double m) { return m * (m - 1.0) / 2.0; }

}  // namespace

double adjusted_rand_index(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth) {
  const Contingency t = contingency(pred, truth, "ari");
  double index = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& [cell, m] : t.cells) index += pairs(m);
  for (const auto& [c, m] : t.rows) sa += pairs(m);
  for (const auto& [c, m] : t.cols) sb += pairs(m);
  const double total = pairs(t.n);
  const double expected = total > 0.0 ? sa * sb / total : 0.0;
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;  // both partitions trivial in the same way
  return (index - expected) / (max_index - expected);
}

double normalized_mutual_info(const std::vector<std::size_t>& pred,
                              const std::vector<std::size_t>& truth) {
  const Contingency t = contingency(pred, truth, "nmi");
  auto entropy = [&](const std::map<std::size_t, double>& marg) {
    double h = 0.0;
    for (const auto& [c, m] : marg) h -= (m / t.n) * std::log(m / t.n);
    return h;
  };
  const double ha = entropy(t.rows);
  const double hb = entropy(t.cols);
  if (ha == 0.0 && hb == 0.0) return 1.0;
  // One nonzero cell per row and column: the same partition under relabeling.
  if (t.cells.size() == t.rows.size() && t.cells.size() == t.cols.size()) return 1.0;
  double mi = 0.0;
  for (const auto& [cell, m] : t.cells) {
    mi += (m / t.n) * std::log(t.n * m / (t.rows.at(cell.first) * t.cols.at(cell.second)));
  }
  return std::clamp(mi / (0.5 * (ha + hb)), 0.0, 1.0);
}

ClusteringScore cluster_and_score(const Tensor& embeddings, const std::vector<std::size_t>& truth,
                                  std::size_t k, std::uint64_t seed, std::size_t restarts) {
  if (embeddings.rows() != truth.size()) throw std::invalid_argument("cluster_and_score: length mismatch");
  const auto runs = kmeans(row_normalize(embeddings), k, seed, restarts);
  ClusteringScore s;
  for (const KMeansRun& r : runs) {
    s.ari += adjusted_rand_index(r.assignment, truth);
    s.nmi += normalized_mutual_info(r.assignment, truth);
  }
  s.ari /= static_cast<double>(runs.size());
  s.nmi /= static_cast<double>(runs.size());
  return s;
}

AttentionRecord attention_record(const HeteroGraph& g, const LayerAttention& layer,
                                 NodeTypeId type, std::size_t node) {
  if (type >= g.num_node_types() || node >= g.node_type(type).count) {
    throw std::out_of_range("export_attention: index out of range");
  }
  if (g.relations_of(node, type).empty()) {
    throw std::invalid_argument("export_attention: node " + std::to_string(node) + " of type " +
                                g.node_type(type).name + " is isolated");
  }
  if (type >= layer.macro.size() || !layer.macro[type].beta.valid()) {
    throw std::invalid_argument("export_attention: no attention captured");
  }
  auto head_mean = [](const Tensor& t, std::size_t row) {
    double s = 0.0;
    for (double v : t.row(row)) s += v;
    return s / static_cast<double>(t.cols());
  };
  const MacroAttention& macro = layer.macro[type];
  const Tensor& beta = macro.beta.value();
  AttentionRecord rec;
  rec.node_type = type;
  rec.node = node;
  for (std::size_t i = 0; i < macro.nodes.size(); ++i) {
    if (macro.nodes[i] != node) continue;
    RelationScore rs;
    rs.relation = macro.relations[i];
    rs.beta = head_mean(beta, i);
    const EdgeIndex& idx = g.edge_index(rs.relation);
    const Tensor& alpha = layer.micro.at(rs.relation).alpha.value();
    for (std::size_t e = 0; e < idx.dst.size(); ++e) {
      if (idx.dst[e] == node) rs.neighbors.push_back({idx.src[e], head_mean(alpha, e)});
    }
    rec.relations.push_back(std::move(rs));
  }
  return rec;
}

AttentionRecord export_attention(const HeteroGraph& g, const ModelConfig& cfg,
                                 const ParamStore& params, NodeTypeId type, std::size_t node) {
  if (cfg.rgcn.enabled) throw std::invalid_argument("export_attention: RGCN mode has no attention");
  Tape tape;
  BoundParams bound(tape, params);
  const ModelOutput out = model_forward(tape, g, cfg, bound, type, ForwardContext{false, 0});
  return attention_record(g, out.last_attention, type, node);
}

std::string attention_tsv(const HeteroGraph& g, const AttentionRecord& rec) {
  std::string out;
  for (const RelationScore& rs : rec.relations) {
    out += g.relation_name(rs.relation) + "\t" + format_double(rs.beta) + "\n";
  }
  for (const RelationScore& rs : rec.relations) {
    for (const NeighborScore& n : rs.neighbors) {
      out += g.relation_name(rs.relation) + "\t" + std::to_string(n.neighbor) + "\t" +
             format_double(n.alpha) + "\n";
    }
  }
  return out;
}

PcaResult pca_project(const Tensor& x, std::size_t dims, std::uint64_t seed) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (dims < 1) throw std::invalid_argument("pca_project: dims must be >= 1");
  if (n < dims) throw std::invalid_argument("pca_project: fewer points than dims");
  if (d == 0) throw std::invalid_argument("pca_project: zero-width input");

  Tensor centered = x;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) centered(i, j) -= mean;
  }
  Tensor cov(d, d);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += centered(i, a) * centered(i, b);
      cov(a, b) = cov(b, a) = s / static_cast<double>(n);
    }
  }
  double trace = 0.0;
  for (std::size_t a = 0; a < d; ++a) trace += cov(a, a);
  const double floor = 1e-12 * std::max(trace, 1e-300);

  PcaResult res;
  Rng rng(derive_seed(seed, "pca"));
  const std::size_t want = std::min(dims, d);
  res.rank_deficient = want < dims;
  for (std::size_t k = 0; k < want; ++k) {
    std::vector<double> v(d);
    for (double& e : v) e = rng.normal();
    double lambda = 0.0;
    for (std::size_t it = 0; it < 100000; ++it) {
      std::vector<double> w(d, 0.0);
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) w[a] += cov(a, b) * v[b];
      // Re-orthogonalize against earlier components to stop drift back into them.
      for (const auto& c : res.components) {
        double proj = 0.0;
        for (std::size_t a = 0; a < d; ++a) proj += w[a] * c[a];
        for (std::size_t a = 0; a < d; ++a) w[a] -= proj * c[a];
      }
      double norm = 0.0;
      for (double e : w) norm += e * e;
      norm = std::sqrt(norm);
      if (norm <= floor) {
        lambda = 0.0;
        break;
      }
      double delta = 0.0;
      for (std::size_t a = 0; a < d; ++a) {
        w[a] /= norm;
        delta = std::max(delta, std::abs(w[a] - v[a]));
      }
      v = std::move(w);
      lambda = norm;
      if (delta < 1e-13) break;
    }
    if (lambda <= floor) {
      res.rank_deficient = true;
      break;
    }
    // Rayleigh quotient is more accurate than the last norm.
    double rq = 0.0;
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) rq += v[a] * cov(a, b) * v[b];
    std::size_t big = 0;
    for (std::size_t a = 1; a < d; ++a)
      if (std::abs(v[a]) > std::abs(v[big]) + 1e-12) big = a;
    if (v[big] < 0)
      for (double& e : v) e = -e;
    res.explained_variance.push_back(rq);
    res.components.push_back(v);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) cov(a, b) -= rq * v[a] * v[b];
  }
  res.projection = Tensor(n, res.components.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < res.components.size(); ++k) {
      double s = 0.0;
      for (std::size_t a = 0; a < d; ++a) s += centered(i, a) * res.components[k][a];
      res.projection(i, k) = s;
    }
  }
  return res;
}

std::string embeddings_tsv(const Tensor& embeddings) {
  std::string out;
  for (std::size_t i = 0; i < embeddings.rows(); ++i) {
    out += std::to_string(i);
    for (double v : embeddings.row(i)) out += "\t" + format_double(v);
    out += "\n";
  }
  return out;
}

std::string projection_tsv(const Tensor& projection, const LabelSet& labels) {
  std::string out;
  for (std::size_t i = 0; i < projection.rows(); ++i) {
    const double x = projection.cols() > 0 ? projection(i, 0) : 0.0;
    const double y = projection.cols() > 1 ? projection(i, 1) : 0.0;
    const auto it = labels.labels.find(i);
    out += std::to_string(i) + "\t" + format_double(x) + "\t" + format_double(y) + "\t" +
           (it == labels.labels.end() ? std::string("-1") : std::to_string(it->second)) + "\n";
  }
  return out;
}

}  // namespace hgconv
