#include <cmath>
#include <stdexcept>
#include <string>

#include "hgconv/baselines.hpp"

namespace hgconv {

namespace {

using Matrix = std::vector<std::vector<double>>;

Matrix to_matrix(const Tensor& t) {
  Matrix m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t(i, j);
  return m;
}

Tensor to_tensor(const Matrix& m, std::size_t cols) {
  Tensor t(m.size(), cols);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j) t(i, j) = m[i][j];
  return t;
}

const Tensor& param(const ParamStore& p, const std::string& key) {
  if (!p.contains(key)) throw std::invalid_argument("dense oracle: missing parameter " + key);
  return p.at(key);
}

// y = W x for a single row vector x.
std::vector<double> mat_vec(const Tensor& w, const std::vector<double>& x) {
  if (w.cols() != x.size()) throw std::invalid_argument("dense oracle: shape mismatch");
  std::vector<double> y(w.rows(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) y[i] += w(i, j) * x[j];
  return y;
}

double leaky(double x) { return x > 0 ? x : 0.2 * x; }

double act(double x, Activation a) {
  switch (a) {
    case Activation::relu: return x > 0 ? x : 0.0;
    case Activation::elu: return x > 0 ? x : std::exp(x) - 1.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::identity: return x;
  }
  return x;
}

std::vector<double> naive_softmax(const std::vector<double>& s) {
  double total = 0.0;
  for (double x : s) total += std::exp(x);
  std::vector<double> out;
  for (double x : s) out.push_back(std::exp(x) / total);
  return out;
}

}  // namespace

OracleLayer dense_oracle_layer(const HeteroGraph& g, const std::vector<Tensor>& h_prev,
                               const ParamStore& params, std::size_t layer, const LayerConfig& cfg) {
  if (h_prev.size() != g.num_node_types()) throw std::invalid_argument("dense oracle: bad input count");
  const std::string pre = "layer" + std::to_string(layer) + ".";
  const std::size_t K = cfg.heads, dh = cfg.head_dim, width = K * dh;

  std::vector<Matrix> h(g.num_node_types()), z(g.num_node_types());
  for (const NodeType& t : g.node_types()) {
    if (h_prev[t.id].rows() != t.count) throw std::invalid_argument("dense oracle: bad input rows");
    h[t.id] = to_matrix(h_prev[t.id]);
    const Tensor& w = param(params, pre + "micro.W." + t.name);
    for (const auto& row : h[t.id]) z[t.id].push_back(mat_vec(w, row));
  }

  OracleLayer out;
  // c[r][v] is empty when v has no neighbors under r.
  std::vector<Matrix> c(g.num_relations());
  for (const Relation& rel : g.relations()) {
    const std::size_t nd = g.node_type(rel.dst_type).count;
    c[rel.id].assign(nd, {});
    Matrix alpha_rows;
    for (std::size_t v = 0; v < nd; ++v) {
      const auto nbrs = g.neighbors(rel.id, v);
      if (nbrs.empty()) continue;
      Matrix weights(K);  // weights[k][i] for neighbor i
      for (std::size_t k = 0; k < K; ++k) {
        if (cfg.no_micro) {
          weights[k].assign(nbrs.size(), 1.0 / static_cast<double>(nbrs.size()));
          continue;
        }
        const Tensor& a = param(params, pre + "micro.a." + g.node_type(rel.src_type).name);
        std::vector<double> scores;
        for (std::size_t u : nbrs) {
          double s = 0.0;
          for (std::size_t j = 0; j < dh; ++j) {
            s += a(k, j) * z[rel.dst_type][v][k * dh + j];
            s += a(k, dh + j) * z[rel.src_type][u][k * dh + j];
          }
          scores.push_back(leaky(s));
        }
        weights[k] = naive_softmax(scores);
      }
      std::vector<double> cv(width, 0.0);
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t i = 0; i < nbrs.size(); ++i)
          for (std::size_t j = 0; j < dh; ++j)
            cv[k * dh + j] += weights[k][i] * z[rel.src_type][nbrs[i]][k * dh + j];
      for (double& x : cv) x = act(x, cfg.activation);
      c[rel.id][v] = cv;
      for (std::size_t i = 0; i < nbrs.size(); ++i) {
        std::vector<double> row(K);
        for (std::size_t k = 0; k < K; ++k) row[k] = weights[k][i];
        alpha_rows.push_back(row);
      }
    }
    out.alpha.push_back(to_tensor(alpha_rows, K));
  }

  for (const NodeType& t : g.node_types()) {
    // Per node: list of (relation, projected c') in ascending relation order.
    std::vector<std::vector<std::pair<RelationId, std::vector<double>>>> inc(t.count);
    for (const Relation& rel : g.relations()) {
      if (rel.dst_type != t.id) continue;
      const Tensor& m = param(params, pre + "macro.M." + g.relation_name(rel.id));
      for (std::size_t v = 0; v < t.count; ++v) {
        if (!c[rel.id][v].empty()) inc[v].emplace_back(rel.id, mat_vec(m, c[rel.id][v]));
      }
    }
    Matrix beta_of(t.count);  // beta_of[v][i*K + k]
    Matrix h_tilde(t.count, std::vector<double>(width, 0.0));
    for (std::size_t v = 0; v < t.count; ++v) {
      const std::size_t nr = inc[v].size();
      if (nr == 0) continue;
      beta_of[v].assign(nr * K, 0.0);
      std::vector<double> focal;
      if (!cfg.no_macro) focal = mat_vec(param(params, pre + "macro.U." + t.name), h[t.id][v]);
      for (std::size_t k = 0; k < K; ++k) {
        std::vector<double> b;
        if (cfg.no_macro) {
          b.assign(nr, 1.0 / static_cast<double>(nr));
        } else {
          const Tensor& mu = param(params, pre + "macro.mu");
          std::vector<double> scores;
          for (const auto& [r, cp] : inc[v]) {
            double s = 0.0;
            for (std::size_t j = 0; j < dh; ++j) {
              s += mu(k, j) * focal[k * dh + j];
              s += mu(k, dh + j) * cp[k * dh + j];
            }
            scores.push_back(leaky(s));
          }
          b = naive_softmax(scores);
        }
        for (std::size_t i = 0; i < nr; ++i) {
          beta_of[v][i * K + k] = b[i];
          for (std::size_t j = 0; j < dh; ++j) h_tilde[v][k * dh + j] += b[i] * inc[v][i].second[k * dh + j];
        }
      }
    }
    Matrix beta_rows;
    for (const Relation& rel : g.relations()) {
      if (rel.dst_type != t.id) continue;
      for (std::size_t v = 0; v < t.count; ++v) {
        for (std::size_t i = 0; i < inc[v].size(); ++i) {
          if (inc[v][i].first != rel.id) continue;
          beta_rows.emplace_back(beta_of[v].begin() + static_cast<long>(i * K),
                                 beta_of[v].begin() + static_cast<long>((i + 1) * K));
        }
      }
    }
    out.beta.push_back(to_tensor(beta_rows, K));

    if (cfg.no_wrc) {
      out.h.push_back(to_tensor(h_tilde, width));
      continue;
    }
    const double gate = param(params, pre + "res.gate." + t.name).item();
    const double lambda = 1.0 / (1.0 + std::exp(-gate));
    const Tensor& wo = param(params, pre + "res.Wo." + t.name);
    Matrix res(t.count);
    for (std::size_t v = 0; v < t.count; ++v) {
      const std::vector<double> aligned = mat_vec(wo, h[t.id][v]);
      res[v].resize(width);
      for (std::size_t j = 0; j < width; ++j) res[v][j] = lambda * aligned[j] + (1.0 - lambda) * h_tilde[v][j];
    }
    out.h.push_back(to_tensor(res, width));
  }
  return out;
}

OracleModel dense_oracle_model(const HeteroGraph& g, const ModelConfig& cfg, const ParamStore& params,
                               NodeTypeId label_type) {
  if (cfg.rgcn.enabled) throw std::invalid_argument("dense oracle: RGCN mode not covered");
  OracleModel out;
  std::vector<Tensor> h;
  for (const NodeType& t : g.node_types()) h.push_back(g.attrs(t.id));
  for (std::size_t li = 0; li < cfg.layers.size(); ++li) {
    out.last = dense_oracle_layer(g, h, params, li + 1, cfg.layers[li]);
    h = out.last.h;
  }
  out.embeddings = h;
  if (cfg.num_classes > 0) {
    const Tensor& w = param(params, "classifier.W");
    const Tensor& x = h.at(label_type);
    out.logits = Tensor(x.rows(), w.rows());
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t c = 0; c < w.rows(); ++c)
        for (std::size_t j = 0; j < x.cols(); ++j) out.logits(i, c) += x(i, j) * w(c, j);
  }
  return out;
}

}  // namespace hgconv
