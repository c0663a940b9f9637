#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hgconv/tape.hpp"

namespace hgconv {

using Index = std::vector<std::size_t>;

enum class Activation { relu, elu, sigmoid, identity };

// Linear algebra.
Var matmul(Var a, Var b);                  // (n×k)·(k×m)
Var linear(Var x, Var w);                  // x·wᵀ, x: n×in, w: out×in
Var add(Var a, Var b);
Var add_bias(Var x, Var bias);             // bias: 1×cols, added to every row
Var scale(Var a, double s);
Var sum(Var a);                            // 1×1
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var row_select(Var a, const Index& rows);

// Elementwise nonlinearities.
Var leaky_relu(Var a, double slope = 0.2);
Var relu(Var a);
Var elu(Var a, double alpha = 1.0);
Var sigmoid(Var a);
Var log_sigmoid(Var a);                    // -softplus(-x)
Var activate(Var a, Activation kind);

/// Inverted dropout. In train mode each entry is zeroed with probability p and
/// survivors are scaled by 1/(1-p); identity otherwise.
Var dropout(Var a, double p, std::uint64_t seed, bool train);

// Segment reductions on rows. Segment ids need not be sorted.
Var segment_sum(Var values, const Index& segment_ids, std::size_t num_segments);
/// Column-wise softmax over the rows of each segment, with per-segment max
/// subtraction. Every segment in [0, num_segments) must be nonempty.
Var segment_softmax(Var scores, const Index& segment_ids, std::size_t num_segments);

// Multi-head helpers. Width of x is heads·head_dim with head k in columns
// [k·head_dim, (k+1)·head_dim).
/// out[n,k] = Σ_j x[n, k·d + j] · att[k, offset + j], with d = x.cols / att.rows.
Var head_dot(Var x, Var att, std::size_t offset);
/// out[n, k·d + j] = x[n, k·d + j] · w[n, k].
Var head_scale(Var x, Var w);

/// s·x + (1-s)·y with s a 1×1 var.
Var lerp(Var x, Var y, Var s);
/// Row-wise dot products of two equally shaped matrices: n×1.
Var row_dot(Var a, Var b);

/// Σ_i [logsumexp(logits_i) - logits_i[labels_i]], i.e. summed softmax cross-entropy.
Var softmax_cross_entropy(Var logits, const Index& labels);

}  // namespace hgconv
