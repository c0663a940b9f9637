#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hgconv {

struct GradCheckEntry {
  std::string op;
  double max_rel_err = 0.0;
  std::size_t instances = 0;
};

/// Central-difference checks of every differentiable op (each input in turn) and
/// of a full 2-layer HGConv cross-entropy loss w.r.t. every parameter, over
/// `instances` seeded random instances each.
std::vector<GradCheckEntry> run_grad_suite(std::uint64_t seed, std::size_t instances = 20,
                                           double eps = 1e-5);

}  // namespace hgconv
