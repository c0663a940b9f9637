#pragma once

#include <cstddef>

#include "hgconv/params.hpp"

namespace hgconv {

struct AdamOptions {
  double lr = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamOptions options;
  ParamStore m;
  ParamStore v;
  std::size_t t = 0;

  explicit AdamState(AdamOptions opts = {}) : options(opts) {}
};

/// One bias-corrected Adam update over params in sorted-name order. Moments are
/// zero-initialized lazily on first sight of a parameter.
void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state);

}  // namespace hgconv
