#include "hgconv/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace hgconv {

void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state) {
  const AdamOptions& o = state.options;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (auto& [name, theta] : params) {
    const Tensor& g = grads.at(name);
    if (!g.same_shape(theta)) throw std::invalid_argument("adam_step: shape mismatch for " + name);
    if (!state.m.contains(name)) {
      state.m.set(name, Tensor(theta.rows(), theta.cols()));
      state.v.set(name, Tensor(theta.rows(), theta.cols()));
    }
    auto m = state.m.at(name).data();
    auto v = state.v.at(name).data();
    auto gs = g.data();
    auto th = theta.data();
    for (std::size_t i = 0; i < th.size(); ++i) {
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * gs[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * gs[i] * gs[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      th[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
    }
  }
}

}  // namespace hgconv
