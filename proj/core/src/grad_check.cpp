#include "hgconv/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hgconv {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

namespace {

double eval_scalar(const ScalarFn& f, const Tensor& theta) {
  Tape tape;
  Var loss = f(tape, tape.constant(theta));
  if (!std::isfinite(loss.value().item())) throw std::domain_error("grad_check: non-finite loss");
  return loss.value().item();
}

}  // namespace

double grad_check(const ScalarFn& f, const Tensor& theta, double eps) {
  Tensor analytic;
  {
    Tape tape;
    Var th = tape.variable(theta);
    Var loss = f(tape, th);
    tape.backward(loss);
    analytic = th.grad();
  }
  double worst = 0.0;
  Tensor probe = theta;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double orig = probe.data()[i];
    probe.data()[i] = orig + eps;
    const double up = eval_scalar(f, probe);
    probe.data()[i] = orig - eps;
    const double down = eval_scalar(f, probe);
    probe.data()[i] = orig;
    worst = std::max(worst, relative_error(analytic.data()[i], (up - down) / (2.0 * eps)));
  }
  return worst;
}

double grad_check_params(const ParamLossFn& f, const ParamStore& params, double eps,
                         std::map<std::string, double>* per_param) {
  ParamStore analytic;
  {
    Tape tape;
    BoundParams bound(tape, params);
    Var loss = f(tape, bound);
    tape.backward(loss);
    analytic = bound.gradients();
  }
  auto eval = [&](const ParamStore& p) {
    Tape tape;
    BoundParams bound(tape, p);
    const double value = f(tape, bound).value().item();
    if (!std::isfinite(value)) throw std::domain_error("grad_check: non-finite loss");
    return value;
  };
  double worst = 0.0;
  ParamStore probe = params;
  for (const auto& [name, value] : params) {
    double local = 0.0;
    auto slot = probe.at(name).data();
    for (std::size_t i = 0; i < slot.size(); ++i) {
      const double orig = slot[i];
      slot[i] = orig + eps;
      const double up = eval(probe);
      slot[i] = orig - eps;
      const double down = eval(probe);
      slot[i] = orig;
      local = std::max(local, relative_error(analytic.at(name).data()[i], (up - down) / (2.0 * eps)));
    }
    if (per_param) (*per_param)[name] = local;
    worst = std::max(worst, local);
  }
  return worst;
}

}  // namespace hgconv
