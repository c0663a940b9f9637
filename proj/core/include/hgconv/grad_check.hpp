#pragma once

#include <functional>
#include <map>
#include <string>

#include "hgconv/params.hpp"
#include "hgconv/tape.hpp"

namespace hgconv {

using ScalarFn = std::function<Var(Tape&, Var)>;
using ParamLossFn = std::function<Var(Tape&, const BoundParams&)>;

/// |analytic - numeric| / max(1e-8, |analytic| + |numeric|), maximized over components.
double relative_error(double analytic, double numeric);

/// Central-difference check of f at theta; returns the max relative error.
double grad_check(const ScalarFn& f, const Tensor& theta, double eps = 1e-5);

/// Same check over every scalar of every parameter. `per_param`, when given,
/// receives the max relative error for each parameter name.
double grad_check_params(const ParamLossFn& f, const ParamStore& params, double eps = 1e-5,
                         std::map<std::string, double>* per_param = nullptr);

}  // namespace hgconv
