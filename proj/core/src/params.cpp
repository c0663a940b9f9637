#include "hgconv/params.hpp"

#include <stdexcept>

namespace hgconv {

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParamStore::num_scalars() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, t] : params_) out.push_back(name);
  return out;
}

BoundParams::BoundParams(Tape& tape, const ParamStore& params) {
  for (const auto& [name, value] : params) vars_.emplace(name, tape.variable(value));
}

Var BoundParams::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw std::out_of_range("unbound parameter '" + name + "'");
  return it->second;
}

ParamStore BoundParams::gradients() const {
  ParamStore out;
  for (const auto& [name, var] : vars_) out.set(name, var.grad());
  return out;
}

}  // namespace hgconv
