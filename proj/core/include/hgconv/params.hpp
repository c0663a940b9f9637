#pragma once

#include <map>
#include <string>
#include <vector>

#include "hgconv/tape.hpp"
#include "hgconv/tensor.hpp"

namespace hgconv {

/// Named trainable tensors, iterated in sorted-name order.
class ParamStore {
 public:
  using Map = std::map<std::string, Tensor>;

  void set(const std::string& name, Tensor value) { params_[name] = std::move(value); }
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);
  void erase(const std::string& name) { params_.erase(name); }

  std::size_t size() const { return params_.size(); }
  std::size_t num_scalars() const;
  std::vector<std::string> names() const;

  Map::const_iterator begin() const { return params_.begin(); }
  Map::const_iterator end() const { return params_.end(); }
  Map::iterator begin() { return params_.begin(); }
  Map::iterator end() { return params_.end(); }

  friend bool operator==(const ParamStore&, const ParamStore&) = default;

 private:
  Map params_;
};

/// Registers every parameter of a store as a gradient-tracking leaf on a tape.
class BoundParams {
 public:
  BoundParams(Tape& tape, const ParamStore& params);

  Var operator[](const std::string& name) const;
  bool contains(const std::string& name) const { return vars_.count(name) != 0; }

  /// Gradients after tape.backward(); parameters the loss did not reach get zeros.
  ParamStore gradients() const;

 private:
  std::map<std::string, Var> vars_;
};

}  // namespace hgconv
