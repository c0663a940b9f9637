#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "hgconv/tensor.hpp"

namespace hgconv {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Tensor& grad() const;
  bool requires_grad() const;
  bool valid() const { return tape_ != nullptr; }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }

  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so the node list is
/// topologically sorted by construction and backward() walks it once in reverse.
class Tape {
 public:
  using BackwardFn = std::function<void(const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);

  /// Appends an op result. The backward rule is kept only when some input requires
  /// grad. Throws std::domain_error if `value` holds NaN or Inf.
  Var record(const char* op, Tensor value, std::initializer_list<Var> inputs,
             BackwardFn backward);
  Var record(const char* op, Tensor value, const std::vector<Var>& inputs,
             BackwardFn backward);

  /// Accumulates into the gradient buffer of `target`; no-op for constants.
  void accumulate(const Var& target, const Tensor& delta);
  /// Mutable gradient buffer (zero-allocated on first use); only for requires_grad vars.
  Tensor& grad_buffer(const Var& target);

  void backward(const Var& loss);
  void zero_grad();

  std::size_t size() const { return nodes_.size(); }
  /// Op that produced node `id` ("constant" / "variable" for leaves) and its inputs.
  const char* op_name(std::size_t id) const { return node(id).op; }
  const std::vector<std::size_t>& input_ids(std::size_t id) const { return node(id).inputs; }
  const Tensor& value_of(std::size_t id) const { return node(id).value; }

 private:
  friend class Var;

  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
    const char* op = "constant";
    std::vector<std::size_t> inputs;
  };

  Node& node(std::size_t id) { return nodes_.at(id); }
  const Node& node(std::size_t id) const { return nodes_.at(id); }

  std::deque<Node> nodes_;
};

}  // namespace hgconv
