#include "hgconv/tape.hpp"

#include <stdexcept>
#include <string>

namespace hgconv {

const Tensor& Var::value() const { return tape_->node(id_).value; }

const Tensor& Var::grad() const {
  auto& n = tape_->node(id_);
  if (n.grad.empty() && !n.value.empty()) n.grad = Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

bool Var::requires_grad() const { return tape_->node(id_).requires_grad; }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, {}, "constant", {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, true, {}, "variable", {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(const char* op, Tensor value, std::initializer_list<Var> inputs,
                 BackwardFn backward) {
  return record(op, std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Var Tape::record(const char* op, Tensor value, const std::vector<Var>& inputs,
                 BackwardFn backward) {
  if (!value.all_finite()) {
    throw std::domain_error(std::string(op) + ": non-finite output");
  }
  bool needs = false;
  std::vector<std::size_t> ids;
  for (const Var& in : inputs) {
    if (in.tape() != this) throw std::invalid_argument(std::string(op) + ": input from another tape");
    needs = needs || in.requires_grad();
    ids.push_back(in.id());
  }
  nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(backward) : BackwardFn{}, op,
                        std::move(ids)});
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_buffer(const Var& target) {
  Node& n = node(target.id());
  if (n.grad.empty()) n.grad = Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(const Var& target, const Tensor& delta) {
  if (!target.requires_grad()) return;
  Tensor& g = grad_buffer(target);
  if (!g.same_shape(delta)) throw std::logic_error("tape: gradient shape mismatch");
  auto dst = g.data();
  auto src = delta.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::zero_grad() {
  for (Node& n : nodes_) n.grad = Tensor();
}

void Tape::backward(const Var& loss) {
  if (loss.tape() != this) throw std::invalid_argument("backward: loss from another tape");
  if (loss.value().size() != 1) throw std::invalid_argument("backward: loss is not a scalar");
  zero_grad();
  if (!loss.requires_grad()) return;
  grad_buffer(loss)(0, 0) = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(n.grad);
  }
}

}  // namespace hgconv
