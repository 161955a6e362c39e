#pragma once

#include <deque>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

#include "hrsched/diff/matrix.hpp"

namespace hrsched::diff {

/// A trainable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.fill(0.0); }
};

class Tape;

/// Handle to a node on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  Shape shape() const { return value().shape(); }
  double scalar() const { return value()[0]; }
};

/// Records operations in execution order. backward() walks the record in
/// reverse, so every node is processed after all of its consumers.
/// Gradients reaching parameter leaves are added to Parameter::grad.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Matrix& out_grad)>;

  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  Var constant(Matrix m) {
    nodes_.push_back(Node{std::move(m), {}, nullptr, nullptr, {}, false});
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  /// Leaf that reads the parameter's value in place. The parameter must
  /// outlive the tape.
  Var param(Parameter& p) {
    nodes_.push_back(Node{{}, {}, &p.value, record_ ? &p : nullptr, {}, record_});
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  const Matrix& value(Var v) const { return node(v).val(); }
  bool requires_grad(Var v) const { return node(v).requires_grad; }

  /// Gradient slot of `v`, allocated on first use; nullptr when `v` does
  /// not lead to any parameter.
  Matrix* grad_slot(Var v) {
    Node& n = node(v);
    if (!n.requires_grad) return nullptr;
    if (n.grad.size() != n.val().size() || n.grad.shape() != n.val().shape()) n.grad = Matrix(n.val().shape());
    return &n.grad;
  }

  /// Appends an op result. `backward` is dropped when gradients are not
  /// recorded or no input requires them.
  Var push(Matrix value, bool requires_grad, BackwardFn backward) {
    const bool rg = record_ && requires_grad;
    nodes_.push_back(Node{std::move(value), {}, nullptr, nullptr, rg ? std::move(backward) : BackwardFn{}, rg});
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  void backward(Var root) {
    if (value(root).size() != 1)
      throw std::invalid_argument("Tape::backward: root must be a scalar, got " + to_string(value(root).shape()));
    backward(root, Matrix(1, 1, 1.0));
  }

  /// Propagates `seed` from `root`. Node gradients are cleared first, so
  /// calling this twice adds the same contribution to parameters twice.
  void backward(Var root, const Matrix& seed) {
    if (seed.shape() != value(root).shape())
      throw std::invalid_argument("Tape::backward: seed " + to_string(seed.shape()) + " vs root " +
                                  to_string(value(root).shape()));
    for (auto& n : nodes_) n.grad = Matrix();
    if (!node(root).requires_grad) return;
    *grad_slot(root) = seed;
    for (int id = root.id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (!n.requires_grad || n.grad.size() == 0) continue;
      if (n.backward) n.backward(*this, n.grad);
      if (n.param) n.param->grad.add_inplace(n.grad);
    }
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    const Matrix* external = nullptr;
    Parameter* param = nullptr;
    BackwardFn backward;
    bool requires_grad = false;

    const Matrix& val() const { return external ? *external : value; }
  };

  Node& node(Var v) {
    check(v);
    return nodes_[static_cast<std::size_t>(v.id)];
  }
  const Node& node(Var v) const {
    check(v);
    return nodes_[static_cast<std::size_t>(v.id)];
  }
  void check(Var v) const {
    if (v.tape != this || v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size())
      throw std::invalid_argument("Var does not belong to this tape");
  }

  bool record_;
  std::deque<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape->value(*this); }

}  // namespace hrsched::diff
