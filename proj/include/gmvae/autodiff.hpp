#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "gmvae/tensor.hpp"

namespace gmvae::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Tensor& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Dynamic reverse-mode tape. Nodes are appended in topological order as the
/// forward pass runs, so the graph is acyclic by construction. All values are
/// rank-2 (scalars are 1x1).
///
/// backward() recomputes node gradients from scratch on every call, but
/// gradients of parameter leaves are *added* into their external sinks, so
/// calling backward twice without zeroing the sinks accumulates.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Value with no gradient.
  Var constant(Tensor value);
  /// Leaf whose gradient is kept on the tape (read it with Var::grad()).
  Var variable(Tensor value);
  /// Leaf referencing external storage; backward adds d(loss)/d(value) into
  /// *grad_sink. Both pointers must outlive the tape.
  Var parameter(const Tensor* value, Tensor* grad_sink);
  /// Constant referencing external storage (frozen weights, no copy).
  Var reference(const Tensor* value);

  void backward(Var loss);

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;
  /// Append an op result. `backward` receives the output gradient and must
  /// call accumulate() for each input that requires_grad.
  Var push(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);
  /// Add `g` into the gradient buffer of node `id`, allocating it if needed.
  void accumulate(std::size_t id, const Tensor& g);
  Tensor& grad_buffer(std::size_t id);

 private:
  struct Node {
    Tensor owned;
    const Tensor* ref = nullptr;
    Tensor grad;
    Tensor* sink = nullptr;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    const Tensor& value() const { return ref ? *ref : owned; }
  };
  std::vector<Node> nodes_;
};

// Forward ops. Binary elementwise ops broadcast any operand dimension of
// extent 1 (scalar 1x1, row 1xC, column Rx1).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var neg(Var a);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var matmul(Var a, Var b);
Var exp(Var a);
Var log(Var a);
Var tanh(Var a);
Var relu(Var a);
Var softplus(Var a);
Var square(Var a);
/// Elementwise max(a, lo); gradient is zero where the floor is active.
Var clamp_min(Var a, double lo);
/// Row-wise softmax over the last axis.
Var softmax(Var a);
/// Row-wise log-softmax over the last axis.
Var log_softmax(Var a);
/// Row-wise log(sum(exp(.))) with max shift; result is R x 1.
Var log_sum_exp(Var a);
/// Sum of all entries, 1x1.
Var sum(Var a);
/// Row sums, R x 1.
Var sum_rows(Var a);
/// Mean of all entries, 1x1.
Var mean(Var a);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
/// Same value, no gradient flows back through it.
Var stop_gradient(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator*(double s, Var a) { return scale(a, s); }
inline Var operator*(Var a, double s) { return scale(a, s); }
inline Var operator+(Var a, double s) { return add_scalar(a, s); }
inline Var operator-(Var a, double s) { return add_scalar(a, -s); }

}  // namespace gmvae::ad
