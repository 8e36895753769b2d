#include "gmvae/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gmvae/error.hpp"
#include "gmvae/kernels.hpp"

namespace gmvae::ad {

const Tensor& Var::value() const { return tape->value(*this); }
const Tensor& Var::grad() const { return tape->grad(*this); }

Var Tape::constant(Tensor value) {
  if (value.rank() != 2)
    throw ContractError("Tape: values must be rank 2, got " + value.shape_string());
  Node n;
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::variable(Tensor value) {
  Var v = constant(std::move(value));
  nodes_.back().requires_grad = true;
  return v;
}

Var Tape::parameter(const Tensor* value, Tensor* grad_sink) {
  require(value && value->rank() == 2, "Tape::parameter: value must be rank 2");
  Node n;
  n.ref = value;
  n.sink = grad_sink;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::reference(const Tensor* value) {
  require(value && value->rank() == 2, "Tape::reference: value must be rank 2");
  Node n;
  n.ref = value;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

const Tensor& Tape::value(Var v) const { return nodes_.at(v.id).value(); }

const Tensor& Tape::grad(Var v) const {
  return nodes_.at(v.id).grad;
}

Var Tape::push(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
  Node n;
  n.owned = std::move(value);
  for (auto id : inputs) n.requires_grad = n.requires_grad || nodes_[id].requires_grad;
  if (n.requires_grad) {
    n.inputs = std::move(inputs);
    n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() || !n.grad.same_shape(n.value())) n.grad = Tensor(n.value().shape(), 0.0);
  return n.grad;
}

void Tape::accumulate(std::size_t id, const Tensor& g) {
  if (!nodes_[id].requires_grad) return;
  Tensor& buf = grad_buffer(id);
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += g[i];
}

void Tape::backward(Var loss) {
  require(loss.tape == this, "backward: variable belongs to another tape");
  const Tensor& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1)
    throw ContractError("backward: loss must be a 1x1 scalar, got " + lv.shape_string());
  for (auto& n : nodes_) n.grad = Tensor();
  grad_buffer(loss.id)[0] = 1.0;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad) continue;
    if (n.grad.empty()) grad_buffer(id);  // unreachable from loss: zero gradient
    if (n.backward) n.backward(*this, n.grad);
    if (n.sink) {
      if (n.sink->empty() || !n.sink->same_shape(n.grad)) *n.sink = Tensor(n.grad.shape(), 0.0);
      for (std::size_t i = 0; i < n.grad.size(); ++i) (*n.sink)[i] += n.grad[i];
    }
  }
}

namespace {

bool needs(Tape& t, std::size_t id) { return t.requires_grad({&t, id}); }

struct Broadcast {
  std::size_t rows, cols;
  std::size_t ar, ac, br, bc;
};

Broadcast broadcast_shape(const Tensor& a, const Tensor& b, const char* op) {
  auto dim = [&](std::size_t x, std::size_t y) {
    if (x != y && x != 1 && y != 1)
      throw ContractError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                          b.shape_string());
    return std::max(x, y);
  };
  return {dim(a.rows(), b.rows()), dim(a.cols(), b.cols()), a.rows(), a.cols(), b.rows(),
          b.cols()};
}

// Elementwise binary op with broadcasting. `f` computes the value, `da` and
// `db` the partials with respect to each operand at (x, y).
template <class F, class DA, class DB>
Var binary(Var a, Var b, const char* name, F f, DA da, DB db) {
  Tape& t = *a.tape;
  if (a.tape != b.tape) throw ContractError(std::string(name) + ": operands on different tapes");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const Broadcast s = broadcast_shape(av, bv, name);
  Tensor out({s.rows, s.cols});
  for (std::size_t i = 0; i < s.rows; ++i) {
    const std::size_t ia = s.ar == 1 ? 0 : i, ib = s.br == 1 ? 0 : i;
    for (std::size_t j = 0; j < s.cols; ++j)
      out(i, j) = f(av(ia, s.ac == 1 ? 0 : j), bv(ib, s.bc == 1 ? 0 : j));
  }
  const std::size_t aid = a.id, bid = b.id;
  return t.push(std::move(out), {aid, bid}, [aid, bid, s, da, db](Tape& tp, const Tensor& g) {
    const Tensor& x = tp.value({&tp, aid});
    const Tensor& y = tp.value({&tp, bid});
    Tensor* ga = needs(tp, aid) ? &tp.grad_buffer(aid) : nullptr;
    Tensor* gb = needs(tp, bid) ? &tp.grad_buffer(bid) : nullptr;
    for (std::size_t i = 0; i < s.rows; ++i) {
      const std::size_t ia = s.ar == 1 ? 0 : i, ib = s.br == 1 ? 0 : i;
      for (std::size_t j = 0; j < s.cols; ++j) {
        const std::size_t ja = s.ac == 1 ? 0 : j, jb = s.bc == 1 ? 0 : j;
        const double xv = x(ia, ja), yv = y(ib, jb), gv = g(i, j);
        if (ga) (*ga)(ia, ja) += gv * da(xv, yv);
        if (gb) (*gb)(ib, jb) += gv * db(xv, yv);
      }
    }
  });
}

// Elementwise unary op; `d` gives the derivative from (input, output).
template <class F, class D>
Var unary(Var a, F f, D d) {
  Tape& t = *a.tape;
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  const std::size_t aid = a.id, oid = t.size();
  return t.push(std::move(out), {aid}, [aid, oid, d](Tape& tp, const Tensor& g) {
    const Tensor& x = tp.value({&tp, aid});
    const Tensor& y = tp.value({&tp, oid});
    Tensor& ga = tp.grad_buffer(aid);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * d(x[i], y[i]);
  });
}

double stable_softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var add(Var a, Var b) {
  return binary(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Var div(Var a, Var b) {
  return binary(
      a, b, "div", [](double x, double y) { return x / y; },
      [](double, double y) { return 1.0 / y; }, [](double x, double y) { return -x / (y * y); });
}

Var neg(Var a) {
  return unary(a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Var scale(Var a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(Var a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
  return unary(
      a, [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var softplus(Var a) {
  return unary(a, stable_softplus, [](double x, double) { return sigmoid(x); });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var clamp_min(Var a, double lo) {
  return unary(
      a, [lo](double x) { return x < lo ? lo : x; },
      [lo](double x, double) { return x < lo ? 0.0 : 1.0; });
}

Var matmul(Var a, Var b) {
  Tape& t = *a.tape;
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows())
    throw ContractError("matmul: inner dimensions differ, " + av.shape_string() + " x " +
                        bv.shape_string());
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor out({m, n});
  kernels::matmul_nn(av.data(), bv.data(), out.data(), m, k, n);
  const std::size_t aid = a.id, bid = b.id;
  return t.push(std::move(out), {aid, bid}, [aid, bid, m, k, n](Tape& tp, const Tensor& g) {
    if (needs(tp, aid))
      kernels::matmul_nt(g.data(), tp.value({&tp, bid}).data(), tp.grad_buffer(aid).data(), m, n,
                         k, true);
    if (needs(tp, bid))
      kernels::matmul_tn(tp.value({&tp, aid}).data(), g.data(), tp.grad_buffer(bid).data(), m, k,
                         n, true);
  });
}

Var log_sum_exp(Var a) {
  Tape& t = *a.tape;
  const Tensor& av = a.value();
  const std::size_t r = av.rows(), c = av.cols();
  require(c >= 1, "log_sum_exp: empty rows");
  Tensor out({r, 1});
  for (std::size_t i = 0; i < r; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j) mx = std::max(mx, av(i, j));
    if (!std::isfinite(mx)) {
      out(i, 0) = mx;
      continue;
    }
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(av(i, j) - mx);
    out(i, 0) = mx + std::log(s);
  }
  const std::size_t aid = a.id, oid = t.size();
  return t.push(std::move(out), {aid}, [aid, oid, r, c](Tape& tp, const Tensor& g) {
    const Tensor& x = tp.value({&tp, aid});
    const Tensor& y = tp.value({&tp, oid});
    Tensor& ga = tp.grad_buffer(aid);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga(i, j) += g(i, 0) * std::exp(x(i, j) - y(i, 0));
  });
}

Var log_softmax(Var a) { return sub(a, log_sum_exp(a)); }

Var softmax(Var a) {
  Tape& t = *a.tape;
  const Tensor& av = a.value();
  const std::size_t r = av.rows(), c = av.cols();
  Tensor out({r, c});
  for (std::size_t i = 0; i < r; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j) mx = std::max(mx, av(i, j));
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += (out(i, j) = std::exp(av(i, j) - mx));
    for (std::size_t j = 0; j < c; ++j) out(i, j) /= s;
  }
  const std::size_t aid = a.id, oid = t.size();
  return t.push(std::move(out), {aid}, [aid, oid, r, c](Tape& tp, const Tensor& g) {
    const Tensor& y = tp.value({&tp, oid});
    Tensor& ga = tp.grad_buffer(aid);
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < c; ++j) ga(i, j) += y(i, j) * (g(i, j) - dot);
    }
  });
}

Var sum(Var a) {
  Tape& t = *a.tape;
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const std::size_t aid = a.id;
  return t.push(Tensor::scalar(s), {aid}, [aid](Tape& tp, const Tensor& g) {
    Tensor& ga = tp.grad_buffer(aid);
    for (double& v : ga.values()) v += g[0];
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  require(n > 0, "mean: empty tensor");
  return scale(sum(a), 1.0 / n);
}

Var sum_rows(Var a) {
  Tape& t = *a.tape;
  const Tensor& av = a.value();
  const std::size_t r = av.rows(), c = av.cols();
  Tensor out({r, 1});
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += av(i, j);
    out(i, 0) = s;
  }
  const std::size_t aid = a.id;
  return t.push(std::move(out), {aid}, [aid, r, c](Tape& tp, const Tensor& g) {
    Tensor& ga = tp.grad_buffer(aid);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga(i, j) += g(i, 0);
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  Tape& t = *a.tape;
  Tensor out = a.value().cols_slice(begin, end);
  const std::size_t aid = a.id, r = out.rows();
  return t.push(std::move(out), {aid}, [aid, r, begin, end](Tape& tp, const Tensor& g) {
    Tensor& ga = tp.grad_buffer(aid);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = begin; j < end; ++j) ga(i, j) += g(i, j - begin);
  });
}

Var stop_gradient(Var a) { return a.tape->constant(a.value()); }

}  // namespace gmvae::ad
