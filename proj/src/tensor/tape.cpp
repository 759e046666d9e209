#include "aggbuf/tensor/tape.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "aggbuf/common/error.hpp"
#include "aggbuf/tensor/kernels.hpp"

namespace aggbuf {

const Matrix& Var::value() const { return tape_->value(*this); }

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, false, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, true, false, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::span<const Var> inputs, BackwardFn backward) {
  if (!value.all_finite()) throw NumericError("non-finite value produced (" + shape_string(value) + ")");
  bool needs = false;
  for (const Var& in : inputs) {
    if (&in.tape() != this) throw ContractError("operands recorded on different tapes");
    needs = needs || nodes_[in.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, false, needs ? std::move(backward) : BackwardFn{}});
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& n = nodes_[v.id()];
  if (!n.requires_grad) return;
  require_same_shape(n.value, g, "gradient accumulate");
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
    return;
  }
  auto dst = n.grad.data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::backward(Var root) {
  if (&root.tape() != this) throw ContractError("backward root belongs to another tape");
  const Matrix& rv = nodes_[root.id()].value;
  if (rv.rows() != 1 || rv.cols() != 1)
    throw ContractError("backward requires a scalar root, got " + shape_string(rv));
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad = Matrix();
  }
  accumulate(root, Matrix::scalar(1.0));
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    // Copy: the callback may accumulate into nodes_ (never into itself).
    const Matrix g = n.grad;
    n.backward(*this, g);
  }
}

const Matrix* Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id());
  return n.has_grad ? &n.grad : nullptr;
}

const char* to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::ReLU: return "relu";
    case ActivationKind::Sigmoid: return "sigmoid";
    case ActivationKind::GELU: return "gelu";
    case ActivationKind::Tanh: return "tanh";
    case ActivationKind::ELU: return "elu";
  }
  return "?";
}

ActivationKind activation_from_string(const std::string& name) {
  for (auto k : {ActivationKind::ReLU, ActivationKind::Sigmoid, ActivationKind::GELU,
                 ActivationKind::Tanh, ActivationKind::ELU}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown activation '" + name + "'");
}

double activate(ActivationKind kind, double x) {
  switch (kind) {
    case ActivationKind::ReLU: return x > 0.0 ? x : 0.0;
    case ActivationKind::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case ActivationKind::GELU: return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
    case ActivationKind::Tanh: return std::tanh(x);
    case ActivationKind::ELU: return x > 0.0 ? x : std::expm1(x);
  }
  return x;
}

double activate_derivative(ActivationKind kind, double x) {
  switch (kind) {
    case ActivationKind::ReLU: return x > 0.0 ? 1.0 : 0.0;
    case ActivationKind::Sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 - s);
    }
    case ActivationKind::GELU: {
      const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
      const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
      return cdf + x * pdf;
    }
    case ActivationKind::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case ActivationKind::ELU: return x > 0.0 ? 1.0 : std::exp(x);
  }
  return 1.0;
}

namespace ops {
namespace {

Tape& same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw ContractError("operands recorded on different tapes");
  return a.tape();
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  Matrix out = kernels::matmul(a.value(), b.value());
  const Var in[] = {a, b};
  return t.record(std::move(out), in, [a, b](Tape& tape, const Matrix& g) {
    if (tape.requires_grad(a)) tape.accumulate(a, kernels::matmul_nt(g, b.value()));
    if (tape.requires_grad(b)) tape.accumulate(b, kernels::matmul_tn(a.value(), g));
  });
}

Var spmm(const CsrMatrix& s, Var d) {
  Matrix out = kernels::spmm(s, d.value());
  const Var in[] = {d};
  const CsrMatrix* sp = &s;
  return d.tape().record(std::move(out), in, [sp, d](Tape& tape, const Matrix& g) {
    tape.accumulate(d, kernels::spmm(sp->transposed(), g));
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Matrix out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  const Var in[] = {a, b};
  return t.record(std::move(out), in, [a, b](Tape& tape, const Matrix& g) {
    tape.accumulate(a, g);
    tape.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Matrix out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  const Var in[] = {a, b};
  return t.record(std::move(out), in, [a, b](Tape& tape, const Matrix& g) {
    tape.accumulate(a, g);
    if (tape.requires_grad(b)) {
      Matrix neg = g;
      for (double& v : neg.data()) v = -v;
      tape.accumulate(b, neg);
    }
  });
}

Var add_row(Var a, Var bias) {
  Tape& t = same_tape(a, bias);
  const Matrix& av = a.value();
  const Matrix& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != av.cols())
    throw DimensionError("add_row: bias " + shape_string(bv) + " vs " + shape_string(av));
  Matrix out = av;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bv(0, j);
  }
  const Var in[] = {a, bias};
  return t.record(std::move(out), in, [a, bias](Tape& tape, const Matrix& g) {
    tape.accumulate(a, g);
    if (tape.requires_grad(bias)) {
      Matrix gb(1, g.cols());
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gb(0, j) += g(i, j);
      tape.accumulate(bias, gb);
    }
  });
}

Var scale(Var a, double factor) {
  Matrix out = a.value();
  for (double& v : out.data()) v *= factor;
  const Var in[] = {a};
  return a.tape().record(std::move(out), in, [a, factor](Tape& tape, const Matrix& g) {
    Matrix ga = g;
    for (double& v : ga.data()) v *= factor;
    tape.accumulate(a, ga);
  });
}

Var scale_by(Var a, Var s) {
  Tape& t = same_tape(a, s);
  const double sv = s.value().item();
  Matrix out = a.value();
  for (double& v : out.data()) v *= sv;
  const Var in[] = {a, s};
  return t.record(std::move(out), in, [a, s](Tape& tape, const Matrix& g) {
    const double sv = s.value().item();
    if (tape.requires_grad(a)) {
      Matrix ga = g;
      for (double& v : ga.data()) v *= sv;
      tape.accumulate(a, ga);
    }
    if (tape.requires_grad(s)) {
      double acc = 0.0;
      auto av = a.value().data();
      auto gv = g.data();
      for (std::size_t i = 0; i < gv.size(); ++i) acc += gv[i] * av[i];
      tape.accumulate(s, Matrix::scalar(acc));
    }
  });
}

Var scale_rows(Var a, std::vector<double> factors) {
  const Matrix& av = a.value();
  if (factors.size() != av.rows())
    throw DimensionError("scale_rows: " + std::to_string(factors.size()) + " factors for " +
                         shape_string(av));
  Matrix out = av;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (double& v : out.row(i)) v *= factors[i];
  const Var in[] = {a};
  auto f = std::make_shared<const std::vector<double>>(std::move(factors));
  return a.tape().record(std::move(out), in, [a, f](Tape& tape, const Matrix& g) {
    Matrix ga = g;
    for (std::size_t i = 0; i < ga.rows(); ++i)
      for (double& v : ga.row(i)) v *= (*f)[i];
    tape.accumulate(a, ga);
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  Tape& t = parts.front().tape();
  const std::size_t n = parts.front().rows();
  std::size_t width = 0;
  for (const Var& p : parts) {
    if (p.rows() != n) throw DimensionError("concat_cols: row count mismatch");
    width += p.cols();
  }
  Matrix out(n, width);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Matrix& pv = p.value();
    for (std::size_t i = 0; i < n; ++i)
      std::copy(pv.row(i).begin(), pv.row(i).end(), out.row(i).begin() + static_cast<std::ptrdiff_t>(off));
    off += pv.cols();
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  return t.record(std::move(out), parts, [ins](Tape& tape, const Matrix& g) {
    std::size_t off = 0;
    for (const Var& p : ins) {
      const std::size_t w = p.cols();
      if (tape.requires_grad(p)) {
        Matrix gp(g.rows(), w);
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < w; ++j) gp(i, j) = g(i, off + j);
        tape.accumulate(p, gp);
      }
      off += w;
    }
  });
}

Var activation(Var x, ActivationKind kind) {
  Matrix out = x.value();
  for (double& v : out.data()) v = activate(kind, v);
  const Var in[] = {x};
  return x.tape().record(std::move(out), in, [x, kind](Tape& tape, const Matrix& g) {
    Matrix gx = g;
    auto xv = x.value().data();
    auto gd = gx.data();
    for (std::size_t i = 0; i < gd.size(); ++i) gd[i] *= activate_derivative(kind, xv[i]);
    tape.accumulate(x, gx);
  });
}

namespace {

Matrix log_softmax_values(const Matrix& xv) {
  Matrix out(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < xv.rows(); ++i) {
    const auto r = xv.row(i);
    const double m = *std::max_element(r.begin(), r.end());
    double s = 0.0;
    for (double v : r) s += std::exp(v - m);
    const double lse = m + std::log(s);
    for (std::size_t j = 0; j < r.size(); ++j) out(i, j) = r[j] - lse;
  }
  return out;
}

}  // namespace

Var log_softmax_rows(Var x) {
  if (x.cols() == 0) throw DimensionError("log_softmax_rows: zero columns");
  const Var in[] = {x};
  return x.tape().record(log_softmax_values(x.value()), in, [x](Tape& tape, const Matrix& g) {
    // d/dx = g - softmax * rowsum(g)
    const Matrix lp = log_softmax_values(x.value());
    Matrix gx(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.rows(); ++i) {
      double gs = 0.0;
      for (std::size_t j = 0; j < g.cols(); ++j) gs += g(i, j);
      for (std::size_t j = 0; j < g.cols(); ++j) gx(i, j) = g(i, j) - std::exp(lp(i, j)) * gs;
    }
    tape.accumulate(x, gx);
  });
}

Var dropout(Var x, double p, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw InvalidRateError("dropout rate must lie in [0, 1), got " + std::to_string(p));
  if (p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  std::bernoulli_distribution keep(1.0 - p);
  auto mask = std::make_shared<std::vector<double>>(x.value().size());
  for (double& m : *mask) m = keep(rng) ? keep_scale : 0.0;
  Matrix out = x.value();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= (*mask)[i];
  const Var in[] = {x};
  return x.tape().record(std::move(out), in, [x, mask](Tape& tape, const Matrix& g) {
    Matrix gx = g;
    auto gd = gx.data();
    for (std::size_t i = 0; i < gd.size(); ++i) gd[i] *= (*mask)[i];
    tape.accumulate(x, gx);
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const Var in[] = {x};
  return x.tape().record(Matrix::scalar(s), in, [x](Tape& tape, const Matrix& g) {
    tape.accumulate(x, Matrix(x.rows(), x.cols(), g.item()));
  });
}

Var kl_rows(Var logp, Var logq, std::span<const std::uint32_t> rows) {
  Tape& t = same_tape(logp, logq);
  require_same_shape(logp.value(), logq.value(), "kl_rows");
  if (rows.empty()) throw ContractError("kl_rows: empty node set");
  const Matrix& lp = logp.value();
  const Matrix& lq = logq.value();
  double total = 0.0;
  for (auto r : rows) {
    if (r >= lp.rows()) throw DimensionError("kl_rows: node id out of range");
    for (std::size_t c = 0; c < lp.cols(); ++c) total += std::exp(lp(r, c)) * (lp(r, c) - lq(r, c));
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  auto ids = std::make_shared<const std::vector<std::uint32_t>>(rows.begin(), rows.end());
  const Var in[] = {logp, logq};
  return t.record(Matrix::scalar(total * inv), in, [logp, logq, ids, inv](Tape& tape, const Matrix& g) {
    const double s = g.item() * inv;
    const Matrix& lp = logp.value();
    const Matrix& lq = logq.value();
    if (tape.requires_grad(logp)) {
      Matrix gp(lp.rows(), lp.cols());
      for (auto r : *ids)
        for (std::size_t c = 0; c < lp.cols(); ++c) {
          const double p = std::exp(lp(r, c));
          gp(r, c) += s * p * (lp(r, c) - lq(r, c) + 1.0);
        }
      tape.accumulate(logp, gp);
    }
    if (tape.requires_grad(logq)) {
      Matrix gq(lq.rows(), lq.cols());
      for (auto r : *ids)
        for (std::size_t c = 0; c < lq.cols(); ++c) gq(r, c) -= s * std::exp(lp(r, c));
      tape.accumulate(logq, gq);
    }
  });
}

Var nll(Var logq, std::span<const std::uint32_t> targets, std::span<const std::uint32_t> rows) {
  if (rows.empty()) throw ContractError("nll: empty node set");
  const Matrix& lq = logq.value();
  if (targets.size() != lq.rows()) throw DimensionError("nll: one target per row required");
  double total = 0.0;
  for (auto r : rows) {
    if (r >= lq.rows()) throw DimensionError("nll: node id out of range");
    if (targets[r] >= lq.cols()) throw ContractError("nll: target class out of range");
    total -= lq(r, targets[r]);
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  auto ids = std::make_shared<const std::vector<std::uint32_t>>(rows.begin(), rows.end());
  auto tg = std::make_shared<const std::vector<std::uint32_t>>(targets.begin(), targets.end());
  const Var in[] = {logq};
  return logq.tape().record(Matrix::scalar(total * inv), in, [logq, ids, tg, inv](Tape& tape, const Matrix& g) {
    Matrix gq(logq.rows(), logq.cols());
    for (auto r : *ids) gq(r, (*tg)[r]) -= g.item() * inv;
    tape.accumulate(logq, gq);
  });
}

Var detach(Var x) { return x.tape().constant(x.value()); }

}  // namespace ops
}  // namespace aggbuf
