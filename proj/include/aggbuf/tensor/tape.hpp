#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "aggbuf/common/rng.hpp"
#include "aggbuf/tensor/csr.hpp"
#include "aggbuf/tensor/matrix.hpp"

namespace aggbuf {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
// tape is alive.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode differentiation tape. Nodes are appended in evaluation order,
// so the node list is always topologically sorted.
class Tape {
 public:
  // Receives the gradient of the root w.r.t. this node's output.
  using BackwardFn = std::function<void(Tape&, const Matrix& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf that never receives a gradient (data, frozen parameters).
  Var constant(Matrix value);
  // Leaf whose gradient is collected by backward().
  Var parameter(Matrix value);

  Var record(Matrix value, std::span<const Var> inputs, BackwardFn backward);

  const Matrix& value(Var v) const { return nodes_.at(v.id()).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id()).requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Root must be 1x1. Clears gradients from any earlier pass.
  void backward(Var root);

  // nullptr when the node received no gradient (constants, frozen leaves,
  // nodes unreachable from the root).
  const Matrix* grad(Var v) const;

  // Adds `g` into the gradient slot of `v`; ignored for nodes that do not
  // require a gradient.
  void accumulate(Var v, const Matrix& g);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

enum class ActivationKind { ReLU, Sigmoid, GELU, Tanh, ELU };

const char* to_string(ActivationKind kind);
ActivationKind activation_from_string(const std::string& name);

// Scalar activation and its derivative, shared by the differentiable op and
// the analysis code.
double activate(ActivationKind kind, double x);
double activate_derivative(ActivationKind kind, double x);

// Differentiable operations. All inputs must live on the same tape.
namespace ops {

Var matmul(Var a, Var b);
// The sparse operand is treated as a constant and must outlive backward().
Var spmm(const CsrMatrix& s, Var d);
Var add(Var a, Var b);
Var sub(Var a, Var b);
// a (n x c) + bias (1 x c) broadcast over rows.
Var add_row(Var a, Var bias);
Var scale(Var a, double factor);
// a * s where s is 1x1.
Var scale_by(Var a, Var s);
// Row i multiplied by factors[i].
Var scale_rows(Var a, std::vector<double> factors);
Var concat_cols(std::span<const Var> parts);
Var activation(Var x, ActivationKind kind);
Var log_softmax_rows(Var x);
// Inverted dropout; p must lie in [0, 1).
Var dropout(Var x, double p, Rng& rng);
Var sum(Var x);
// Mean over `rows` of sum_c exp(logp) * (logp - logq).
Var kl_rows(Var logp, Var logq, std::span<const std::uint32_t> rows);
// Mean negative log-likelihood of targets[r] over `rows`.
Var nll(Var logq, std::span<const std::uint32_t> targets, std::span<const std::uint32_t> rows);
// Copy of the value with no gradient path.
Var detach(Var x);

}  // namespace ops
}  // namespace aggbuf
