#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "stimpute/tensor.hpp"

namespace stimpute::ad {

namespace detail {
struct Node;
}

/// Handle to a node in the computation graph. Copying a Var shares the node.
/// Graphs are rebuilt on every forward pass; parameter leaves persist across
/// passes and accumulate gradients until zero_grad().
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  const Tensor& value() const;
  Tensor& grad() const;
  bool defined() const { return node_ != nullptr; }
  bool requires_grad() const;
  void zero_grad() const;

  std::shared_ptr<detail::Node> node() const { return node_; }

 private:
  friend Var make_op(const char* op, Tensor out, std::vector<Var> inputs,
                     std::function<void(detail::Node&)> backward);
  std::shared_ptr<detail::Node> node_;
};

namespace detail {
struct Node {
  std::uint64_t id = 0;  // creation order; decreasing id is a reverse topo order
  const char* op = "leaf";
  Tensor value;
  Tensor grad;  // lazily sized
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;  // adds into inputs' grads

  Tensor& ensure_grad();
};
}  // namespace detail

// When enabled, every primitive throws numeric_error on non-finite inputs.
void set_finite_checks(bool on);
bool finite_checks();

// --- primitives -----------------------------------------------------------

Var matmul(const Var& a, const Var& b);          // (m,k)x(k,n) -> (m,n)
Var add(const Var& a, const Var& b);             // elementwise
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);             // Hadamard
Var add_rowvec(const Var& mat, const Var& row);  // (m,n) + (1,n) broadcast
Var mul_cols(const Var& mat, const Var& col);    // (m,n) * (m,1) broadcast
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(const Var& a, std::size_t c0, std::size_t c1);  // [c0, c1)
Var gather_rows(const Var& a, const std::vector<std::size_t>& idx);
// Deterministic sum-scatter: rows of `a` are added into `target` rows of the
// (out_rows, n) output, accumulated in index order sorted by (target, source).
Var scatter_sum_rows(const Var& a, const std::vector<std::size_t>& target,
                     std::size_t out_rows);
Var sum(const Var& a);  // -> scalar {1}

// Mean-over-quantiles pinball value per row: pred (n,|C|), target (n,1)
// constant. Output (n,1). Subgradient at the kink takes the left limit
// (indicator = 0).
Var pinball_rows(const Var& pred, const Tensor& target, const std::vector<double>& quantiles);

// --- reverse pass ---------------------------------------------------------

/// Backpropagates from a scalar loss. Visits every reachable node exactly
/// once, in decreasing creation order, and accumulates into leaf grads.
void backward(const Var& loss);

/// Max over all parameter coordinates of
/// |analytic - central difference| / max(|analytic|, |cd|, 1e-8).
double gradient_check(const std::function<Var()>& f, const std::vector<Var>& params,
                      double h = 1e-5);

}  // namespace stimpute::ad
