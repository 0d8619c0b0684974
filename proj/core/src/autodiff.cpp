#include "stimpute/autodiff.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace stimpute::ad {

namespace {
std::atomic<std::uint64_t> g_next_id{1};
std::atomic<bool> g_finite_checks{false};

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const EMat>;
using MMap = Eigen::Map<EMat>;

CMap as_mat(const Tensor& t) {
  return CMap(t.data().data(), static_cast<Eigen::Index>(t.dims()[0]),
              static_cast<Eigen::Index>(t.dims()[1]));
}

MMap as_mat(Tensor& t) {
  return MMap(t.data().data(), static_cast<Eigen::Index>(t.dims()[0]),
              static_cast<Eigen::Index>(t.dims()[1]));
}

void check_finite(const Var& v, const char* op) {
  if (finite_checks() && !v.value().all_finite())
    throw numeric_error(std::string("non-finite input to ") + op);
}
}  // namespace

void set_finite_checks(bool on) { g_finite_checks = on; }
bool finite_checks() { return g_finite_checks; }

Tensor& detail::Node::ensure_grad() {
  if (grad.size() == 0) grad = Tensor(value.dims(), 0.0);
  return grad;
}

Var::Var(Tensor value, bool requires_grad) {
  node_ = std::make_shared<detail::Node>();
  node_->id = g_next_id.fetch_add(1);
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

const Tensor& Var::value() const { return node_->value; }
Tensor& Var::grad() const { return node_->ensure_grad(); }
bool Var::requires_grad() const { return node_ && node_->requires_grad; }
void Var::zero_grad() const {
  if (node_ && node_->grad.size() > 0) std::fill(node_->grad.data().begin(), node_->grad.data().end(), 0.0);
}

Var make_op(const char* op, Tensor out, std::vector<Var> inputs,
            std::function<void(detail::Node&)> backward) {
  Var v;
  v.node_ = std::make_shared<detail::Node>();
  v.node_->id = g_next_id.fetch_add(1);
  v.node_->op = op;
  v.node_->value = std::move(out);
  v.node_->backward = std::move(backward);
  v.node_->inputs.reserve(inputs.size());
  for (auto& in : inputs) v.node_->inputs.push_back(in.node());
  return v;
}

namespace {
void require_2d(const Var& v, const char* op) {
  if (v.value().rank() != 2) throw shape_error(std::string(op) + ": rank-2 required");
}
}  // namespace

Var matmul(const Var& a, const Var& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  check_finite(a, "matmul");
  check_finite(b, "matmul");
  const auto& ad = a.value().dims();
  const auto& bd = b.value().dims();
  if (ad[1] != bd[0]) throw shape_error("matmul inner dims");
  Tensor out({ad[0], bd[1]});
  as_mat(out).noalias() = as_mat(a.value()) * as_mat(b.value());
  return make_op("matmul", std::move(out), {a, b}, [](detail::Node& n) {
    auto g = as_mat(n.grad);
    auto& na = *n.inputs[0];
    auto& nb = *n.inputs[1];
    as_mat(na.ensure_grad()).noalias() += g * as_mat(nb.value).transpose();
    as_mat(nb.ensure_grad()).noalias() += as_mat(na.value).transpose() * g;
  });
}

Var add(const Var& a, const Var& b) {
  check_finite(a, "add");
  check_finite(b, "add");
  if (!a.value().same_shape(b.value())) throw shape_error("add dims");
  Tensor out(a.value().dims());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return make_op("add", std::move(out), {a, b}, [](detail::Node& n) {
    auto& ga = n.inputs[0]->ensure_grad();
    auto& gb = n.inputs[1]->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      ga[i] += n.grad[i];
      gb[i] += n.grad[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  check_finite(a, "sub");
  check_finite(b, "sub");
  if (!a.value().same_shape(b.value())) throw shape_error("sub dims");
  Tensor out(a.value().dims());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  return make_op("sub", std::move(out), {a, b}, [](detail::Node& n) {
    auto& ga = n.inputs[0]->ensure_grad();
    auto& gb = n.inputs[1]->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      ga[i] += n.grad[i];
      gb[i] -= n.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  check_finite(a, "mul");
  check_finite(b, "mul");
  if (!a.value().same_shape(b.value())) throw shape_error("mul dims");
  Tensor out(a.value().dims());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return make_op("mul", std::move(out), {a, b}, [](detail::Node& n) {
    auto& ga = n.inputs[0]->ensure_grad();
    auto& gb = n.inputs[1]->ensure_grad();
    const auto& av = n.inputs[0]->value;
    const auto& bv = n.inputs[1]->value;
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      ga[i] += n.grad[i] * bv[i];
      gb[i] += n.grad[i] * av[i];
    }
  });
}

Var add_rowvec(const Var& mat, const Var& row) {
  require_2d(mat, "add_rowvec");
  require_2d(row, "add_rowvec");
  check_finite(mat, "add_rowvec");
  check_finite(row, "add_rowvec");
  std::size_t m = mat.value().dims()[0], c = mat.value().dims()[1];
  if (row.value().dims()[0] != 1 || row.value().dims()[1] != c)
    throw shape_error("add_rowvec: row must be (1,n)");
  Tensor out({m, c});
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] = mat.value()[r * c + j] + row.value()[j];
  return make_op("add_rowvec", std::move(out), {mat, row}, [m, c](detail::Node& n) {
    auto& gm = n.inputs[0]->ensure_grad();
    auto& gr = n.inputs[1]->ensure_grad();
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t j = 0; j < c; ++j) {
        gm[r * c + j] += n.grad[r * c + j];
        gr[j] += n.grad[r * c + j];
      }
  });
}

Var mul_cols(const Var& mat, const Var& col) {
  require_2d(mat, "mul_cols");
  require_2d(col, "mul_cols");
  check_finite(mat, "mul_cols");
  check_finite(col, "mul_cols");
  std::size_t m = mat.value().dims()[0], c = mat.value().dims()[1];
  if (col.value().dims()[0] != m || col.value().dims()[1] != 1)
    throw shape_error("mul_cols: col must be (m,1)");
  Tensor out({m, c});
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] = mat.value()[r * c + j] * col.value()[r];
  return make_op("mul_cols", std::move(out), {mat, col}, [m, c](detail::Node& n) {
    auto& gm = n.inputs[0]->ensure_grad();
    auto& gc = n.inputs[1]->ensure_grad();
    const auto& mv = n.inputs[0]->value;
    const auto& cv = n.inputs[1]->value;
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t j = 0; j < c; ++j) {
        gm[r * c + j] += n.grad[r * c + j] * cv[r];
        gc[r] += n.grad[r * c + j] * mv[r * c + j];
      }
  });
}

Var scale(const Var& a, double s) {
  check_finite(a, "scale");
  Tensor out(a.value().dims());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * s;
  return make_op("scale", std::move(out), {a}, [s](detail::Node& n) {
    auto& ga = n.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) ga[i] += n.grad[i] * s;
  });
}

Var add_scalar(const Var& a, double s) {
  check_finite(a, "add_scalar");
  Tensor out(a.value().dims());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + s;
  return make_op("add_scalar", std::move(out), {a}, [](detail::Node& n) {
    auto& ga = n.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) ga[i] += n.grad[i];
  });
}

Var sigmoid(const Var& a) {
  check_finite(a, "sigmoid");
  Tensor out(a.value().dims());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-a.value()[i]));
  return make_op("sigmoid", std::move(out), {a}, [](detail::Node& n) {
    auto& ga = n.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      double y = n.value[i];
      ga[i] += n.grad[i] * y * (1.0 - y);
    }
  });
}

Var tanh(const Var& a) {
  check_finite(a, "tanh");
  Tensor out(a.value().dims());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(a.value()[i]);
  return make_op("tanh", std::move(out), {a}, [](detail::Node& n) {
    auto& ga = n.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      double y = n.value[i];
      ga[i] += n.grad[i] * (1.0 - y * y);
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw usage_error("concat_cols: empty");
  std::size_t m = parts[0].value().dims()[0];
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_2d(p, "concat_cols");
    check_finite(p, "concat_cols");
    if (p.value().dims()[0] != m) throw shape_error("concat_cols row counts");
    total += p.value().dims()[1];
  }
  Tensor out({m, total});
  std::vector<std::size_t> widths;
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::size_t c = p.value().dims()[1];
    widths.push_back(c);
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t j = 0; j < c; ++j) out[r * total + off + j] = p.value()[r * c + j];
    off += c;
  }
  return make_op("concat_cols", std::move(out), parts, [m, total, widths](detail::Node& n) {
    std::size_t off = 0;
    for (std::size_t p = 0; p < n.inputs.size(); ++p) {
      auto& g = n.inputs[p]->ensure_grad();
      std::size_t c = widths[p];
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t j = 0; j < c; ++j) g[r * c + j] += n.grad[r * total + off + j];
      off += c;
    }
  });
}

Var slice_cols(const Var& a, std::size_t c0, std::size_t c1) {
  require_2d(a, "slice_cols");
  check_finite(a, "slice_cols");
  std::size_t m = a.value().dims()[0], c = a.value().dims()[1];
  if (c0 >= c1 || c1 > c) throw shape_error("slice_cols range");
  std::size_t w = c1 - c0;
  Tensor out({m, w});
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t j = 0; j < w; ++j) out[r * w + j] = a.value()[r * c + c0 + j];
  return make_op("slice_cols", std::move(out), {a}, [m, c, c0, w](detail::Node& n) {
    auto& g = n.inputs[0]->ensure_grad();
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t j = 0; j < w; ++j) g[r * c + c0 + j] += n.grad[r * w + j];
  });
}

Var gather_rows(const Var& a, const std::vector<std::size_t>& idx) {
  require_2d(a, "gather_rows");
  check_finite(a, "gather_rows");
  std::size_t m = a.value().dims()[0], c = a.value().dims()[1];
  for (std::size_t i : idx)
    if (i >= m) throw shape_error("gather_rows index out of range");
  Tensor out({idx.size(), c});
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] = a.value()[idx[r] * c + j];
  return make_op("gather_rows", std::move(out), {a}, [idx, c](detail::Node& n) {
    auto& g = n.inputs[0]->ensure_grad();
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t j = 0; j < c; ++j) g[idx[r] * c + j] += n.grad[r * c + j];
  });
}

Var scatter_sum_rows(const Var& a, const std::vector<std::size_t>& target,
                     std::size_t out_rows) {
  require_2d(a, "scatter_sum_rows");
  check_finite(a, "scatter_sum_rows");
  std::size_t m = a.value().dims()[0], c = a.value().dims()[1];
  if (target.size() != m) throw shape_error("scatter_sum_rows: one target per row");
  for (std::size_t t : target)
    if (t >= out_rows) throw shape_error("scatter_sum_rows target out of range");
  // Accumulation order sorted by (target, source) keeps reductions bit-exact
  // regardless of the caller's row order.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return target[x] < target[y]; });
  Tensor out({out_rows, c});
  for (std::size_t r : order)
    for (std::size_t j = 0; j < c; ++j) out[target[r] * c + j] += a.value()[r * c + j];
  return make_op("scatter_sum_rows", std::move(out), {a}, [target, c](detail::Node& n) {
    auto& g = n.inputs[0]->ensure_grad();
    for (std::size_t r = 0; r < target.size(); ++r)
      for (std::size_t j = 0; j < c; ++j) g[r * c + j] += n.grad[target[r] * c + j];
  });
}

Var sum(const Var& a) {
  check_finite(a, "sum");
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  Tensor out({1});
  out[0] = s;
  return make_op("sum", std::move(out), {a}, [](detail::Node& n) {
    auto& g = n.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[0];
  });
}

Var pinball_rows(const Var& pred, const Tensor& target, const std::vector<double>& quantiles) {
  require_2d(pred, "pinball_rows");
  check_finite(pred, "pinball_rows");
  std::size_t n = pred.value().dims()[0], nc = pred.value().dims()[1];
  if (nc != quantiles.size()) throw shape_error("pinball_rows: channel count != |C|");
  if (target.size() != n) throw shape_error("pinball_rows: target length");
  Tensor out({n, 1});
  for (std::size_t r = 0; r < n; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
      double u = target[r] - pred.value()[r * nc + c];
      acc += u * (quantiles[c] - (u < 0.0 ? 1.0 : 0.0));
    }
    out[r] = acc / static_cast<double>(nc);
  }
  Tensor tgt = target;
  return make_op("pinball_rows", std::move(out), {pred},
                 [tgt, quantiles, nc](detail::Node& n2) {
                   auto& g = n2.inputs[0]->ensure_grad();
                   const auto& pv = n2.inputs[0]->value;
                   for (std::size_t r = 0; r < tgt.size(); ++r)
                     for (std::size_t c = 0; c < nc; ++c) {
                       double u = tgt[r] - pv[r * nc + c];
                       // left-limit convention at the kink: indicator(u<0)=0 when u==0
                       double factor = -(quantiles[c] - (u < 0.0 ? 1.0 : 0.0));
                       g[r * nc + c] += n2.grad[r] * factor / static_cast<double>(nc);
                     }
                 });
}

void backward(const Var& loss) {
  if (!loss.defined() || (!loss.node()->backward && loss.node()->inputs.empty()))
    throw usage_error("backward on a tensor with no tape");
  if (loss.value().size() != 1) throw usage_error("backward requires a scalar loss");

  // Reachable set, iterative DFS.
  std::vector<detail::Node*> stack{loss.node().get()};
  std::unordered_set<detail::Node*> seen{loss.node().get()};
  std::vector<detail::Node*> nodes;
  while (!stack.empty()) {
    detail::Node* n = stack.back();
    stack.pop_back();
    nodes.push_back(n);
    for (auto& in : n->inputs)
      if (seen.insert(in.get()).second) stack.push_back(in.get());
  }
  std::sort(nodes.begin(), nodes.end(),
            [](const detail::Node* a, const detail::Node* b) { return a->id > b->id; });

  loss.node()->ensure_grad()[0] = 1.0;
  for (detail::Node* n : nodes) {
    if (n->backward && n->grad.size() > 0) n->backward(*n);
  }
}

double gradient_check(const std::function<Var()>& f, const std::vector<Var>& params,
                      double h) {
  if (h <= 0) throw usage_error("gradient_check: h must be positive");
  Var loss = f();
  if (loss.value().size() != 1) throw usage_error("gradient_check: f must be scalar");
  for (const auto& p : params) p.zero_grad();
  backward(loss);
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p.grad());

  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& theta = params[pi].node()->value;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      double orig = theta[i];
      theta[i] = orig + h;
      double fp = f().value()[0];
      theta[i] = orig - h;
      double fm = f().value()[0];
      theta[i] = orig;
      double cd = (fp - fm) / (2.0 * h);
      double an = analytic[pi][i];
      double err = std::abs(an - cd) / std::max({std::abs(an), std::abs(cd), 1e-8});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace stimpute::ad
