#include "stimpute/baselines.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

#include "stimpute/errors.hpp"

namespace stimpute {

Tensor mean_impute(const Tensor& values, const Tensor& mask) {
  if (values.dims() != mask.dims()) throw shape_error("mean_impute: dims differ");
  std::size_t n = values.dims()[0], t = values.dims()[1];
  double global_sum = 0.0, global_cnt = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (mask[i] != 0.0) {
      global_sum += values[i];
      global_cnt += 1.0;
    }
  if (global_cnt == 0.0) throw usage_error("mean_impute: no observed entries");
  double global_mean = global_sum / global_cnt;

  Tensor out = values;
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0, cnt = 0.0;
    for (std::size_t f = 0; f < t; ++f)
      if (mask[i * t + f] != 0.0) {
        sum += values[i * t + f];
        cnt += 1.0;
      }
    double fill = cnt > 0.0 ? sum / cnt : global_mean;
    for (std::size_t f = 0; f < t; ++f)
      if (mask[i * t + f] == 0.0) out[i * t + f] = fill;
  }
  return out;
}

namespace {
double observed_rmse(const Tensor& values, const Tensor& mask, const Eigen::MatrixXd& u,
                     const Eigen::MatrixXd& vf) {
  std::size_t n = values.dims()[0], t = values.dims()[1];
  double acc = 0.0, cnt = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < t; ++f)
      if (mask[i * t + f] != 0.0) {
        double e = u.row(static_cast<Eigen::Index>(i))
                       .dot(vf.row(static_cast<Eigen::Index>(f))) -
                   values[i * t + f];
        acc += e * e;
        cnt += 1.0;
      }
  return std::sqrt(acc / cnt);
}

// ridge-regularised least squares for one side of the alternation
void solve_side(const Tensor& values, const Tensor& mask, const Eigen::MatrixXd& fixed,
                Eigen::MatrixXd& solved, bool rows_side, double ridge) {
  std::size_t n = values.dims()[0], t = values.dims()[1];
  Eigen::Index r = fixed.cols();
  std::size_t count = rows_side ? n : t;
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::MatrixXd ata = ridge * Eigen::MatrixXd::Identity(r, r);
    Eigen::VectorXd atb = Eigen::VectorXd::Zero(r);
    for (std::size_t f = 0; f < (rows_side ? t : n); ++f) {
      std::size_t flat = rows_side ? i * t + f : f * t + i;
      if (mask[flat] == 0.0) continue;
      Eigen::VectorXd a = fixed.row(static_cast<Eigen::Index>(f)).transpose();
      ata += a * a.transpose();
      atb += a * values[flat];
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(ata);
    for (int attempt = 0; attempt < 3 && ldlt.info() != Eigen::Success; ++attempt) {
      ata += 10.0 * ridge * Eigen::MatrixXd::Identity(r, r);
      ldlt.compute(ata);
    }
    if (ldlt.info() != Eigen::Success)
      throw numeric_error("mf_impute: singular normal equations");
    solved.row(static_cast<Eigen::Index>(i)) = ldlt.solve(atb).transpose();
  }
}
}  // namespace

MfResult mf_impute(const Tensor& values, const Tensor& mask, const MfOptions& opt) {
  if (values.dims() != mask.dims()) throw shape_error("mf_impute: dims differ");
  if (opt.rank == 0) throw config_error("mf_impute: rank must be positive");
  std::size_t n = values.dims()[0], t = values.dims()[1];
  bool any = false;
  for (double m : mask.data())
    if (m != 0.0) any = true;
  if (!any) throw usage_error("mf_impute: all entries missing");

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> g(0.0, 0.1);
  Eigen::MatrixXd u(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(opt.rank));
  Eigen::MatrixXd vf(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(opt.rank));
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    for (Eigen::Index j = 0; j < u.cols(); ++j) u(i, j) = g(rng);
  for (Eigen::Index i = 0; i < vf.rows(); ++i)
    for (Eigen::Index j = 0; j < vf.cols(); ++j) vf(i, j) = g(rng);

  MfResult res;
  auto record = [&] {
    double rmse = observed_rmse(values, mask, u, vf);
    double cnt = 0.0;
    for (double m : mask.data()) cnt += m != 0.0 ? 1.0 : 0.0;
    res.observed_rmse.push_back(rmse);
    res.objective.push_back(rmse * rmse * cnt +
                            opt.ridge * (u.squaredNorm() + vf.squaredNorm()));
  };
  for (std::size_t sweep = 0; sweep < opt.sweeps; ++sweep) {
    solve_side(values, mask, vf, u, true, opt.ridge);
    record();
    solve_side(values, mask, u, vf, false, opt.ridge);
    record();
  }

  res.filled = values;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < t; ++f)
      if (mask[i * t + f] == 0.0) {
        double v = u.row(static_cast<Eigen::Index>(i))
                       .dot(vf.row(static_cast<Eigen::Index>(f)));
        res.filled[i * t + f] = std::clamp(v, 0.0, 1.0);
      }
  return res;
}

Tensor univariate_rnn_impute(const ModelState& state, const Tensor& values, const Tensor& mask,
                             std::size_t window) {
  std::size_t n = values.dims()[0], t = values.dims()[1];
  GraphCtx g = GraphCtx::edgeless(n);
  PatientEmbeddings emb = PatientEmbeddings::zeros(n, state.hp);
  Tensor q = impute_series(state, values, mask, g, emb, window);
  std::size_t med = state.hp.median_channel();
  std::size_t nc = state.hp.quantiles.size();
  Tensor out({n, t});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < t; ++f)
      out[i * t + f] =
          mask[i * t + f] != 0.0 ? values[i * t + f] : q[(i * t + f) * nc + med];
  return out;
}

}  // namespace stimpute
