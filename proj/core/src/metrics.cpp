#include "stimpute/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

#include "stimpute/errors.hpp"

namespace stimpute {

MetricReport masked_metrics(const Tensor& pred, const Tensor& truth, const Tensor& eval_mask) {
  if (pred.dims() != truth.dims() || truth.dims() != eval_mask.dims())
    throw shape_error("masked_metrics: dims differ");
  MetricReport r;
  double abs_sum = 0, sq_sum = 0, y_sum = 0, ape_sum = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (eval_mask[i] == 0.0) continue;
    double e = pred[i] - truth[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
    y_sum += std::abs(truth[i]);
    ape_sum += std::abs(e) / std::max(std::abs(truth[i]), 1e-8);
    ++r.count;
  }
  if (r.count == 0) throw usage_error("masked_metrics: empty evaluation mask");
  double n = static_cast<double>(r.count);
  r.mae = abs_sum / n;
  r.mse = sq_sum / n;
  r.mre = y_sum > 0.0 ? 100.0 * abs_sum / y_sum : 0.0;
  r.mape = 100.0 * ape_sum / n;
  return r;
}

Tensor imputation_horizon(const Tensor& mask, const MeshGraph& mesh) {
  std::size_t n = mask.dims()[0], t = mask.dims()[1];
  if (n != mesh.num_nodes()) throw shape_error("imputation_horizon: mask/mesh node count");
  Tensor dist({n, t}, -1.0);
  std::deque<std::pair<std::size_t, std::size_t>> queue;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < t; ++f)
      if (mask[i * t + f] != 0.0) {
        dist[i * t + f] = 0.0;
        queue.emplace_back(i, f);
      }
  if (queue.empty()) throw usage_error("imputation_horizon: no observed entries");
  while (!queue.empty()) {
    auto [i, f] = queue.front();
    queue.pop_front();
    double d = dist[i * t + f] + 1.0;
    auto visit = [&](std::size_t j, std::size_t g) {
      if (dist[j * t + g] < 0.0) {
        dist[j * t + g] = d;
        queue.emplace_back(j, g);
      }
    };
    for (std::size_t j : mesh.adjacency[i]) visit(j, f);
    if (f > 0) visit(i, f - 1);
    if (f + 1 < t) visit(i, f + 1);
  }
  return dist;
}

namespace {
double percentile_of(std::vector<double>& sorted, double p) {
  // linear interpolation between closest ranks
  double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
  std::size_t lo = static_cast<std::size_t>(std::floor(rank));
  std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  double frac = rank - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}
}  // namespace

PercentileCI bootstrap_percentile_ci(const std::vector<double>& samples, double percentile,
                                     std::size_t rounds, std::size_t resample_size,
                                     std::uint64_t seed) {
  if (samples.empty()) throw usage_error("bootstrap_percentile_ci: no samples");
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  PercentileCI ci;
  ci.point = percentile_of(sorted, percentile);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  std::vector<double> stats(rounds);
  std::vector<double> draw(resample_size);
  for (std::size_t r = 0; r < rounds; ++r) {
    for (auto& v : draw) v = samples[pick(rng)];
    std::sort(draw.begin(), draw.end());
    stats[r] = percentile_of(draw, percentile);
  }
  std::sort(stats.begin(), stats.end());
  ci.lo = percentile_of(stats, 2.5);
  ci.hi = percentile_of(stats, 97.5);
  return ci;
}

}  // namespace stimpute
