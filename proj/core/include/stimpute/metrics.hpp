#pragma once

#include <cstdint>
#include <vector>

#include "stimpute/mesh.hpp"
#include "stimpute/tensor.hpp"

namespace stimpute {

struct MetricReport {
  double mae = 0.0;
  double mse = 0.0;
  double mre = 0.0;   // percent, sum|e| / sum|y|
  double mape = 0.0;  // percent, denominator floored at 1e-8
  std::size_t count = 0;
};

/// Errors averaged only where eval_mask = 1. Throws on an all-zero mask.
MetricReport masked_metrics(const Tensor& pred, const Tensor& truth, const Tensor& eval_mask);

/// Hop distance from every (node, frame) to the nearest observed entry on the
/// spatiotemporal graph: spatial edges within a frame, temporal edges between
/// consecutive frames of the same node.
Tensor imputation_horizon(const Tensor& mask, const MeshGraph& mesh);

struct PercentileCI {
  double point = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Empirical percentile with a bootstrap 95% interval (2.5/97.5 percentiles of
/// the resampled statistic).
PercentileCI bootstrap_percentile_ci(const std::vector<double>& samples, double percentile,
                                     std::size_t rounds, std::size_t resample_size,
                                     std::uint64_t seed);

}  // namespace stimpute
