#pragma once

#include <cstdint>
#include <vector>

#include "stimpute/model.hpp"
#include "stimpute/tensor.hpp"

namespace stimpute {

/// Missing entries at a node take that node's observed mean; nodes with no
/// observations fall back to the global observed mean. Observed entries pass
/// through untouched.
Tensor mean_impute(const Tensor& values, const Tensor& mask);

struct MfOptions {
  std::size_t rank = 10;
  std::size_t sweeps = 50;
  double ridge = 1e-3;
  std::uint64_t seed = 0;
};

struct MfResult {
  Tensor filled;                      // observed entries untouched, rest clipped to [0,1]
  std::vector<double> observed_rmse;  // per half-sweep
  std::vector<double> objective;      // squared error + ridge penalty, per half-sweep
};

/// Alternating ridge least squares on the observed entries.
MfResult mf_impute(const Tensor& values, const Tensor& mask, const MfOptions& opt);

/// Applies a trained model with an empty edge set and constant zero
/// embeddings: the univariate (Bi-)RNN baseline. Returns the median-channel
/// field with observed entries restored.
Tensor univariate_rnn_impute(const ModelState& state, const Tensor& values, const Tensor& mask,
                             std::size_t window);

}  // namespace stimpute
