#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "stimpute/series.hpp"

namespace stimpute {

struct CohortSplit {
  std::vector<std::size_t> train, validation, test;
  std::vector<std::size_t> cluster;               // patient -> cluster label
  std::vector<std::vector<double>> entropy;       // per patient, per node
};

struct SplitConfig {
  std::array<double, 3> fractions = {0.7, 0.1, 0.2};
  double sigma = 0.0;       // 0 -> median pairwise KS distance
  double threshold = 0.3;   // kernel-weight cutoff for the similarity graph
  std::size_t entropy_bins = 64;
  std::uint64_t seed = 0;
};

/// Entropy-CDF similarity -> thresholded RBF kernel graph -> Laplacian
/// eigenmap -> k-means with elbow-selected k -> per-cluster proportional
/// sampling. Clusters smaller than 3 are merged into their nearest cluster.
CohortSplit stratified_split(const std::vector<FieldSeries>& patients, const SplitConfig& cfg);

}  // namespace stimpute
