#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "stimpute/mesh.hpp"
#include "stimpute/tensor.hpp"

namespace stimpute {

/// Per-patient node x time signal with observation mask and normalisation
/// metadata. Values are in [0,1] once normalised.
struct FieldSeries {
  Tensor values;  // N x T
  Tensor mask;    // N x T binary; all ones when fully observed
  double sampling_rate = 0.0;
  double norm_min = 0.0;
  double norm_max = 1.0;
  bool normalised = false;
  bool degenerate = false;  // e.g. static generator output

  std::size_t num_nodes() const { return values.dims()[0]; }
  std::size_t num_frames() const { return values.dims()[1]; }
};

/// Min-max over all nodes and times; stores (min, max) for inversion.
FieldSeries min_max_normalize(const FieldSeries& s);
FieldSeries denormalize(const FieldSeries& s);

/// Zero-phase 4th-order low-pass at targetRate/2 (forward-backward biquads),
/// then decimation. Falls back to linear interpolation when the rate ratio is
/// not an integer.
FieldSeries temporal_resample(const FieldSeries& s, double target_rate);

/// Histogram entropy in bits over [0,1] with equal-width bins.
double shannon_entropy(const std::vector<double>& signal, std::size_t bins = 64);

/// Sup-norm distance between the empirical CDFs of two sample sets.
double ks_distance(std::vector<double> a, std::vector<double> b);

struct ResampleResult {
  MeshGraph mesh;
  Tensor values;  // k x T cluster means
  std::vector<std::size_t> assignment;
};

/// k-means spatial coarsening: coarse nodes are cluster centroids, signals are
/// member means, coarse edges link clusters that share any fine edge.
ResampleResult spatial_resample(const MeshGraph& fine, const Tensor& fine_values, std::size_t k,
                                std::uint64_t seed);

}  // namespace stimpute
