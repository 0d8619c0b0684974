#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "stimpute/mesh.hpp"
#include "stimpute/tensor.hpp"

namespace stimpute {

struct RigidTransform {
  std::array<std::array<double, 3>, 3> rotation{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  Vec3 translation{0, 0, 0};
  double rms = 0.0;

  Vec3 apply(const Vec3& p) const;
};

/// Iterative closest point: nearest-neighbour correspondence plus the optimal
/// rotation from an orthogonal decomposition, repeated until the RMS change
/// drops below tol. Throws on degenerate (collinear) clouds.
RigidTransform icp_align(const std::vector<Vec3>& source, const std::vector<Vec3>& target,
                         std::size_t max_iter = 50, double tol = 1e-6);

/// Target node value = mean of the k nearest source nodes, per frame.
/// field is |source| x T; output |target| x T.
Tensor knn_project(const std::vector<Vec3>& source_pts, const std::vector<Vec3>& target_pts,
                   const Tensor& field, std::size_t k = 5);

struct CrossCorrResult {
  Tensor corr;               // windows(A) x windows(B) Pearson matrix
  std::vector<double> flat;  // row-major flattening for percentile analysis
  std::size_t zero_variance_pairs = 0;
};

/// Pearson correlation between vectorised windows of the two fields for every
/// window-start pair. Zero-variance windows correlate as 0 (counted).
CrossCorrResult sliding_cross_corr(const Tensor& a, const Tensor& b, double sampling_rate,
                                   double window_seconds, double stride_seconds = 0.1);

/// Seeded permutation of all (node, frame) entries; the shuffled-baseline
/// input for the correlation harness.
Tensor spatiotemporal_shuffle(const Tensor& field, std::uint64_t seed);

}  // namespace stimpute
