#pragma once

#include <cstdint>
#include <vector>

#include "stimpute/mesh.hpp"

namespace stimpute {

struct KMeansResult {
  std::vector<std::size_t> assignment;  // point -> cluster
  std::vector<Vec3> centroids;
  double inertia = 0.0;
};

/// Seeded k-means++ on 3D points. 300 iteration cap, 1e-6 centroid-shift
/// tolerance. An empty cluster is re-seeded at the farthest point from its
/// assigned centroid and assignment is re-run.
KMeansResult kmeans3d(const std::vector<Vec3>& points, std::size_t k, std::uint64_t seed);

}  // namespace stimpute
