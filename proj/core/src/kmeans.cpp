#include "stimpute/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace stimpute {

namespace {
double sqdist(const Vec3& a, const Vec3& b) {
  double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}
}  // namespace

KMeansResult kmeans3d(const std::vector<Vec3>& points, std::size_t k, std::uint64_t seed) {
  if (k == 0 || k > points.size()) throw usage_error("kmeans: bad k");
  std::mt19937_64 rng(seed);
  std::size_t n = points.size();

  // k-means++ seeding
  std::vector<Vec3> centroids;
  centroids.reserve(k);
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  centroids.push_back(points[first(rng)]);
  std::vector<double> d2(n);
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::max();
      for (const auto& c : centroids) best = std::min(best, sqdist(points[i], c));
      d2[i] = best;
      total += best;
    }
    if (total == 0.0) {
      // all remaining points coincide with centroids; pick any
      centroids.push_back(points[first(rng)]);
      continue;
    }
    std::uniform_real_distribution<double> u(0.0, total);
    double r = u(rng), acc = 0.0;
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      acc += d2[i];
      if (acc >= r) {
        pick = i;
        break;
      }
    }
    centroids.push_back(points[pick]);
  }

  KMeansResult res;
  res.assignment.assign(n, 0);
  for (int iter = 0; iter < 300; ++iter) {
    // assignment
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::max();
      std::size_t arg = 0;
      for (std::size_t c = 0; c < k; ++c) {
        double d = sqdist(points[i], centroids[c]);
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      res.assignment[i] = arg;
    }
    // empty-cluster repair: re-seed at the farthest point from its centroid
    for (std::size_t c = 0; c < k; ++c) {
      bool empty = std::find(res.assignment.begin(), res.assignment.end(), c) ==
                   res.assignment.end();
      if (!empty) continue;
      double far = -1.0;
      std::size_t pick = 0;
      for (std::size_t i = 0; i < n; ++i) {
        double d = sqdist(points[i], centroids[res.assignment[i]]);
        if (d > far) {
          far = d;
          pick = i;
        }
      }
      centroids[c] = points[pick];
      res.assignment[pick] = c;
    }
    // update
    std::vector<Vec3> next(k, {0, 0, 0});
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t c = res.assignment[i];
      for (int a = 0; a < 3; ++a) next[c][a] += points[i][a];
      ++count[c];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] == 0) continue;
      for (int a = 0; a < 3; ++a) next[c][a] /= static_cast<double>(count[c]);
      shift = std::max(shift, std::sqrt(sqdist(next[c], centroids[c])));
      centroids[c] = next[c];
    }
    if (shift < 1e-6) break;
  }

  res.centroids = centroids;
  res.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) res.inertia += sqdist(points[i], centroids[res.assignment[i]]);
  return res;
}

}  // namespace stimpute
