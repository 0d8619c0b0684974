#include "stimpute/split.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "stimpute/kmeans.hpp"

namespace stimpute {

namespace {
std::size_t elbow_k(const std::vector<Vec3>& pts, std::size_t kmax, std::uint64_t seed) {
  std::vector<double> inertia(kmax + 2, 0.0);
  for (std::size_t k = 1; k <= kmax + 1 && k <= pts.size(); ++k)
    inertia[k] = kmeans3d(pts, k, seed + k).inertia;
  std::size_t best = 2;
  double best_dd = -1.0;
  for (std::size_t k = 2; k <= kmax; ++k) {
    if (k + 1 > pts.size()) break;
    double dd = inertia[k - 1] - 2.0 * inertia[k] + inertia[k + 1];
    if (dd > best_dd) {
      best_dd = dd;
      best = k;
    }
  }
  return std::min(best, pts.size());
}

// largest-remainder allocation with a floor of 1 per split when n >= 3
std::array<std::size_t, 3> allocate(std::size_t n, const std::array<double, 3>& f) {
  std::array<std::size_t, 3> out{};
  std::array<double, 3> exact{};
  std::size_t used = 0;
  for (int i = 0; i < 3; ++i) {
    exact[i] = f[i] * static_cast<double>(n);
    out[i] = static_cast<std::size_t>(std::floor(exact[i]));
    used += out[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return exact[a] - std::floor(exact[a]) > exact[b] - std::floor(exact[b]);
  });
  for (int i = 0; used < n; ++i) {
    ++out[order[static_cast<std::size_t>(i) % 3]];
    ++used;
  }
  if (n >= 3)
    for (int i = 0; i < 3; ++i)
      if (out[i] == 0) {
        int donor = 0;
        for (int j = 1; j < 3; ++j)
          if (out[j] > out[donor]) donor = j;
        --out[donor];
        ++out[i];
      }
  return out;
}
}  // namespace

CohortSplit stratified_split(const std::vector<FieldSeries>& patients, const SplitConfig& cfg) {
  std::size_t p = patients.size();
  if (p < 5) throw usage_error("stratified_split: need at least 5 patients");

  CohortSplit split;
  split.entropy.resize(p);
  for (std::size_t a = 0; a < p; ++a) {
    const auto& s = patients[a];
    std::size_t t = s.num_frames();
    std::vector<double> row(t);
    for (std::size_t i = 0; i < s.num_nodes(); ++i) {
      for (std::size_t j = 0; j < t; ++j) row[j] = s.values[i * t + j];
      split.entropy[a].push_back(shannon_entropy(row, cfg.entropy_bins));
    }
  }

  Eigen::MatrixXd ks = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p),
                                             static_cast<Eigen::Index>(p));
  std::vector<double> offdiag;
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = a + 1; b < p; ++b) {
      double d = ks_distance(split.entropy[a], split.entropy[b]);
      ks(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = d;
      ks(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = d;
      offdiag.push_back(d);
    }

  double maxks = *std::max_element(offdiag.begin(), offdiag.end());
  if (maxks < 1e-12) {
    // indistinguishable cohort: one cluster
    split.cluster.assign(p, 0);
  } else {
    double sigma = cfg.sigma;
    if (sigma <= 0.0) {
      std::vector<double> sorted = offdiag;
      std::sort(sorted.begin(), sorted.end());
      sigma = sorted[sorted.size() / 2];
      if (sigma <= 0.0) sigma = maxks;
    }
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(ks.rows(), ks.cols());
    for (Eigen::Index a = 0; a < w.rows(); ++a)
      for (Eigen::Index b = 0; b < w.cols(); ++b) {
        if (a == b) continue;
        double v = std::exp(-ks(a, b) * ks(a, b) / (2.0 * sigma * sigma));
        if (v > cfg.threshold) w(a, b) = v;
      }
    Eigen::VectorXd deg = w.rowwise().sum().cwiseMax(1e-12);
    Eigen::VectorXd dinv = deg.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(w.rows(), w.cols()) -
                          dinv.asDiagonal() * w * dinv.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
    // Diffusion-map embedding on the three smallest eigenpairs. The trivial
    // direction is kept: a disconnected graph has a multi-dimensional
    // nullspace whose basis the solver may rotate arbitrarily, so dropping
    // one column can discard the component separation. Scaling by the squared
    // walk eigenvalue suppresses within-component directions instead.
    std::vector<Vec3> pts(p, {0, 0, 0});
    for (int c = 0; c < 3 && c < static_cast<int>(p); ++c) {
      double mu = std::max(0.0, 1.0 - eig.eigenvalues()(c));
      for (std::size_t i = 0; i < p; ++i)
        pts[i][static_cast<std::size_t>(c)] =
            mu * mu * eig.eigenvectors()(static_cast<Eigen::Index>(i), c);
    }
    std::size_t kmax = std::min<std::size_t>(8, p - 1);
    std::size_t k = elbow_k(pts, kmax, cfg.seed);
    auto km = kmeans3d(pts, k, cfg.seed);
    split.cluster = km.assignment;

    // merge clusters below the stratification minimum into their nearest
    bool changed = true;
    while (changed) {
      changed = false;
      std::vector<std::size_t> count(k, 0);
      for (std::size_t c : split.cluster) ++count[c];
      for (std::size_t c = 0; c < k; ++c) {
        if (count[c] == 0 || count[c] >= 3) continue;
        double best = 1e300;
        std::size_t tgt = c;
        for (std::size_t o = 0; o < k; ++o) {
          if (o == c || count[o] == 0) continue;
          double d = 0.0;
          for (int ax = 0; ax < 3; ++ax) {
            double dd = km.centroids[c][static_cast<std::size_t>(ax)] -
                        km.centroids[o][static_cast<std::size_t>(ax)];
            d += dd * dd;
          }
          if (d < best) {
            best = d;
            tgt = o;
          }
        }
        if (tgt != c) {
          for (auto& lab : split.cluster)
            if (lab == c) lab = tgt;
          changed = true;
        }
      }
    }
  }

  // relabel clusters densely
  std::vector<std::size_t> labels = split.cluster;
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  for (auto& c : split.cluster)
    c = static_cast<std::size_t>(std::find(labels.begin(), labels.end(), c) - labels.begin());

  std::mt19937_64 rng(cfg.seed);
  for (std::size_t c = 0; c < labels.size(); ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < p; ++i)
      if (split.cluster[i] == c) members.push_back(i);
    std::shuffle(members.begin(), members.end(), rng);
    auto counts = allocate(members.size(), cfg.fractions);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < counts[0]; ++i) split.train.push_back(members[pos++]);
    for (std::size_t i = 0; i < counts[1]; ++i) split.validation.push_back(members[pos++]);
    for (std::size_t i = 0; i < counts[2]; ++i) split.test.push_back(members[pos++]);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

}  // namespace stimpute
