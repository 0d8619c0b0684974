#include "stimpute/align.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "stimpute/errors.hpp"

namespace stimpute {

Vec3 RigidTransform::apply(const Vec3& p) const {
  Vec3 out{};
  for (std::size_t i = 0; i < 3; ++i) {
    out[i] = translation[i];
    for (std::size_t j = 0; j < 3; ++j) out[i] += rotation[i][j] * p[j];
  }
  return out;
}

namespace {
Eigen::Vector3d to_eig(const Vec3& v) { return {v[0], v[1], v[2]}; }

void check_not_collinear(const std::vector<Vec3>& pts, const char* which) {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : pts) mean += to_eig(p);
  mean /= static_cast<double>(pts.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : pts) {
    Eigen::Vector3d d = to_eig(p) - mean;
    cov += d * d.transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov);
  if (svd.singularValues()(1) < 1e-10 * std::max(svd.singularValues()(0), 1e-300))
    throw numeric_error(std::string("icp_align: collinear ") + which + " cloud");
}
}  // namespace

RigidTransform icp_align(const std::vector<Vec3>& source, const std::vector<Vec3>& target,
                         std::size_t max_iter, double tol) {
  if (source.size() < 3 || target.size() < 3)
    throw usage_error("icp_align: need at least 3 points per cloud");
  check_not_collinear(source, "source");
  check_not_collinear(target, "target");

  Eigen::Vector3d sc = Eigen::Vector3d::Zero(), tc = Eigen::Vector3d::Zero();
  for (const auto& p : source) sc += to_eig(p);
  sc /= static_cast<double>(source.size());
  for (const auto& p : target) tc += to_eig(p);
  tc /= static_cast<double>(target.size());

  std::vector<Eigen::Vector3d> src, tgt;
  for (const auto& p : source) src.push_back(to_eig(p) - sc);
  for (const auto& p : target) tgt.push_back(to_eig(p) - tc);

  Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
  double prev_rms = 1e300;
  double rms = prev_rms;
  for (std::size_t it = 0; it < max_iter; ++it) {
    // correspondences under the current rotation
    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    double acc = 0.0;
    for (const auto& p : src) {
      Eigen::Vector3d moved = rot * p;
      double best = 1e300;
      Eigen::Vector3d match = tgt[0];
      for (const auto& q : tgt) {
        double d = (moved - q).squaredNorm();
        if (d < best) {
          best = d;
          match = q;
        }
      }
      acc += best;
      h += p * match.transpose();
    }
    rms = std::sqrt(acc / static_cast<double>(src.size()));
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0 ? -1.0 : 1.0;
    rot = svd.matrixV() * d * svd.matrixU().transpose();
    if (std::abs(prev_rms - rms) < tol) break;
    prev_rms = rms;
  }

  RigidTransform out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      out.rotation[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = rot(i, j);
  Eigen::Vector3d trans = tc - rot * sc;
  for (int i = 0; i < 3; ++i) out.translation[static_cast<std::size_t>(i)] = trans(i);
  out.rms = rms;
  return out;
}

Tensor knn_project(const std::vector<Vec3>& source_pts, const std::vector<Vec3>& target_pts,
                   const Tensor& field, std::size_t k) {
  if (k == 0 || k > source_pts.size()) throw usage_error("knn_project: bad neighbour count");
  if (field.dims()[0] != source_pts.size()) throw shape_error("knn_project: field/source size");
  std::size_t t = field.dims()[1];
  Tensor out({target_pts.size(), t});

  std::vector<std::size_t> idx(source_pts.size());
  for (std::size_t ti = 0; ti < target_pts.size(); ++ti) {
    std::iota(idx.begin(), idx.end(), 0);
    auto dist2 = [&](std::size_t s) {
      double d = 0.0;
      for (std::size_t c = 0; c < 3; ++c) {
        double e = source_pts[s][c] - target_pts[ti][c];
        d += e * e;
      }
      return d;
    };
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                        double da = dist2(a), db = dist2(b);
                        return da != db ? da < db : a < b;
                      });
    for (std::size_t f = 0; f < t; ++f) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) acc += field[idx[j] * t + f];
      out[ti * t + f] = acc / static_cast<double>(k);
    }
  }
  return out;
}

CrossCorrResult sliding_cross_corr(const Tensor& a, const Tensor& b, double sampling_rate,
                                   double window_seconds, double stride_seconds) {
  if (a.dims()[0] != b.dims()[0]) throw shape_error("sliding_cross_corr: node counts differ");
  std::size_t n = a.dims()[0];
  std::size_t wlen = static_cast<std::size_t>(std::llround(window_seconds * sampling_rate));
  std::size_t stride =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(stride_seconds * sampling_rate)));
  if (wlen < 2 || wlen > a.dims()[1] || wlen > b.dims()[1])
    throw usage_error("sliding_cross_corr: window does not fit both recordings");

  auto starts = [&](std::size_t total) {
    std::vector<std::size_t> s;
    for (std::size_t x = 0; x + wlen <= total; x += stride) s.push_back(x);
    return s;
  };
  auto sa = starts(a.dims()[1]);
  auto sb = starts(b.dims()[1]);

  auto window_vec = [&](const Tensor& m, std::size_t start, std::vector<double>& out) {
    std::size_t t = m.dims()[1];
    out.resize(n * wlen);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t f = 0; f < wlen; ++f) out[i * wlen + f] = m[i * t + start + f];
  };

  CrossCorrResult res;
  res.corr = Tensor({sa.size(), sb.size()});
  std::vector<double> va, vb;
  for (std::size_t ia = 0; ia < sa.size(); ++ia) {
    window_vec(a, sa[ia], va);
    double ma = std::accumulate(va.begin(), va.end(), 0.0) / static_cast<double>(va.size());
    double da = 0.0;
    for (double& v : va) {
      v -= ma;
      da += v * v;
    }
    for (std::size_t ib = 0; ib < sb.size(); ++ib) {
      window_vec(b, sb[ib], vb);
      double mb = std::accumulate(vb.begin(), vb.end(), 0.0) / static_cast<double>(vb.size());
      double db = 0.0, cross = 0.0;
      for (std::size_t x = 0; x < vb.size(); ++x) {
        double d = vb[x] - mb;
        db += d * d;
        cross += va[x] * d;
      }
      double r;
      if (da < 1e-14 || db < 1e-14) {
        r = 0.0;
        ++res.zero_variance_pairs;
      } else {
        r = cross / std::sqrt(da * db);
      }
      res.corr[ia * sb.size() + ib] = r;
      res.flat.push_back(r);
    }
  }
  return res;
}

Tensor spatiotemporal_shuffle(const Tensor& field, std::uint64_t seed) {
  Tensor out = field;
  std::mt19937_64 rng(seed);
  std::shuffle(out.data().begin(), out.data().end(), rng);
  return out;
}

}  // namespace stimpute
