#include "stimpute/series.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "stimpute/kmeans.hpp"

namespace stimpute {

FieldSeries min_max_normalize(const FieldSeries& s) {
  auto [mn_it, mx_it] = std::minmax_element(s.values.data().begin(), s.values.data().end());
  double mn = *mn_it, mx = *mx_it;
  if (!(mx > mn)) throw numeric_error("normalise: constant field");
  FieldSeries out = s;
  for (double& v : out.values.data()) v = (v - mn) / (mx - mn);
  out.norm_min = mn;
  out.norm_max = mx;
  out.normalised = true;
  return out;
}

FieldSeries denormalize(const FieldSeries& s) {
  if (!s.normalised) throw usage_error("denormalize: series is not normalised");
  FieldSeries out = s;
  for (double& v : out.values.data()) v = v * (s.norm_max - s.norm_min) + s.norm_min;
  out.normalised = false;
  return out;
}

namespace {
struct Biquad {
  double b0, b1, b2, a1, a2;
};

// 4th-order Butterworth low-pass as two bilinear-transform biquads.
std::array<Biquad, 2> butter4_lowpass(double cutoff_hz, double fs) {
  const double quality[2] = {0.54119610014619690, 1.3065629648763764};
  std::array<Biquad, 2> sections{};
  double k = std::tan(M_PI * cutoff_hz / fs);
  for (int s = 0; s < 2; ++s) {
    double q = quality[s];
    double norm = 1.0 / (1.0 + k / q + k * k);
    sections[s].b0 = k * k * norm;
    sections[s].b1 = 2.0 * sections[s].b0;
    sections[s].b2 = sections[s].b0;
    sections[s].a1 = 2.0 * (k * k - 1.0) * norm;
    sections[s].a2 = (1.0 - k / q + k * k) * norm;
  }
  return sections;
}

void filter_inplace(std::vector<double>& x, const Biquad& s) {
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (double& v : x) {
    double y = s.b0 * v + s.b1 * x1 + s.b2 * x2 - s.a1 * y1 - s.a2 * y2;
    x2 = x1;
    x1 = v;
    y2 = y1;
    y1 = y;
    v = y;
  }
}

void filtfilt(std::vector<double>& x, const std::array<Biquad, 2>& sections) {
  for (const auto& s : sections) filter_inplace(x, s);
  std::reverse(x.begin(), x.end());
  for (const auto& s : sections) filter_inplace(x, s);
  std::reverse(x.begin(), x.end());
}
}  // namespace

FieldSeries temporal_resample(const FieldSeries& s, double target_rate) {
  if (target_rate > s.sampling_rate) throw usage_error("temporal_resample: upsampling unsupported");
  if (target_rate == s.sampling_rate) return s;

  std::size_t n = s.num_nodes(), t = s.num_frames();
  auto sections = butter4_lowpass(target_rate / 2.0, s.sampling_rate);
  double ratio = s.sampling_rate / target_rate;
  bool integer_ratio = std::abs(ratio - std::round(ratio)) < 1e-9;
  std::size_t out_t = integer_ratio
                          ? (t + static_cast<std::size_t>(std::round(ratio)) - 1) /
                                static_cast<std::size_t>(std::round(ratio))
                          : static_cast<std::size_t>(std::floor((t - 1) / ratio)) + 1;

  FieldSeries out;
  out.values = Tensor({n, out_t});
  out.mask = Tensor({n, out_t});
  out.sampling_rate = target_rate;
  out.norm_min = s.norm_min;
  out.norm_max = s.norm_max;
  out.normalised = s.normalised;
  out.degenerate = s.degenerate;

  std::vector<double> row(t);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < t; ++j) row[j] = s.values[i * t + j];
    filtfilt(row, sections);
    for (std::size_t j = 0; j < out_t; ++j) {
      double pos = j * ratio;
      if (integer_ratio) {
        std::size_t src = static_cast<std::size_t>(std::llround(pos));
        out.values[i * out_t + j] = row[src];
        out.mask[i * out_t + j] = s.mask[i * t + src];
      } else {
        std::size_t lo = static_cast<std::size_t>(std::floor(pos));
        std::size_t hi = std::min(lo + 1, t - 1);
        double frac = pos - static_cast<double>(lo);
        out.values[i * out_t + j] = row[lo] * (1.0 - frac) + row[hi] * frac;
        out.mask[i * out_t + j] = s.mask[i * t + lo];
      }
    }
  }
  return out;
}

double shannon_entropy(const std::vector<double>& signal, std::size_t bins) {
  if (signal.size() < 2) throw usage_error("entropy: need at least 2 samples");
  std::vector<std::size_t> hist(bins, 0);
  for (double v : signal) {
    double clamped = std::clamp(v, 0.0, 1.0);
    std::size_t b = std::min(bins - 1, static_cast<std::size_t>(clamped * static_cast<double>(bins)));
    ++hist[b];
  }
  double h = 0.0;
  double total = static_cast<double>(signal.size());
  for (std::size_t c : hist) {
    if (c == 0) continue;
    double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw usage_error("ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t ia = 0, ib = 0;
  while (ia < a.size() && ib < b.size()) {
    double x = std::min(a[ia], b[ib]);
    while (ia < a.size() && a[ia] == x) ++ia;
    while (ib < b.size() && b[ib] == x) ++ib;
    double fa = static_cast<double>(ia) / static_cast<double>(a.size());
    double fb = static_cast<double>(ib) / static_cast<double>(b.size());
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

ResampleResult spatial_resample(const MeshGraph& fine, const Tensor& fine_values, std::size_t k,
                                std::uint64_t seed) {
  if (fine_values.dims()[0] != fine.num_nodes())
    throw shape_error("spatial_resample: series/mesh node mismatch");
  if (k > fine.num_nodes()) throw usage_error("spatial_resample: k > node count");
  std::size_t t = fine_values.dims()[1];

  auto km = kmeans3d(fine.vertices, k, seed);
  ResampleResult res;
  res.assignment = km.assignment;
  res.mesh.vertices = km.centroids;
  res.mesh.adjacency.assign(k, {});

  std::vector<std::size_t> count(k, 0);
  res.values = Tensor({k, t});
  for (std::size_t i = 0; i < fine.num_nodes(); ++i) {
    std::size_t c = km.assignment[i];
    ++count[c];
    for (std::size_t j = 0; j < t; ++j) res.values[c * t + j] += fine_values[i * t + j];
  }
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < t; ++j) res.values[c * t + j] /= static_cast<double>(count[c]);

  // clusters are adjacent iff any fine edge crosses them
  std::vector<std::set<std::size_t>> nb(k);
  for (std::size_t i = 0; i < fine.num_nodes(); ++i)
    for (std::size_t j : fine.adjacency[i]) {
      std::size_t a = km.assignment[i], b = km.assignment[j];
      if (a != b) {
        nb[a].insert(b);
        nb[b].insert(a);
      }
    }
  for (std::size_t c = 0; c < k; ++c) res.mesh.adjacency[c].assign(nb[c].begin(), nb[c].end());
  return res;
}

}  // namespace stimpute
