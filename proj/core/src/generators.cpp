#include "stimpute/generators.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace stimpute {

namespace {
double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross3(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 unit(const Vec3& v) {
  double n = std::sqrt(dot3(v, v));
  return {v[0] / n, v[1] / n, v[2] / n};
}

Vec3 any_orthogonal(const Vec3& axis) {
  Vec3 ref = std::abs(axis[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  Vec3 e = cross3(axis, ref);
  return unit(e);
}
}  // namespace

FieldSeries generate_spiral(const MeshGraph& mesh, double omega, std::size_t frames,
                            double sampling_rate, std::size_t core_vertex, double kappa) {
  if (core_vertex >= mesh.num_nodes()) throw usage_error("generate_spiral: bad core vertex");
  std::size_t n = mesh.num_nodes();
  Vec3 axis = unit(mesh.vertices[core_vertex]);
  Vec3 e1 = any_orthogonal(axis);
  Vec3 e2 = cross3(axis, e1);

  FieldSeries out;
  out.values = Tensor({n, frames});
  out.mask = Tensor({n, frames}, 1.0);
  out.sampling_rate = sampling_rate;
  out.normalised = true;
  out.degenerate = (omega == 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    Vec3 v = unit(mesh.vertices[i]);
    double d = std::acos(std::clamp(dot3(v, axis), -1.0, 1.0));
    double theta = std::atan2(dot3(v, e2), dot3(v, e1));
    for (std::size_t t = 0; t < frames; ++t) {
      double sec = static_cast<double>(t) / sampling_rate;
      out.values[i * frames + t] = (1.0 + std::cos(theta - omega * sec + kappa * d)) / 2.0;
    }
  }
  return out;
}

FieldSeries generate_fhn(const MeshGraph& mesh, const FhnParams& p, std::size_t frames,
                         double sampling_rate, std::uint64_t seed) {
  std::size_t n = mesh.num_nodes();
  // crude Gershgorin bound on the Laplacian spectrum for the explicit step
  std::size_t max_deg = 0;
  for (const auto& nb : mesh.adjacency) max_deg = std::max(max_deg, nb.size());
  if (p.dt * p.diffusion * 2.0 * static_cast<double>(max_deg) >= 1.0)
    throw numeric_error("fhn: dt too large for explicit stability");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uangle(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> uz(-1.0, 1.0);
  double az = uz(rng), aphi = uangle(rng);
  double as = std::sqrt(std::max(0.0, 1.0 - az * az));
  Vec3 s1_axis = {as * std::cos(aphi), as * std::sin(aphi), az};
  Vec3 s2_axis = any_orthogonal(s1_axis);

  // resting fixed point via Newton on v - v^3/3 - (v+beta)/gamma = 0
  double v0 = -1.2;
  for (int it = 0; it < 50; ++it) {
    double f = v0 - v0 * v0 * v0 / 3.0 - (v0 + p.beta) / p.gamma;
    double fp = 1.0 - v0 * v0 - 1.0 / p.gamma;
    v0 -= f / fp;
  }
  double w0 = (v0 + p.beta) / p.gamma;

  std::vector<double> v(n, v0), w(n, w0), lap(n);
  if (p.init_jitter > 0.0) {
    std::normal_distribution<double> jitter(0.0, p.init_jitter);
    for (double& x : v) x += jitter(rng);
  }

  // S1: depolarise a cap around the s1 axis
  for (std::size_t i = 0; i < n; ++i)
    if (dot3(unit(mesh.vertices[i]), s1_axis) > p.s1_cap) v[i] = p.stim_amplitude;

  FieldSeries out;
  out.values = Tensor({n, frames});
  out.mask = Tensor({n, frames}, 1.0);
  out.sampling_rate = sampling_rate;

  std::size_t steps_per_frame =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(p.time_per_frame / p.dt)));
  std::size_t settle_steps = static_cast<std::size_t>(std::llround(p.settle_time / p.dt));
  std::size_t total_steps = settle_steps + frames * steps_per_frame;
  std::size_t s2_step = static_cast<std::size_t>(std::llround(p.s2_time / p.dt));
  bool s2_done = false;

  std::size_t frame = 0;
  for (std::size_t step = 0; step < total_steps; ++step) {
    if (!s2_done && step >= s2_step) {
      // S2: orthogonal half-field, avoiding still-refractory tissue
      for (std::size_t i = 0; i < n; ++i)
        if (dot3(unit(mesh.vertices[i]), s2_axis) > 0.0 && v[i] < 0.0)
          v[i] = p.stim_amplitude;
      s2_done = true;
    }
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j : mesh.adjacency[i]) acc += v[j] - v[i];
      lap[i] = acc;
    }
    for (std::size_t i = 0; i < n; ++i) {
      double dv = p.diffusion * lap[i];
      double dw = 0.0;
      if (p.reaction_enabled) {
        dv += v[i] - v[i] * v[i] * v[i] / 3.0 - w[i];
        dw = p.eps * (v[i] + p.beta - p.gamma * w[i]);
      }
      v[i] += p.dt * dv;
      w[i] += p.dt * dw;
      if (std::abs(v[i]) > 10.0)
        throw numeric_error("fhn: instability at frame " + std::to_string(frame));
    }
    if (step >= settle_steps && (step - settle_steps) % steps_per_frame == 0) {
      for (std::size_t i = 0; i < n; ++i) out.values[i * frames + frame] = v[i];
      ++frame;
      if (frame == frames) break;
    }
  }
  // pad if the loop exited before the final record point
  for (; frame < frames; ++frame)
    for (std::size_t i = 0; i < n; ++i) out.values[i * frames + frame] = v[i];

  try {
    return min_max_normalize(out);
  } catch (const numeric_error&) {
    out.degenerate = true;  // constant field (e.g. settled equilibrium)
    return out;
  }
}

}  // namespace stimpute
