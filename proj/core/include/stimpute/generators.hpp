#pragma once

#include <cstdint>

#include "stimpute/series.hpp"

namespace stimpute {

/// Rotating phase pattern with a singularity pinned at core_vertex:
/// s(i,t) = (1 + cos(theta_i - omega t + kappa d_i)) / 2, theta/d being the
/// azimuth and polar angle of node i about the core axis.
FieldSeries generate_spiral(const MeshGraph& mesh, double omega, std::size_t frames,
                            double sampling_rate, std::size_t core_vertex, double kappa = 2.0);

struct FhnParams {
  // oscillatory regime: the excitable regime (beta ~ 0.7) cannot sustain
  // re-entry on a 162-node sphere, the wavelength exceeds the domain
  double diffusion = 0.15;
  double eps = 0.08;
  double beta = 0.0;
  double gamma = 0.8;
  double dt = 0.01;
  // model-time units recorded per output frame
  double time_per_frame = 0.5;
  // cross-field stimulation
  double s1_cap = 0.6;        // cos threshold of the S1 cap
  double s2_time = 20.0;      // model time of the orthogonal S2 half-field
  double stim_amplitude = 2.0;
  double settle_time = 0.0;   // model time discarded before recording
  double init_jitter = 1e-3;  // sigma of the seeded initial perturbation
  bool reaction_enabled = true;
};

/// FitzHugh-Nagumo on the mesh graph with cross-field stimulation to spawn
/// re-entry. Explicit Euler; output is min-max normalised v. The seed rotates
/// the stimulus geometry and perturbs the initial state.
FieldSeries generate_fhn(const MeshGraph& mesh, const FhnParams& params, std::size_t frames,
                         double sampling_rate, std::uint64_t seed);

}  // namespace stimpute
