#pragma once

#include <cstdint>
#include <vector>

#include "stimpute/mesh.hpp"
#include "stimpute/tensor.hpp"

namespace stimpute {

struct PhaseResult {
  Tensor phase;      // N x T in (-pi, pi]
  Tensor amplitude;  // N x T analytic envelope; phase is meaningless where ~0
  std::vector<bool> constant_node;
};

/// Instantaneous phase via the analytic signal (DFT method) of the
/// mean-removed per-node series. Constant nodes get phase 0 and a flag.
PhaseResult hilbert_phase(const Tensor& values);

struct PsEvent {
  std::size_t frame = 0;
  std::size_t face = 0;
  int charge = 0;  // +1 or -1
  Vec3 centroid{};
};

/// Topological charge of the wrapped phase differences around every face;
/// faces whose winding lands within 0.1 of +-1 are reported.
std::vector<PsEvent> detect_ps(const Tensor& phase, const MeshGraph& mesh);

struct TprResult {
  double tpr = 0.0;
  double boot_std = 0.0;
};

/// A truth event counts as detected when any predicted event lies within
/// round(time_tol * rate) frames and hop_tol graph hops. Std from bootstrap
/// resamples over the truth events.
TprResult ps_tpr(const std::vector<PsEvent>& predicted, const std::vector<PsEvent>& truth,
                 const MeshGraph& mesh, double sampling_rate, double time_tol = 0.1,
                 std::size_t hop_tol = 4, std::size_t rounds = 1000, std::uint64_t seed = 0);

struct DominantFreq {
  double hz = 0.0;
  bool degenerate = false;
};

/// Frequency of the largest non-DC spectral magnitude.
DominantFreq dominant_frequency(const std::vector<double>& signal, double sampling_rate);

}  // namespace stimpute
