#include "stimpute/phase.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

#include "stimpute/errors.hpp"

namespace stimpute {

namespace {
double wrap_pi(double x) {
  while (x > M_PI) x -= 2.0 * M_PI;
  while (x <= -M_PI) x += 2.0 * M_PI;
  return x;
}
}  // namespace

PhaseResult hilbert_phase(const Tensor& values) {
  std::size_t n = values.dims()[0], t = values.dims()[1];
  if (t < 8) throw usage_error("hilbert_phase: need at least 8 frames");

  PhaseResult out;
  out.phase = Tensor({n, t});
  out.amplitude = Tensor({n, t});
  out.constant_node.assign(n, false);

  fftw_complex* buf = fftw_alloc_complex(t);
  fftw_plan fwd = fftw_plan_dft_1d(static_cast<int>(t), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_plan inv = fftw_plan_dft_1d(static_cast<int>(t), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);

  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (std::size_t f = 0; f < t; ++f) mean += values[i * t + f];
    mean /= static_cast<double>(t);
    double dev = 0.0;
    for (std::size_t f = 0; f < t; ++f) {
      buf[f][0] = values[i * t + f] - mean;
      buf[f][1] = 0.0;
      dev = std::max(dev, std::abs(buf[f][0]));
    }
    if (dev < 1e-14) {
      out.constant_node[i] = true;
      for (std::size_t f = 0; f < t; ++f) out.phase[i * t + f] = 0.0;
      continue;
    }
    fftw_execute(fwd);
    // zero negative frequencies, double positives, keep DC (and Nyquist when
    // the length is even)
    std::size_t half = t / 2;
    for (std::size_t f = 1; f < t; ++f) {
      bool positive = f < half || (t % 2 == 1 && f == half);
      bool nyquist = t % 2 == 0 && f == half;
      if (positive) {
        buf[f][0] *= 2.0;
        buf[f][1] *= 2.0;
      } else if (!nyquist) {
        buf[f][0] = 0.0;
        buf[f][1] = 0.0;
      }
    }
    fftw_execute(inv);
    // the inverse transform is unnormalised; the envelope needs the 1/T
    for (std::size_t f = 0; f < t; ++f) {
      out.phase[i * t + f] = std::atan2(buf[f][1], buf[f][0]);
      out.amplitude[i * t + f] =
          std::hypot(buf[f][0], buf[f][1]) / static_cast<double>(t);
    }
  }

  fftw_destroy_plan(fwd);
  fftw_destroy_plan(inv);
  fftw_free(buf);
  return out;
}

std::vector<PsEvent> detect_ps(const Tensor& phase, const MeshGraph& mesh) {
  std::size_t n = phase.dims()[0], t = phase.dims()[1];
  if (n != mesh.num_nodes()) throw shape_error("detect_ps: phase/mesh node count");
  std::vector<PsEvent> events;
  for (std::size_t f = 0; f < t; ++f) {
    for (std::size_t fc = 0; fc < mesh.faces.size(); ++fc) {
      auto [a, b, c] = std::tuple{mesh.faces[fc][0], mesh.faces[fc][1], mesh.faces[fc][2]};
      double pa = phase[a * t + f], pb = phase[b * t + f], pc = phase[c * t + f];
      double winding = wrap_pi(pb - pa) + wrap_pi(pc - pb) + wrap_pi(pa - pc);
      double charge = winding / (2.0 * M_PI);
      int q = 0;
      if (std::abs(charge - 1.0) < 0.1) q = 1;
      if (std::abs(charge + 1.0) < 0.1) q = -1;
      if (q == 0) continue;
      PsEvent e;
      e.frame = f;
      e.face = fc;
      e.charge = q;
      for (int k = 0; k < 3; ++k)
        e.centroid[static_cast<std::size_t>(k)] =
            (mesh.vertices[a][static_cast<std::size_t>(k)] +
             mesh.vertices[b][static_cast<std::size_t>(k)] +
             mesh.vertices[c][static_cast<std::size_t>(k)]) /
            3.0;
      events.push_back(e);
    }
  }
  return events;
}

TprResult ps_tpr(const std::vector<PsEvent>& predicted, const std::vector<PsEvent>& truth,
                 const MeshGraph& mesh, double sampling_rate, double time_tol,
                 std::size_t hop_tol, std::size_t rounds, std::uint64_t seed) {
  if (truth.empty()) throw usage_error("ps_tpr: empty truth track");
  long frame_tol = std::lround(time_tol * sampling_rate);

  std::vector<std::vector<std::size_t>> hops(mesh.num_nodes());
  std::vector<bool> need(mesh.num_nodes(), false);
  for (const auto& e : truth)
    for (std::size_t v : mesh.faces[e.face]) need[v] = true;
  for (std::size_t v = 0; v < mesh.num_nodes(); ++v)
    if (need[v]) hops[v] = graph_hops(mesh, v);

  std::vector<double> detected(truth.size(), 0.0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (const auto& p : predicted) {
      long df = static_cast<long>(p.frame) - static_cast<long>(truth[i].frame);
      if (std::labs(df) > frame_tol) continue;
      std::size_t best = static_cast<std::size_t>(-1);
      for (std::size_t va : mesh.faces[truth[i].face])
        for (std::size_t vb : mesh.faces[p.face]) best = std::min(best, hops[va][vb]);
      if (best <= hop_tol) {
        detected[i] = 1.0;
        break;
      }
    }
  }

  TprResult r;
  double sum = 0.0;
  for (double d : detected) sum += d;
  r.tpr = sum / static_cast<double>(detected.size());

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, detected.size() - 1);
  std::vector<double> boots(rounds);
  for (std::size_t b = 0; b < rounds; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < detected.size(); ++i) s += detected[pick(rng)];
    boots[b] = s / static_cast<double>(detected.size());
  }
  double mean = 0.0;
  for (double v : boots) mean += v;
  mean /= static_cast<double>(rounds);
  double var = 0.0;
  for (double v : boots) var += (v - mean) * (v - mean);
  r.boot_std = std::sqrt(var / static_cast<double>(rounds));
  return r;
}

DominantFreq dominant_frequency(const std::vector<double>& signal, double sampling_rate) {
  std::size_t t = signal.size();
  if (t < 16) throw usage_error("dominant_frequency: need at least 16 samples");
  fftw_complex* buf = fftw_alloc_complex(t);
  double mean = 0.0;
  for (double v : signal) mean += v;
  mean /= static_cast<double>(t);
  double dev = 0.0;
  for (std::size_t f = 0; f < t; ++f) {
    buf[f][0] = signal[f] - mean;
    buf[f][1] = 0.0;
    dev = std::max(dev, std::abs(buf[f][0]));
  }
  DominantFreq out;
  if (dev < 1e-14) {
    fftw_free(buf);
    out.degenerate = true;
    return out;
  }
  fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(t), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  std::size_t best = 1;
  double best_mag = -1.0;
  for (std::size_t f = 1; f <= t / 2; ++f) {
    double mag = buf[f][0] * buf[f][0] + buf[f][1] * buf[f][1];
    if (mag > best_mag) {
      best_mag = mag;
      best = f;
    }
  }
  fftw_destroy_plan(plan);
  fftw_free(buf);
  out.hz = static_cast<double>(best) * sampling_rate / static_cast<double>(t);
  return out;
}

}  // namespace stimpute
