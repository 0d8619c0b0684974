#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "stimpute/generators.hpp"
#include "stimpute/phase.hpp"
#include "stimpute/series.hpp"
#include "stimpute/split.hpp"

using namespace stimpute;

namespace {
MeshGraph single_node_mesh() {
  MeshGraph m;
  m.vertices = {{0, 0, 1}};
  m.adjacency = {{}};
  return m;
}

FieldSeries make_series(const Tensor& values, double rate) {
  FieldSeries s;
  s.values = values;
  s.mask = Tensor(values.dims(), 1.0);
  s.sampling_rate = rate;
  return s;
}

double brute_ks(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> grid = a;
  grid.insert(grid.end(), b.begin(), b.end());
  double d = 0.0;
  for (double x : grid) {
    double fa = 0, fb = 0;
    for (double v : a) fa += (v <= x) ? 1.0 : 0.0;
    for (double v : b) fb += (v <= x) ? 1.0 : 0.0;
    d = std::max(d, std::abs(fa / static_cast<double>(a.size()) -
                             fb / static_cast<double>(b.size())));
  }
  return d;
}
}  // namespace

TEST_CASE("spiral value at the core and periodicity") {
  MeshGraph m = build_icosphere(1);
  double omega = 2.0 * M_PI;  // 1 Hz rotation
  FieldSeries s = generate_spiral(m, omega, 30, 10.0, 3);
  CHECK(s.normalised);
  CHECK_FALSE(s.degenerate);
  // at the core vertex the polar angle and azimuth vanish: s(core, 0) = 1
  CHECK(s.values.at(3, 0) == doctest::Approx(1.0).epsilon(1e-12));
  for (double v : s.values.data()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  // 1 Hz at 10 fps: period is 10 frames for every node
  for (std::size_t i = 0; i < m.num_nodes(); ++i)
    for (std::size_t t = 0; t + 10 < 30; ++t)
      CHECK(s.values.at(i, t) == doctest::Approx(s.values.at(i, t + 10)).epsilon(1e-9));
  CHECK_THROWS_AS(generate_spiral(m, omega, 10, 10.0, 99), usage_error);
}

TEST_CASE("spiral with zero rotation is flagged degenerate") {
  MeshGraph m = build_icosphere(0);
  FieldSeries s = generate_spiral(m, 0.0, 5, 10.0, 0);
  CHECK(s.degenerate);
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t t = 1; t < 5; ++t) CHECK(s.values.at(i, t) == s.values.at(i, 0));
}

TEST_CASE("unstimulated single node stays at the resting fixed point") {
  MeshGraph m = single_node_mesh();
  FhnParams p;
  p.beta = 0.7;
  p.gamma = 0.8;
  p.s1_cap = 1.5;     // no S1 stimulus
  p.s2_time = 1e9;    // no S2 stimulus
  p.init_jitter = 0;
  FieldSeries s = generate_fhn(m, p, 20, 2.0, 4);
  CHECK(s.degenerate);  // constant field cannot be min-max normalised
  // independent bisection of v - v^3/3 - (v + beta)/gamma = 0
  auto g = [&](double v) { return v - v * v * v / 3.0 - (v + p.beta) / p.gamma; };
  double lo = -2.0, hi = 0.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (g(lo) * g(mid) <= 0.0)
      hi = mid;
    else
      lo = mid;
  }
  double vstar = 0.5 * (lo + hi);
  for (double v : s.values.data()) CHECK(std::abs(v - vstar) < 1e-6);
}

TEST_CASE("pure diffusion conserves the spatial mean") {
  MeshGraph m = build_icosphere(1);
  FhnParams p;
  p.reaction_enabled = false;
  p.s2_time = 1e9;
  p.time_per_frame = 0.05;
  FieldSeries s = generate_fhn(m, p, 40, 20.0, 9);
  REQUIRE_FALSE(s.degenerate);
  std::size_t n = m.num_nodes(), t = s.num_frames();
  std::vector<double> mean(t, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < t; ++j) mean[j] += s.values.at(i, j);
  // normalisation is affine, so a conserved raw mean stays constant
  for (std::size_t j = 1; j < t; ++j)
    CHECK(mean[j] / static_cast<double>(n) ==
          doctest::Approx(mean[0] / static_cast<double>(n)).epsilon(1e-9));
}

TEST_CASE("fhn cross-field stimulation sustains rotors") {
  MeshGraph m = build_icosphere(2);
  FieldSeries s = generate_fhn(m, FhnParams{}, 300, 70.0, 1);
  REQUIRE_FALSE(s.degenerate);
  PhaseResult ph = hilbert_phase(s.values);
  auto events = detect_ps(ph.phase, m);
  // singularities present in at least 95% of the last 150 frames (> 2 s)
  std::set<std::size_t> frames_with_ps;
  for (const auto& e : events)
    if (e.frame >= 150) frames_with_ps.insert(e.frame);
  CHECK(frames_with_ps.size() >= 143);
}

TEST_CASE("fhn output is deterministic per seed and distinct across seeds") {
  MeshGraph m = build_icosphere(1);
  FhnParams p;
  p.time_per_frame = 0.25;
  FieldSeries a = generate_fhn(m, p, 60, 70.0, 5);
  FieldSeries b = generate_fhn(m, p, 60, 70.0, 5);
  REQUIRE(a.values.size() == b.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(a.values[i] == b.values[i]);
  FieldSeries c = generate_fhn(m, p, 60, 70.0, 6);
  double diff = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) diff += std::abs(a.values[i] - c.values[i]);
  CHECK(diff / static_cast<double>(a.values.size()) > 1e-3);
}

TEST_CASE("fhn rejects an unstable step size") {
  MeshGraph m = build_icosphere(1);
  FhnParams p;
  p.dt = 1.0;
  CHECK_THROWS_AS(generate_fhn(m, p, 10, 10.0, 0), numeric_error);
}

TEST_CASE("temporal resample identity and guards") {
  Tensor vals({2, 50});
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = std::sin(0.2 * static_cast<double>(i));
  FieldSeries s = make_series(vals, 100.0);
  FieldSeries same = temporal_resample(s, 100.0);
  for (std::size_t i = 0; i < vals.size(); ++i) CHECK(same.values[i] == vals[i]);
  CHECK_THROWS_AS(temporal_resample(s, 200.0), usage_error);
}

TEST_CASE("temporal resample passes a slow tone through") {
  const std::size_t t = 500;
  Tensor vals({1, t});
  for (std::size_t j = 0; j < t; ++j)
    vals[j] = std::sin(2.0 * M_PI * 2.0 * static_cast<double>(j) / 100.0);
  FieldSeries out = temporal_resample(make_series(vals, 100.0), 25.0);
  CHECK(out.sampling_rate == 25.0);
  REQUIRE(out.num_frames() == 125);
  for (std::size_t j = 20; j < 105; ++j) {
    double expect = std::sin(2.0 * M_PI * 2.0 * static_cast<double>(j) / 25.0);
    CHECK(out.values[j] == doctest::Approx(expect).epsilon(0.05).scale(1.0));
  }
}

TEST_CASE("temporal resample suppresses tones above the target band") {
  const std::size_t t = 500;
  Tensor vals({1, t});
  for (std::size_t j = 0; j < t; ++j)
    vals[j] = std::sin(2.0 * M_PI * 45.0 * static_cast<double>(j) / 100.0);
  FieldSeries out = temporal_resample(make_series(vals, 100.0), 25.0);
  for (std::size_t j = 20; j < 105; ++j) CHECK(std::abs(out.values[j]) < 0.05);
}

TEST_CASE("temporal resample interpolates non-integer ratios") {
  Tensor vals({1, 100});
  for (std::size_t j = 0; j < 100; ++j)
    vals[j] = std::sin(2.0 * M_PI * 1.0 * static_cast<double>(j) / 100.0);
  FieldSeries out = temporal_resample(make_series(vals, 100.0), 40.0);
  CHECK(out.num_frames() == static_cast<std::size_t>(std::floor(99.0 / 2.5)) + 1);
  for (double v : out.values.data()) CHECK(std::abs(v) < 1.1);
}

TEST_CASE("min-max normalisation hand case and round trip") {
  FieldSeries s = make_series(Tensor({1, 3}, {2.0, 4.0, 6.0}), 1.0);
  FieldSeries n = min_max_normalize(s);
  CHECK(n.values[0] == 0.0);
  CHECK(n.values[1] == 0.5);
  CHECK(n.values[2] == 1.0);
  CHECK(n.norm_min == 2.0);
  CHECK(n.norm_max == 6.0);
  CHECK(n.normalised);

  FieldSeries again = min_max_normalize(n);
  for (std::size_t i = 0; i < 3; ++i) CHECK(again.values[i] == n.values[i]);

  FieldSeries back = denormalize(n);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(back.values[i] == doctest::Approx(s.values[i]).epsilon(1e-12));
  CHECK_FALSE(back.normalised);
}

TEST_CASE("normalisation guards") {
  FieldSeries flat = make_series(Tensor({2, 2}, 3.0), 1.0);
  CHECK_THROWS_AS(min_max_normalize(flat), numeric_error);
  FieldSeries raw = make_series(Tensor({1, 2}, {0.0, 1.0}), 1.0);
  CHECK_THROWS_AS(denormalize(raw), usage_error);
}

TEST_CASE("entropy oracles") {
  CHECK(shannon_entropy(std::vector<double>(100, 0.5)) == 0.0);

  // ten samples in each of the 64 bins: exactly 6 bits
  std::vector<double> uniform;
  for (std::size_t b = 0; b < 64; ++b)
    for (int r = 0; r < 10; ++r) uniform.push_back((static_cast<double>(b) + 0.5) / 64.0);
  CHECK(shannon_entropy(uniform) == doctest::Approx(6.0).epsilon(1e-12));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> random(5000);
  for (auto& v : random) v = u(rng);
  CHECK(shannon_entropy(random) <= 6.0);
  CHECK(shannon_entropy(random) > 5.5);
  CHECK_THROWS_AS(shannon_entropy({0.5}), usage_error);
}

TEST_CASE("ks distance oracles") {
  CHECK(ks_distance({0.1, 0.4, 0.9}, {0.1, 0.4, 0.9}) == 0.0);
  CHECK(ks_distance({0.0}, {1.0}) == 1.0);
  CHECK(ks_distance({0.0, 1.0}, {0.5}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(ks_distance({}, {0.5}), usage_error);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> a(17), b(23);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = 0.3 + 0.5 * u(rng);
    CHECK(ks_distance(a, b) == doctest::Approx(brute_ks(a, b)).epsilon(1e-12));
  }
}

namespace {
FieldSeries cohort_patient(bool broad, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Tensor vals({32, 256});
  for (auto& v : vals.data()) v = broad ? u(rng) : 0.45 + 0.1 * u(rng);
  return make_series(vals, 10.0);
}
}  // namespace

TEST_CASE("indistinguishable cohort collapses to one cluster") {
  std::vector<FieldSeries> patients;
  for (int i = 0; i < 10; ++i) patients.push_back(cohort_patient(true, 42));  // identical
  CohortSplit split = stratified_split(patients, SplitConfig{});
  for (std::size_t c : split.cluster) CHECK(c == 0);
  CHECK(split.train.size() == 7);
  CHECK(split.validation.size() == 1);
  CHECK(split.test.size() == 2);
}

TEST_CASE("two entropy regimes give two clusters and a partition") {
  std::vector<FieldSeries> patients;
  for (int i = 0; i < 8; ++i) patients.push_back(cohort_patient(true, 100 + static_cast<std::uint64_t>(i)));
  for (int i = 0; i < 4; ++i) patients.push_back(cohort_patient(false, 200 + static_cast<std::uint64_t>(i)));
  CohortSplit split = stratified_split(patients, SplitConfig{});

  std::set<std::size_t> labels(split.cluster.begin(), split.cluster.end());
  CHECK(labels.size() == 2);
  // members of the same regime share a label
  for (int i = 1; i < 8; ++i) CHECK(split.cluster[static_cast<std::size_t>(i)] == split.cluster[0]);
  for (int i = 9; i < 12; ++i) CHECK(split.cluster[static_cast<std::size_t>(i)] == split.cluster[8]);
  CHECK(split.cluster[0] != split.cluster[8]);

  std::vector<std::size_t> all;
  all.insert(all.end(), split.train.begin(), split.train.end());
  all.insert(all.end(), split.validation.begin(), split.validation.end());
  all.insert(all.end(), split.test.begin(), split.test.end());
  std::sort(all.begin(), all.end());
  REQUIRE(all.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) CHECK(all[i] == i);

  // each cluster contributes at least one training patient
  std::set<std::size_t> train_labels;
  for (std::size_t i : split.train) train_labels.insert(split.cluster[i]);
  CHECK(train_labels.size() == 2);
}

TEST_CASE("split rejects tiny cohorts") {
  std::vector<FieldSeries> patients(4, cohort_patient(true, 1));
  CHECK_THROWS_AS(stratified_split(patients, SplitConfig{}), usage_error);
}
