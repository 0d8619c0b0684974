#include <benchmark/benchmark.h>

#include <random>

#include "stimpute/generators.hpp"
#include "stimpute/model.hpp"
#include "stimpute/phase.hpp"
#include "stimpute/trainer.hpp"

using namespace stimpute;

namespace {
Tensor random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t({r, c});
  for (double& v : t.data()) v = u(rng);
  return t;
}

HyperParams bench_hp() {
  HyperParams hp;
  hp.d = 16;
  hp.q = 8;
  hp.r = 4;
  hp.hidden = 64;
  return hp;
}
}  // namespace

static void BM_MatmulBackward(benchmark::State& state) {
  auto n = static_cast<std::size_t>(state.range(0));
  ad::Var a(random_matrix(n, n, 1), true);
  ad::Var b(random_matrix(n, n, 2), true);
  for (auto _ : state) {
    ad::Var y = ad::sum(ad::matmul(a, b));
    ad::backward(y);
    benchmark::DoNotOptimize(a.grad());
    a.zero_grad();
    b.zero_grad();
  }
}
BENCHMARK(BM_MatmulBackward)->Arg(32)->Arg(128)->Arg(256);

static void BM_WindowForward(benchmark::State& state) {
  MeshGraph mesh = build_icosphere(2);
  GraphCtx g = GraphCtx::from_mesh(mesh);
  HyperParams hp = bench_hp();
  ModelState st = ModelState::init(hp, 3);
  PatientEmbeddings emb = PatientEmbeddings::init(mesh.num_nodes(), hp, 4);
  std::size_t w = static_cast<std::size_t>(state.range(0));
  Tensor x = random_matrix(mesh.num_nodes(), w, 5);
  Tensor m({mesh.num_nodes(), w}, 1.0);
  for (auto _ : state) {
    ForwardResult out = model_forward(st, x, m, g, emb);
    benchmark::DoNotOptimize(out.y.front().value()[0]);
  }
}
BENCHMARK(BM_WindowForward)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

static void BM_ImputeSeries(benchmark::State& state) {
  MeshGraph mesh = build_icosphere(2);
  GraphCtx g = GraphCtx::from_mesh(mesh);
  HyperParams hp = bench_hp();
  ModelState st = ModelState::init(hp, 3);
  PatientEmbeddings emb = PatientEmbeddings::init(mesh.num_nodes(), hp, 4);
  std::size_t t = static_cast<std::size_t>(state.range(0));
  Tensor x = random_matrix(mesh.num_nodes(), t, 5);
  Tensor m = evaluation_mask(mesh, t, 70.0, 7);
  for (auto _ : state) {
    Tensor q = impute_series(st, x, m, g, emb, 20);
    benchmark::DoNotOptimize(q[0]);
  }
}
BENCHMARK(BM_ImputeSeries)->Arg(140)->Arg(700)->Unit(benchmark::kMillisecond);

static void BM_HilbertPhase(benchmark::State& state) {
  MeshGraph mesh = build_icosphere(2);
  FieldSeries s = generate_spiral(mesh, 2.0 * M_PI * 5.0, 700, 70.0, 0);
  for (auto _ : state) {
    PhaseResult p = hilbert_phase(s.values);
    benchmark::DoNotOptimize(p.phase[0]);
  }
}
BENCHMARK(BM_HilbertPhase)->Unit(benchmark::kMillisecond);

static void BM_DetectPs(benchmark::State& state) {
  MeshGraph mesh = build_icosphere(2);
  FieldSeries s = generate_spiral(mesh, 2.0 * M_PI * 5.0, 700, 70.0, 0);
  PhaseResult p = hilbert_phase(s.values);
  for (auto _ : state) {
    auto events = detect_ps(p.phase, mesh);
    benchmark::DoNotOptimize(events.size());
  }
}
BENCHMARK(BM_DetectPs)->Unit(benchmark::kMillisecond);

static void BM_Fhn(benchmark::State& state) {
  MeshGraph mesh = build_icosphere(2);
  for (auto _ : state) {
    FieldSeries s = generate_fhn(mesh, FhnParams{}, 140, 70.0, 9);
    benchmark::DoNotOptimize(s.values[0]);
  }
}
BENCHMARK(BM_Fhn)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
