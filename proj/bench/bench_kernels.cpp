// Serial reference vs OpenMP paths of the hot kernels.
//
//   chemrep_bench --benchmark_filter=Assembly

#include <benchmark/benchmark.h>

#include <random>

#include "chemrep/fem.hpp"
#include "chemrep/regularization.hpp"

using namespace chemrep;

namespace {

Exec exec_of(const benchmark::State& st) { return st.range(1) ? Exec::parallel : Exec::serial; }

void set_label(benchmark::State& st) { st.SetLabel(st.range(1) ? "openmp" : "serial"); }

std::vector<double> random_vec(std::size_t n) {
  std::mt19937 gen(42);
  std::uniform_real_distribution<double> d(0.1, 2.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(gen);
  return v;
}

void BM_WeightedStiffnessAssembly(benchmark::State& st) {
  const Mesh mesh = Mesh::build_structured(static_cast<int>(st.range(0)), static_cast<int>(st.range(0)), 2.0, 2.0);
  const Discretization disc(mesh, exec_of(st));
  const auto c = random_vec(static_cast<std::size_t>(mesh.num_triangles()) * kQuadraturePoints);
  for (auto _ : st) benchmark::DoNotOptimize(disc.weighted_grad_grad(c));
  set_label(st);
}

void BM_TensorStiffnessAssembly(benchmark::State& st) {
  const Mesh mesh = Mesh::build_structured(static_cast<int>(st.range(0)), static_cast<int>(st.range(0)), 2.0, 2.0);
  const Discretization disc(mesh, exec_of(st));
  const auto u = random_vec(static_cast<std::size_t>(mesh.num_vertices()));
  const RegParams p{1e-3, 1.0};
  for (auto _ : st) {
    const auto lam = build_lambda_field(mesh, u, p, exec_of(st));
    benchmark::DoNotOptimize(disc.tensor_stiffness(lam));
  }
  set_label(st);
}

void BM_CouplingAssembly(benchmark::State& st) {
  const Mesh mesh = Mesh::build_structured(static_cast<int>(st.range(0)), static_cast<int>(st.range(0)), 2.0, 2.0);
  const Discretization disc(mesh, exec_of(st));
  const auto c = random_vec(static_cast<std::size_t>(mesh.num_triangles()) * kQuadraturePoints);
  for (auto _ : st) benchmark::DoNotOptimize(disc.weighted_vector_grad(c));
  set_label(st);
}

void BM_Matvec(benchmark::State& st) {
  const Mesh mesh = Mesh::build_structured(static_cast<int>(st.range(0)), static_cast<int>(st.range(0)), 2.0, 2.0);
  const Discretization disc(mesh, Exec::serial);
  const auto x = random_vec(static_cast<std::size_t>(disc.n()));
  std::vector<double> y(x.size());
  for (auto _ : st) {
    disc.stiffness().multiply(x, y, exec_of(st));
    benchmark::DoNotOptimize(y.data());
  }
  set_label(st);
}

void sizes(benchmark::internal::Benchmark* b) {
  for (int n : {40, 80, 160})
    for (int par : {0, 1}) b->Args({n, par});
  b->Unit(benchmark::kMicrosecond);
}

}  // namespace

BENCHMARK(BM_WeightedStiffnessAssembly)->Apply(sizes);
BENCHMARK(BM_TensorStiffnessAssembly)->Apply(sizes);
BENCHMARK(BM_CouplingAssembly)->Apply(sizes);
BENCHMARK(BM_Matvec)->Apply(sizes);

BENCHMARK_MAIN();
