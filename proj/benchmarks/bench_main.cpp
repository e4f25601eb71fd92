#include "liebwqed/dynamics.hpp"
#include "liebwqed/geometry.hpp"
#include "liebwqed/hamiltonian.hpp"
#include "liebwqed/lattice.hpp"

#include <benchmark/benchmark.h>

using namespace wqed;

namespace {

LatticeSpec lattice(int n, double u) {
  LatticeSpec s;
  s.num_cells_x = n;
  s.num_cells_y = n;
  s.interaction = u;
  return s;
}

struct TwoBody {
  explicit TwoBody(int n)
      : spec(lattice(n, 0.1)),
        table(spec),
        h1(single_excitation_hamiltonian(WaveguideNetwork(table), spec)),
        basis(table.size(), Statistics::softcore),
        h2(two_excitation_hamiltonian(h1, spec, basis)),
        psi(initial_state(InitialStateKind::softcore_pair, table, basis)) {}
  LatticeSpec spec;
  SiteTable table;
  DenseOperator h1;
  TwoExcitationBasis basis;
  SparseOperator h2;
  Eigen::VectorXcd psi;
};

void BM_BuildH2(benchmark::State& state) {
  const auto spec = lattice(static_cast<int>(state.range(0)), 0.1);
  const SiteTable t(spec);
  const auto h1 = single_excitation_hamiltonian(WaveguideNetwork(t), spec);
  const TwoExcitationBasis basis(t.size(), Statistics::softcore);
  for (auto _ : state) benchmark::DoNotOptimize(two_excitation_hamiltonian(h1, spec, basis));
}
BENCHMARK(BM_BuildH2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Matvec(benchmark::State& state) {
  const TwoBody m(static_cast<int>(state.range(0)));
  Eigen::VectorXcd y(m.psi.size());
  for (auto _ : state) {
    y.noalias() = m.h2.matrix * m.psi;
    benchmark::DoNotOptimize(y.data());
  }
  state.counters["nnz"] = static_cast<double>(m.h2.matrix.nonZeros());
}
BENCHMARK(BM_Matvec)->Arg(4)->Arg(8)->Unit(benchmark::kMicrosecond);

void BM_KrylovAdvance(benchmark::State& state) {
  const TwoBody m(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    KrylovPropagator prop(m.h2.matrix, PropagationOptions{});
    Eigen::VectorXcd psi = m.psi;
    prop.advance(psi, 10.0);
    benchmark::DoNotOptimize(psi.data());
  }
}
BENCHMARK(BM_KrylovAdvance)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_QGTGeneric(benchmark::State& state) {
  const auto spec = lattice(1, 0.0);
  double kx = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(qgt_generic(kx, 0.7, 1, spec));
    kx += 1e-9;
  }
}
BENCHMARK(BM_QGTGeneric);

void BM_QGTIntegral(benchmark::State& state) {
  QGTIntegrationOptions o;
  o.grid_size = static_cast<int>(state.range(0));
  o.drift_tolerance = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(integrate_qgt(o, lattice(1, 0.0)));
}
BENCHMARK(BM_QGTIntegral)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
