#include "liebwqed/dynamics.hpp"
#include "liebwqed/errors.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace wqed;

namespace {

SparseOperator sparse_from(const Eigen::MatrixXcd& m) {
  SparseOperator op;
  op.matrix = m.sparseView();
  op.basis = BasisTag::two_excitation_softcore;
  return op;
}

struct Lattice {
  explicit Lattice(const LatticeSpec& s, Statistics stats = Statistics::softcore)
      : spec(s),
        table(s),
        h1(single_excitation_hamiltonian(WaveguideNetwork(table), s)),
        basis(table.size(), stats),
        h2(two_excitation_hamiltonian(h1, s.interaction, basis)) {}
  LatticeSpec spec;
  SiteTable table;
  DenseOperator h1;
  TwoExcitationBasis basis;
  SparseOperator h2;
};

LatticeSpec with_u(int nx, int ny, double u) {
  auto s = fixture::chiral_spec(nx, ny);
  s.interaction = u;
  return s;
}

} // namespace

TEST(Krylov, TwoLevelRabiOscillation) {
  Eigen::MatrixXcd h(2, 2);
  h << 0.0, 0.8, 0.8, 0.0;
  const auto op = sparse_from(h);
  PropagationOptions o;
  o.krylov_dim = 2;
  KrylovPropagator prop(op.matrix, o);
  Eigen::VectorXcd psi(2);
  psi << 1.0, 0.0;
  prop.advance(psi, 2.5);
  EXPECT_NEAR(std::abs(psi(0) - std::cos(2.0)), 0.0, 1e-9);
  EXPECT_NEAR(std::abs(psi(1) - std::complex<double>(0.0, -std::sin(2.0))), 0.0, 1e-9);
}

TEST(Krylov, PureDecay) {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(3, 3);
  h(0, 0) = {0.0, -0.5};
  h(1, 1) = {1.0, -0.25};
  h(2, 2) = {-2.0, 0.0};
  const auto op = sparse_from(h);
  KrylovPropagator prop(op.matrix, PropagationOptions{});
  Eigen::VectorXcd psi = Eigen::VectorXcd::Ones(3);
  prop.advance(psi, 4.0);
  EXPECT_NEAR(std::abs(psi(0)), std::exp(-2.0), 1e-10);
  EXPECT_NEAR(std::abs(psi(1)), std::exp(-1.0), 1e-10);
  EXPECT_NEAR(std::abs(psi(2)), 1.0, 1e-10);
}

TEST(Krylov, AgreesWithDenseOnSmallLattice) {
  const Lattice l(with_u(3, 3, 0.4));
  const auto psi0 = initial_state(InitialStateKind::softcore_pair, l.table, l.basis);
  const std::vector<double> times{0.0, 0.3, 1.0, 5.0, 20.0, 100.0};
  PropagationOptions kry;
  PropagationOptions dense;
  dense.method = PropagationMethod::dense_eig;
  const auto a = propagate(l.h2, psi0, times, kry);
  const auto b = propagate(l.h2, psi0, times, dense);
  for (std::size_t i = 0; i < times.size(); ++i) EXPECT_LT((a.states[i] - b.states[i]).norm(), 1e-8) << times[i];
}

TEST(Krylov, SemigroupProperty) {
  const Lattice l(with_u(3, 2, 1.3));
  std::mt19937 rng(4);
  std::normal_distribution<double> g;
  Eigen::VectorXcd psi0(l.basis.dimension());
  for (Eigen::Index i = 0; i < psi0.size(); ++i) psi0(i) = {g(rng), g(rng)};
  psi0.normalize();
  PropagationOptions o;
  o.tol = 1e-12;
  Eigen::VectorXcd once = psi0;
  KrylovPropagator(l.h2.matrix, o).advance(once, 7.0);
  Eigen::VectorXcd twice = psi0;
  KrylovPropagator p2(l.h2.matrix, o);
  p2.advance(twice, 2.5);
  p2.advance(twice, 4.5);
  EXPECT_LT((once - twice).norm(), 1e-9);
}

TEST(Krylov, ToleranceConsistency) {
  const Lattice l(with_u(3, 3, 0.2));
  const auto psi0 = initial_state(InitialStateKind::softcore_pair, l.table, l.basis);
  const FlatbandPairProjector proj(flatband_kernel(l.h1, l.table), l.basis);
  ObservableSetup setup;
  setup.projector = &proj;
  const auto times = log_time_grid(1e3, 10);
  PropagationOptions loose;
  loose.tol = 1e-8;
  PropagationOptions tight;
  tight.tol = 1e-10;
  const auto a = evolve(l.h2, psi0, times, loose, l.basis, setup);
  const auto b = evolve(l.h2, psi0, times, tight, l.basis, setup);
  for (std::size_t i = 0; i < times.size(); ++i) {
    EXPECT_NEAR(a.fidelity[i], b.fidelity[i], 1e-7) << times[i];
    EXPECT_NEAR(a.norm[i], b.norm[i], 1e-7) << times[i];
    EXPECT_NEAR(a.flatband_projection[i], b.flatband_projection[i], 1e-7) << times[i];
  }
  EXPECT_GE(b.stats.steps, a.stats.steps);
}

TEST(Dynamics, StationaryClsPairWithoutInteraction) {
  const Lattice l(with_u(4, 4, 0.0));
  const auto psi0 = initial_state(InitialStateKind::softcore_pair, l.table, l.basis);
  const FlatbandPairProjector proj(flatband_kernel(l.h1, l.table), l.basis);
  ObservableSetup setup;
  setup.projector = &proj;
  const auto trace = evolve(l.h2, psi0, log_time_grid(1e3, 5), PropagationOptions{}, l.basis, setup);
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    EXPECT_NEAR(trace.fidelity[i], 1.0, 1e-10);
    EXPECT_NEAR(trace.norm[i], 1.0, 1e-10);
    EXPECT_NEAR(trace.flatband_projection[i], 1.0, 1e-10);
  }
}

TEST(Dynamics, ObservablesOnTheFlyMatchStoredStates) {
  const Lattice l(with_u(3, 3, 0.5));
  const auto psi0 = initial_state(InitialStateKind::softcore_pair, l.table, l.basis);
  const FlatbandPairProjector proj(flatband_kernel(l.h1, l.table), l.basis);
  const auto cls = classify_flatband_eigenstates(proj, 0.5);
  ObservableSetup setup{&proj, &cls, NormConvention::inner_product, true};
  const std::vector<double> times{0.0, 1.0, 10.0, 40.0};
  auto stored = propagate(l.h2, psi0, times, PropagationOptions{});
  observables(stored, psi0, l.basis, setup);
  const auto fly = evolve(l.h2, psi0, times, PropagationOptions{}, l.basis, setup);
  for (std::size_t i = 0; i < times.size(); ++i) {
    EXPECT_NEAR(stored.fidelity[i], fly.fidelity[i], 1e-12);
    EXPECT_NEAR(stored.flatband_projection[i], fly.flatband_projection[i], 1e-12);
    EXPECT_NEAR(stored.dark_weight[i] + stored.dispersive_weight[i], stored.flatband_projection[i], 1e-10);
    double total = 0.0;
    for (const double n : fly.populations[i]) total += n;
    EXPECT_NEAR(total, 2.0 * fly.norm[i], 1e-10);
  }
  EXPECT_TRUE(fly.norm_monotone());
  EXPECT_LE(fly.norm.back(), 1.0);
}

TEST(Dynamics, SquaredNormConvention) {
  const Lattice l(with_u(3, 2, 0.5));
  const auto psi0 = initial_state(InitialStateKind::softcore_pair, l.table, l.basis);
  ObservableSetup a;
  ObservableSetup b;
  b.norm_convention = NormConvention::squared;
  const std::vector<double> times{0.0, 3.0};
  const auto ta = evolve(l.h2, psi0, times, PropagationOptions{}, l.basis, a);
  const auto tb = evolve(l.h2, psi0, times, PropagationOptions{}, l.basis, b);
  EXPECT_NEAR(tb.norm[1], ta.norm[1] * ta.norm[1], 1e-14);
}

TEST(Dynamics, HardcoreStateEmbedsIntoSoftcoreBasis) {
  const auto spec = fixture::chiral_spec(4, 3);
  const SiteTable t(spec);
  const TwoExcitationBasis hard(t.size(), Statistics::hardcore);
  const TwoExcitationBasis soft(t.size(), Statistics::softcore);
  const auto h = initial_state(InitialStateKind::hardcore_pair, t, hard);
  const auto s = initial_state(InitialStateKind::hardcore_pair, t, soft);
  EXPECT_LT((embed_state(h, hard, soft) - s).norm(), 1e-15);
  EXPECT_THROW((void)initial_state(InitialStateKind::softcore_pair, t, hard), ValidationError);
  EXPECT_THROW((void)central_cls_pair(fixture::chiral_spec(2, 2)), ValidationError);
}

TEST(Oscillation, SyntheticCosineSquared) {
  const double omega = 0.037;
  std::vector<double> t;
  std::vector<double> f;
  for (int i = 0; i <= 500; ++i) {
    t.push_back(0.5 * i);
    f.push_back(0.2 + 0.8 * std::pow(std::cos(omega * t.back()), 2));
  }
  // First minimum of cos^2(omega t) at omega t = pi/2, so omega0 = pi / t_min = 2 omega.
  const auto r = oscillation_frequency(t, f);
  EXPECT_NEAR(r.t_min, std::numbers::pi / (2.0 * omega), 1e-3);
  EXPECT_NEAR(r.omega0, 2.0 * omega, 1e-6);
  EXPECT_GT(r.prominence, 0.5);
}

TEST(Oscillation, MonotoneSeriesHasNoMinimum) {
  std::vector<double> t{0, 1, 2, 3, 4};
  std::vector<double> f{1.0, 0.9, 0.8, 0.7, 0.6};
  EXPECT_THROW((void)oscillation_frequency(t, f), NumericalError);
}

TEST(Oscillation, RipplesBelowProminenceAreIgnored) {
  std::vector<double> t;
  std::vector<double> f;
  for (int i = 0; i <= 2000; ++i) {
    t.push_back(0.1 * i);
    f.push_back(std::pow(std::cos(0.01 * t.back()), 2) + 1e-5 * std::cos(5.0 * t.back()));
  }
  EXPECT_NEAR(oscillation_frequency(t, f).t_min, std::numbers::pi / 0.02, 0.5);
}

TEST(DecayFit, RecoversRateExactly) {
  std::vector<double> t;
  std::vector<double> w;
  for (int i = 0; i <= 50; ++i) {
    t.push_back(20.0 * i);
    w.push_back(0.4 * std::exp(-1.3e-3 * t.back()));
  }
  const auto fit = fit_exponential_decay(t, w, 0.0, 1e4);
  EXPECT_NEAR(fit.rate, 1.3e-3, 1e-12);
  EXPECT_NEAR(fit.amplitude, 0.4, 1e-12);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
  EXPECT_EQ(fit.samples, 51);
}

TEST(TimeGrids, LogLinearMerge) {
  const auto lg = log_time_grid(1e4, 10);
  EXPECT_EQ(lg.front(), 0.0);
  EXPECT_NEAR(lg[1], 1e-2, 1e-15);
  EXPECT_NEAR(lg.back(), 1e4, 1e-9);
  EXPECT_EQ(lg.size(), 62u);
  EXPECT_TRUE(std::is_sorted(lg.begin(), lg.end()));
  const auto lin = linear_time_grid(0.0, 10.0, 11);
  EXPECT_EQ(lin.size(), 11u);
  const auto merged = merge_time_grids(lg, lin);
  EXPECT_TRUE(std::adjacent_find(merged.begin(), merged.end()) == merged.end());
  EXPECT_TRUE(std::is_sorted(merged.begin(), merged.end()));
}

TEST(Propagation, RejectsBadTimes) {
  const Lattice l(with_u(3, 2, 0.1));
  const auto psi0 = initial_state(InitialStateKind::softcore_pair, l.table, l.basis);
  EXPECT_THROW((void)propagate(l.h2, psi0, {1.0, 0.5}, PropagationOptions{}), ValidationError);
  EXPECT_THROW((void)propagate(l.h2, psi0, {-1.0}, PropagationOptions{}), ValidationError);
  EXPECT_THROW((void)parse_method("rk4"), ValidationError);
}
