#include "liebwqed/dynamics.hpp"
#include "liebwqed/errors.hpp"
#include "liebwqed/flatband.hpp"

#include "test_support.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <random>

using namespace wqed;

namespace {

struct Model {
  explicit Model(const LatticeSpec& s)
      : spec(s), table(s), h1(single_excitation_hamiltonian(WaveguideNetwork(table), s)) {}
  LatticeSpec spec;
  SiteTable table;
  DenseOperator h1;
};

Eigen::VectorXcd random_state(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v(i) = {g(rng), g(rng)};
  return v.normalized();
}

// Orthonormal basis of span{Sym(cls_a, cls_b)} built from the raw,
// non-orthogonal CLS family, without the SVD kernel.
Eigen::MatrixXcd cls_pair_span(const SiteTable& table, const TwoExcitationBasis& basis) {
  const auto centers = cls_centers(table);
  std::vector<Eigen::VectorXcd> cls;
  for (const auto c : centers) cls.push_back(cls_amplitudes(c, table).dense(table.size()));
  const int m = static_cast<int>(cls.size());
  Eigen::MatrixXcd family(basis.dimension(), m * (m + 1) / 2);
  int k = 0;
  for (int a = 0; a < m; ++a) {
    for (int b = a; b < m; ++b) family.col(k++) = product_state(cls[static_cast<std::size_t>(a)], cls[static_cast<std::size_t>(b)], basis);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(family);
  return Eigen::MatrixXcd(qr.householderQ()).leftCols(qr.rank());
}

} // namespace

TEST(CompactLocalizedState, DarkOnAllSmallLattices) {
  for (int nx = 2; nx <= 6; ++nx) {
    for (int ny = 2; ny <= 6; ++ny) {
      const Model s(fixture::chiral_spec(nx, ny));
      const auto centers = cls_centers(s.table);
      EXPECT_EQ(static_cast<int>(centers.size()), (nx - 1) * (ny - 1));
      for (const auto c : centers) {
        const auto cls = cls_amplitudes(c, s.table);
        EXPECT_NEAR(cls.norm(), 1.0, 1e-15);
        EXPECT_LT((s.h1.matrix * cls.dense(s.table.size())).norm(), 1e-12);
      }
    }
  }
}

TEST(CompactLocalizedState, RejectsBoundaryCenters) {
  const SiteTable t(fixture::chiral_spec(3, 3));
  EXPECT_THROW((void)cls_amplitudes({0, 1}, t), ValidationError);
  EXPECT_THROW((void)cls_amplitudes({1, 0}, t), ValidationError);
  EXPECT_NO_THROW((void)cls_amplitudes({2, 2}, t));
}

TEST(FlatbandKernel, DimensionAndSpan) {
  const Model s(fixture::chiral_spec(4, 3));
  const auto k = flatband_kernel(s.h1, s.table);
  EXPECT_EQ(k.dimension(), 6);
  EXPECT_LT((s.h1.matrix * k.basis).norm(), 1e-12);
  EXPECT_LT((k.basis.adjoint() * k.basis - Eigen::MatrixXcd::Identity(6, 6)).norm(), 1e-12);
  EXPECT_GT(k.smallest_discarded, 10.0 * k.threshold);
}

TEST(FlatbandKernel, NonChiralLatticeHasNoMatchingKernel) {
  auto spec = fixture::chiral_spec(3, 3);
  spec.resonant_wavevector = 0.7 * std::numbers::pi;
  const Model s(spec);
  EXPECT_THROW((void)flatband_kernel(s.h1, s.table), NumericalError);
}

TEST(PairAmplitudes, RoundTripAndNorm) {
  for (const auto stats : {Statistics::softcore, Statistics::hardcore}) {
    const TwoExcitationBasis basis(9, stats);
    const auto psi = random_state(basis.dimension(), 1);
    const auto phi = to_pair_amplitudes(psi, basis);
    EXPECT_LT((phi - phi.transpose()).norm(), 1e-15);
    EXPECT_NEAR(phi.norm(), psi.norm(), 1e-14);
    EXPECT_LT((from_pair_amplitudes(phi, basis) - psi).norm(), 1e-14);
  }
}

TEST(PairAmplitudes, ProductOfLocalModes) {
  const TwoExcitationBasis basis(4, Statistics::softcore);
  Eigen::VectorXcd e0 = Eigen::VectorXcd::Zero(4);
  Eigen::VectorXcd e2 = Eigen::VectorXcd::Zero(4);
  e0(0) = 1.0;
  e2(2) = 1.0;
  const auto same = product_state(e0, e0, basis);   // (b0^dag)^2 |0> = sqrt2 |00>
  const auto mixed = product_state(e0, e2, basis);  // b0^dag b2^dag |0> = |02>
  EXPECT_NEAR(std::abs(same(basis.index_of(0, 0)) - std::sqrt(2.0)), 0.0, 1e-15);
  EXPECT_NEAR(same.norm(), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(std::abs(mixed(basis.index_of(0, 2)) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(mixed.norm(), 1.0, 1e-15);
}

TEST(FlatbandProjector, SoftcoreAxioms) {
  const Model s(fixture::chiral_spec(3, 3));
  const TwoExcitationBasis basis(s.table.size(), Statistics::softcore);
  const FlatbandPairProjector p(flatband_kernel(s.h1, s.table), basis);
  EXPECT_EQ(p.dimension(), 10);
  const Eigen::MatrixXcd dense = p.dense();
  EXPECT_LT((dense * dense - dense).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((dense - dense.adjoint()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(dense.trace().real(), 10.0, 1e-12);

  const auto oracle = cls_pair_span(s.table, basis);
  EXPECT_EQ(oracle.cols(), 10);
  EXPECT_LT((dense - oracle * oracle.adjoint()).cwiseAbs().maxCoeff(), 1e-12);

  const auto psi = random_state(basis.dimension(), 2);
  EXPECT_NEAR(p.expectation(psi), psi.dot(dense * psi).real(), 1e-13);
  EXPECT_LT((p.apply(psi) - dense * psi).norm(), 1e-13);
  EXPECT_LT((p.embed(p.coordinates(psi)) - p.apply(psi)).norm(), 1e-14);
}

TEST(FlatbandProjector, FlatPairsAreZeroModesOfH2) {
  const Model s(fixture::chiral_spec(3, 3));
  const TwoExcitationBasis basis(s.table.size(), Statistics::softcore);
  const FlatbandPairProjector p(flatband_kernel(s.h1, s.table), basis);
  const auto h2 = two_excitation_hamiltonian(s.h1, 0.0, basis);
  EXPECT_LT((h2.matrix * p.pair_states()).norm(), 1e-12);
}

TEST(FlatbandProjector, HardcoreCompression) {
  const Model s(fixture::chiral_spec(3, 3));
  const TwoExcitationBasis soft(s.table.size(), Statistics::softcore);
  const TwoExcitationBasis hard(s.table.size(), Statistics::hardcore);
  const auto kernel = flatband_kernel(s.h1, s.table);
  const Eigen::MatrixXcd full = FlatbandPairProjector(kernel, soft).dense();
  const Eigen::MatrixXcd comp = FlatbandPairProjector(kernel, hard).dense();
  for (int r = 0; r < hard.dimension(); ++r) {
    for (int c = 0; c < hard.dimension(); ++c) {
      const auto [i, j] = hard.pair(r);
      const auto [k, l] = hard.pair(c);
      EXPECT_LT(std::abs(comp(r, c) - full(soft.index_of(i, j), soft.index_of(k, l))), 1e-13);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(comp);
  EXPECT_GT(es.eigenvalues().minCoeff(), -1e-12);
  EXPECT_LT(es.eigenvalues().maxCoeff(), 1.0 + 1e-12);
}

TEST(FlatbandProjector, SoftcoreClsPairIsInsideFlatBand) {
  const Model s(fixture::chiral_spec(4, 4));
  const TwoExcitationBasis basis(s.table.size(), Statistics::softcore);
  const FlatbandPairProjector p(flatband_kernel(s.h1, s.table), basis);
  const auto psi = cls_initial_state({1, 2}, {2, 2}, s.table, basis);
  EXPECT_NEAR(psi.norm(), 1.0, 1e-15);
  EXPECT_NEAR(p.expectation(psi), 1.0, 1e-12);
}

TEST(FlatbandProjector, HardcoreClsPairProjectionAgainstSpanOracle) {
  const Model s(fixture::chiral_spec(4, 4));
  const TwoExcitationBasis soft(s.table.size(), Statistics::softcore);
  const TwoExcitationBasis hard(s.table.size(), Statistics::hardcore);
  const FlatbandPairProjector p(flatband_kernel(s.h1, s.table), hard);
  const auto psi = initial_state(InitialStateKind::hardcore_pair, s.table, hard);
  EXPECT_NEAR(psi.norm(), 1.0, 1e-15);
  const auto span = cls_pair_span(s.table, soft);
  const Eigen::VectorXcd embedded = embed_state(psi, hard, soft);
  const double oracle = (span.adjoint() * embedded).squaredNorm();
  EXPECT_NEAR(p.expectation(psi), oracle, 1e-12);
  EXPECT_GT(oracle, 0.85);
  EXPECT_LT(oracle, 0.9);
}
