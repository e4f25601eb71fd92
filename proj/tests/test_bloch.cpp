#include "liebwqed/bloch.hpp"
#include "liebwqed/errors.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace wqed;

TEST(Bloch, FlatBandOnSingleCellGrid) {
  const auto bands = band_structure(64, fixture::chiral_spec(1, 1));
  ASSERT_EQ(bands.points.size(), 64u * 64u);
  for (const auto& p : bands.points) {
    EXPECT_LT(std::abs(p.energies(1)), 1e-12);
    // chiral symmetry: e1 = -e3
    EXPECT_NEAR(p.energies(0), -p.energies(2), 1e-12);
  }
}

TEST(Bloch, GapFormulaAndRefinedMinimum) {
  for (const double a : {0.5, 0.3, 0.8}) {
    auto spec = fixture::chiral_spec(1, 1);
    spec.intracell_distance = a;
    const double gap = std::abs(std::sin(std::numbers::pi * a)) / std::sqrt(2.0);
    EXPECT_NEAR(band_gap(spec), gap, 1e-15);
    const auto bands = band_structure(32, spec);
    EXPECT_NEAR(band_minimum(bands, 2, spec).energy, gap, 1e-8) << "a = " << a;
  }
}

TEST(Bloch, HermitianWithExpectedStructure) {
  auto spec = fixture::chiral_spec(1, 1);
  spec.resonant_wavevector = 0.7 * std::numbers::pi;
  const auto h = bloch_hamiltonian(0.3, -1.1, spec);
  EXPECT_LT((h - h.adjoint()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(h(1, 2), std::complex<double>(0.0));
  EXPECT_NEAR(h(1, 1).real(), epsilon_1d(0.3, spec), 1e-15);
  EXPECT_NEAR(h(0, 0).real(), epsilon_1d(0.3, spec) + epsilon_1d(-1.1, spec), 1e-15);
}

TEST(Bloch, ChiralFormIsLimitOfGeneralForm) {
  auto near = fixture::chiral_spec(1, 1);
  near.resonant_wavevector = std::numbers::pi * (1.0 + 1e-9);
  ASSERT_FALSE(near.chiral());
  const auto exact = fixture::chiral_spec(1, 1);
  for (const double k : {-2.9, -1.0, 0.0, 0.4, 2.2}) {
    EXPECT_LT(std::abs(edge_coupling(k, near) - edge_coupling(k, exact)), 1e-7) << k;
    EXPECT_LT(std::abs(epsilon_1d(k, near)), 1e-7) << k;
  }
}

TEST(Bloch, EdgeCouplingDerivativeMatchesFiniteDifference) {
  const auto spec = fixture::chiral_spec(1, 1);
  const double h = 1e-5;
  for (const double k : {-2.5, -0.7, 0.0, 1.3, 2.8}) {
    const auto fd = (edge_coupling(k + h, spec) - edge_coupling(k - h, spec)) / (2.0 * h);
    EXPECT_LT(std::abs(edge_coupling_derivative(k, spec) - fd), 1e-6 * std::max(1.0, std::abs(fd))) << k;
  }
}

TEST(Bloch, TimeReversalOfCoupling) {
  const auto spec = fixture::chiral_spec(1, 1);
  for (const double k : {0.1, 1.0, 3.0}) EXPECT_LT(std::abs(edge_coupling(-k, spec) - std::conj(edge_coupling(k, spec))), 1e-15);
}

TEST(Bloch, PolesThrow) {
  auto spec = fixture::chiral_spec(1, 1);
  EXPECT_THROW((void)edge_coupling(std::numbers::pi, spec), DivergenceError);
  spec.resonant_wavevector = 0.5 * std::numbers::pi;
  EXPECT_THROW((void)epsilon_1d(0.5 * std::numbers::pi, spec), DivergenceError);
}

TEST(Bloch, ShiftedGridProperties) {
  for (const int g : {1, 2, 7, 64}) {
    const auto k = shifted_grid(g, 1.0);
    ASSERT_EQ(static_cast<int>(k.size()), g);
    for (int n = 0; n < g; ++n) {
      EXPECT_LT(std::abs(k[static_cast<std::size_t>(n)]), std::numbers::pi);
      EXPECT_NEAR(k[static_cast<std::size_t>(n)], -k[static_cast<std::size_t>(g - 1 - n)], 1e-14);
    }
    if (g % 2 == 1) EXPECT_EQ(k[static_cast<std::size_t>(g / 2)], 0.0);
  }
  EXPECT_THROW((void)shifted_grid(0, 1.0), ValidationError);
}

TEST(Bloch, EigenvectorsDiagonalize) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  auto spec = fixture::chiral_spec(1, 1);
  spec.intracell_distance = 0.4;
  for (int i = 0; i < 20; ++i) {
    const auto p = diagonalize_bloch(u(rng), u(rng), spec);
    const auto h = bloch_hamiltonian(p.kx, p.ky, spec);
    EXPECT_LT((h * p.eigenvectors - p.eigenvectors * p.energies.asDiagonal()).norm(), 1e-12);
    EXPECT_TRUE(p.energies(0) <= p.energies(1) && p.energies(1) <= p.energies(2));
  }
}
