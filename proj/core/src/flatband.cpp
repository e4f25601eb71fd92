#include "liebwqed/flatband.hpp"

#include "liebwqed/errors.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace wqed {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

void require_same_sites(const Eigen::VectorXcd& psi, const TwoExcitationBasis& basis) {
  if (psi.size() != basis.dimension()) {
    throw ValidationError("state has dimension " + std::to_string(psi.size()) + " but the basis has " +
                          std::to_string(basis.dimension()));
  }
}

} // namespace

Eigen::VectorXcd CompactLocalizedState::dense(int num_sites) const {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(num_sites);
  for (const auto& [site, amp] : amplitudes) v(site) += amp;
  return v;
}

double CompactLocalizedState::norm() const {
  double s = 0.0;
  for (const auto& [site, amp] : amplitudes) s += amp * amp;
  return std::sqrt(s);
}

std::vector<CellIndex> cls_centers(const SiteTable& table) {
  std::vector<CellIndex> centers;
  const auto& spec = table.spec();
  for (int ry = 1; ry < spec.num_cells_y; ++ry) {
    for (int rx = 1; rx < spec.num_cells_x; ++rx) centers.push_back({rx, ry});
  }
  return centers;
}

CompactLocalizedState cls_amplitudes(CellIndex center, const SiteTable& table) {
  const CellIndex left{center.x - 1, center.y};
  const CellIndex below{center.x, center.y - 1};
  if (!table.contains(center) || !table.contains(left) || !table.contains(below)) {
    throw ValidationError("CLS center (" + std::to_string(center.x) + "," + std::to_string(center.y) +
                          ") needs both the -x and -y neighbour cells inside the array");
  }
  return {center,
          {{table.index_of(center, Sublattice::A), 0.5},
           {table.index_of(left, Sublattice::A), 0.5},
           {table.index_of(center, Sublattice::C), -0.5},
           {table.index_of(below, Sublattice::C), -0.5}}};
}

FlatbandKernel flatband_kernel(const DenseOperator& h1, double tol) {
  if (h1.basis != BasisTag::single_excitation) throw ValidationError("flatband_kernel expects a single-excitation operator");
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(h1.matrix, Eigen::ComputeFullV);
  const auto& sigma = svd.singularValues();  // descending
  const Eigen::Index n = sigma.size();
  FlatbandKernel kernel;
  kernel.threshold = tol * sigma(0);
  Eigen::Index kept = 0;
  while (kept < n && sigma(n - 1 - kept) < kernel.threshold) ++kept;
  kernel.smallest_discarded = kept < n ? sigma(n - 1 - kept) : 0.0;
  if (kept < n && kernel.smallest_discarded < 10.0 * kernel.threshold) {
    std::ostringstream msg;
    msg << "flat-band kernel is ill-separated: smallest discarded singular value " << kernel.smallest_discarded
        << " is within 10x of the threshold " << kernel.threshold;
    throw NumericalError(msg.str());
  }
  kernel.basis = svd.matrixV().rightCols(kept);
  return kernel;
}

FlatbandKernel flatband_kernel(const DenseOperator& h1, const SiteTable& table, double tol) {
  auto kernel = flatband_kernel(h1, tol);
  const auto centers = cls_centers(table);
  const auto expected = static_cast<int>(centers.size());
  if (kernel.dimension() != expected) {
    throw NumericalError("flat-band kernel dimension " + std::to_string(kernel.dimension()) +
                         " differs from the CLS count " + std::to_string(expected));
  }
  if (expected == 0) return kernel;

  Eigen::MatrixXcd family(table.size(), expected);
  for (int c = 0; c < expected; ++c) family.col(c) = cls_amplitudes(centers[static_cast<std::size_t>(c)], table).dense(table.size());
  const Eigen::MatrixXcd residual = family - kernel.basis * (kernel.basis.adjoint() * family);
  const double worst = residual.colwise().norm().maxCoeff();
  if (worst > 1e-10) {
    throw NumericalError("a CLS lies outside the numerical kernel (residual " + std::to_string(worst) + ")");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> gram(family.adjoint() * family, Eigen::EigenvaluesOnly);
  if (gram.eigenvalues().minCoeff() < 1e-8) {
    throw NumericalError("CLS family is linearly dependent (Gram eigenvalue " +
                         std::to_string(gram.eigenvalues().minCoeff()) + ")");
  }
  return kernel;
}

Eigen::MatrixXcd to_pair_amplitudes(const Eigen::VectorXcd& psi, const TwoExcitationBasis& basis) {
  require_same_sites(psi, basis);
  const int n = basis.num_sites();
  Eigen::MatrixXcd phi = Eigen::MatrixXcd::Zero(n, n);
  for (int k = 0; k < basis.dimension(); ++k) {
    const auto [i, j] = basis.pair(k);
    if (i == j) {
      phi(i, i) = psi(k);
    } else {
      phi(i, j) = psi(k) / kSqrt2;
      phi(j, i) = phi(i, j);
    }
  }
  return phi;
}

Eigen::VectorXcd from_pair_amplitudes(const Eigen::MatrixXcd& phi, const TwoExcitationBasis& basis) {
  if (phi.rows() != basis.num_sites() || phi.cols() != basis.num_sites()) {
    throw ValidationError("pair amplitude matrix does not match the basis site count");
  }
  Eigen::VectorXcd psi(basis.dimension());
  for (int k = 0; k < basis.dimension(); ++k) {
    const auto [i, j] = basis.pair(k);
    psi(k) = i == j ? phi(i, i) : (phi(i, j) + phi(j, i)) / kSqrt2;
  }
  return psi;
}

Eigen::VectorXcd product_state(const Eigen::VectorXcd& v1, const Eigen::VectorXcd& v2,
                               const TwoExcitationBasis& basis) {
  if (v1.size() != basis.num_sites() || v2.size() != basis.num_sites()) {
    throw ValidationError("mode vectors do not match the basis site count");
  }
  const Eigen::MatrixXcd phi = (v1 * v2.transpose() + v2 * v1.transpose()) / kSqrt2;
  return from_pair_amplitudes(phi, basis);
}

FlatbandPairProjector::FlatbandPairProjector(FlatbandKernel kernel, TwoExcitationBasis basis)
    : kernel_(std::move(kernel)), basis_(std::move(basis)) {
  if (kernel_.num_sites() != basis_.num_sites()) {
    throw ValidationError("kernel and two-excitation basis disagree on the number of sites");
  }
  if (kernel_.dimension() < 1) throw ValidationError("flat-band kernel is empty");
  const Eigen::MatrixXcd gram = kernel_.basis.adjoint() * kernel_.basis;
  const double defect = (gram - Eigen::MatrixXcd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  if (defect > 1e-10) {
    throw NumericalError("kernel basis is not orthonormal (defect " + std::to_string(defect) +
                         "); symmetrized pair states would be rank deficient");
  }
}

Eigen::VectorXcd FlatbandPairProjector::coordinates(const Eigen::VectorXcd& psi) const {
  const Eigen::MatrixXcd phi = to_pair_amplitudes(psi, basis_);
  const Eigen::MatrixXcd x = kernel_.basis.adjoint() * phi * kernel_.basis.conjugate();
  const int m = kernel_.dimension();
  Eigen::VectorXcd y(dimension());
  int k = 0;
  for (int a = 0; a < m; ++a) {
    for (int b = a; b < m; ++b) y(k++) = a == b ? x(a, a) : kSqrt2 * x(a, b);
  }
  return y;
}

Eigen::VectorXcd FlatbandPairProjector::embed(const Eigen::VectorXcd& coords) const {
  const int m = kernel_.dimension();
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(m, m);
  int k = 0;
  for (int a = 0; a < m; ++a) {
    for (int b = a; b < m; ++b) {
      if (k >= coords.size()) throw ValidationError("coordinate vector too short for the flat-band pair space");
      if (a == b) {
        y(a, a) = coords(k);
      } else {
        y(a, b) = coords(k) / kSqrt2;
        y(b, a) = y(a, b);
      }
      ++k;
    }
  }
  const Eigen::MatrixXcd phi = kernel_.basis * y * kernel_.basis.transpose();
  return from_pair_amplitudes(phi, basis_);
}

Eigen::MatrixXcd FlatbandPairProjector::pair_states() const {
  const int m = kernel_.dimension();
  const int count = m * (m + 1) / 2;
  Eigen::MatrixXcd q(basis_.dimension(), count);
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(count);
  for (int k = 0; k < count; ++k) {
    e.setZero();
    e(k) = 1.0;
    q.col(k) = embed(e);
  }
  return q;
}

Eigen::MatrixXcd FlatbandPairProjector::dense() const {
  const Eigen::MatrixXcd q = pair_states();
  return q * q.adjoint();
}

FlatbandPairProjector two_excitation_flatband_projector(const FlatbandKernel& kernel,
                                                        const TwoExcitationBasis& basis) {
  return FlatbandPairProjector(kernel, basis);
}

Eigen::VectorXcd cls_initial_state(CellIndex r0, CellIndex r1, const SiteTable& table,
                                   const TwoExcitationBasis& basis) {
  if (!(r1.x == r0.x + 1 && r1.y == r0.y)) {
    throw ValidationError("initial CLS pair must be adjacent along x (R1 = R0 + d x)");
  }
  if (basis.num_sites() != table.size()) throw ValidationError("basis does not match the lattice");
  const auto c0 = cls_amplitudes(r0, table).dense(table.size());
  const auto c1 = cls_amplitudes(r1, table).dense(table.size());
  Eigen::VectorXcd psi = product_state(c0, c1, basis);
  const double norm = psi.norm();
  if (norm == 0.0) throw NumericalError("initial CLS pair state vanishes");
  return psi / norm;
}

} // namespace wqed
