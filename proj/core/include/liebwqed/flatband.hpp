#pragma once

#include "liebwqed/hamiltonian.hpp"
#include "liebwqed/lattice.hpp"

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace wqed {

// Four-site dark state around the corner emitter B(R0):
// (1/2)(|A(R0)> + |A(R0 - x)> - |C(R0)> - |C(R0 - y)>).
struct CompactLocalizedState {
  CellIndex center;
  std::vector<std::pair<int, double>> amplitudes;  // (flat index, amplitude)

  [[nodiscard]] Eigen::VectorXcd dense(int num_sites) const;
  [[nodiscard]] double norm() const;
};

// Valid centers need both the -x and -y neighbour cells: R0x >= 1, R0y >= 1.
std::vector<CellIndex> cls_centers(const SiteTable& table);

CompactLocalizedState cls_amplitudes(CellIndex center, const SiteTable& table);

// Orthonormal basis (columns) of the right null space of h1.
struct FlatbandKernel {
  Eigen::MatrixXcd basis;
  double threshold = 0.0;        // singular values below this were kept
  double smallest_discarded = 0.0;

  [[nodiscard]] int dimension() const { return static_cast<int>(basis.cols()); }
  [[nodiscard]] int num_sites() const { return static_cast<int>(basis.rows()); }
};

// Kernel from the SVD of h1, keeping singular values below tol * ||h1||_2.
// Throws NumericalError if the next singular value is not at least 10x the
// threshold (no clean separation).
FlatbandKernel flatband_kernel(const DenseOperator& h1, double tol = 1e-10);

// Same, plus runtime checks against the lattice: the dimension equals the
// number of CLS centers, every CLS lies in the span (residual < 1e-10) and the
// CLS Gram matrix has full rank at 1e-8.
FlatbandKernel flatband_kernel(const DenseOperator& h1, const SiteTable& table, double tol = 1e-10);

// Two-excitation amplitudes as a symmetric N x N first-quantized matrix Phi
// with ||Phi||_F = ||psi||. Hardcore vectors map to Phi with zero diagonal.
Eigen::MatrixXcd to_pair_amplitudes(const Eigen::VectorXcd& psi, const TwoExcitationBasis& basis);
// Inverse map; the symmetric part of Phi is used and, for hardcore bases, the
// diagonal (double occupancy) is dropped.
Eigen::VectorXcd from_pair_amplitudes(const Eigen::MatrixXcd& phi, const TwoExcitationBasis& basis);

// c1^dag c2^dag |0> for single-particle modes c_k^dag = sum_i v_k[i] b_i^dag,
// unnormalized; hardcore bases drop the double-occupancy part.
Eigen::VectorXcd product_state(const Eigen::VectorXcd& v1, const Eigen::VectorXcd& v2,
                               const TwoExcitationBasis& basis);

// Projector onto span{Sym(v_a (x) v_b)} of kernel vectors, the flat-band
// subspace of the non-interacting bosonic two-excitation Hamiltonian
// (dimension m(m+1)/2). Hardcore states are embedded into the bosonic space
// with zero double occupancy, so on a hardcore basis the operator is the
// compression R P R^dag: Hermitian, but not idempotent.
class FlatbandPairProjector {
public:
  FlatbandPairProjector(FlatbandKernel kernel, TwoExcitationBasis basis);

  [[nodiscard]] const FlatbandKernel& kernel() const { return kernel_; }
  [[nodiscard]] const TwoExcitationBasis& basis() const { return basis_; }
  // m(m+1)/2 for kernel dimension m.
  [[nodiscard]] int dimension() const {
    const int m = kernel_.dimension();
    return m * (m + 1) / 2;
  }

  // Components <Sym(a,b)|psi>, pairs a <= b in lexicographic order;
  // ||y||^2 = <psi|P|psi>.
  [[nodiscard]] Eigen::VectorXcd coordinates(const Eigen::VectorXcd& psi) const;
  // sum_(ab) y_(ab) |Sym(a,b)> expressed in basis().
  [[nodiscard]] Eigen::VectorXcd embed(const Eigen::VectorXcd& coords) const;
  [[nodiscard]] Eigen::VectorXcd apply(const Eigen::VectorXcd& psi) const { return embed(coordinates(psi)); }
  [[nodiscard]] double expectation(const Eigen::VectorXcd& psi) const { return coordinates(psi).squaredNorm(); }

  // Columns |Sym(a,b)> in basis(); dense, only for small lattices.
  [[nodiscard]] Eigen::MatrixXcd pair_states() const;
  [[nodiscard]] Eigen::MatrixXcd dense() const;

private:
  FlatbandKernel kernel_;
  TwoExcitationBasis basis_;
};

FlatbandPairProjector two_excitation_flatband_projector(const FlatbandKernel& kernel,
                                                        const TwoExcitationBasis& basis);

// Normalized c^dag_R0 c^dag_R1 |0> with R1 = R0 + x (two adjacent CLS). In the
// hardcore basis the shared doubly occupied A(R0) component is absent and the
// remaining vector is renormalized.
Eigen::VectorXcd cls_initial_state(CellIndex r0, CellIndex r1, const SiteTable& table,
                                   const TwoExcitationBasis& basis);

} // namespace wqed
