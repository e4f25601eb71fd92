#pragma once

#include "liebwqed/lattice.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <iosfwd>
#include <utility>
#include <vector>

namespace wqed {

using Complex = std::complex<double>;
using SparseMatrixC = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

enum class BasisTag : std::uint8_t {
  single_excitation,
  two_excitation_softcore,
  two_excitation_hardcore,
};

// Complex square operator with basis metadata. Effective Hamiltonians are
// complex-symmetric but not Hermitian, so `hermitian` is false for them.
struct DenseOperator {
  Eigen::MatrixXcd matrix;
  BasisTag basis = BasisTag::single_excitation;
  bool hermitian = false;

  [[nodiscard]] int dimension() const { return static_cast<int>(matrix.rows()); }
};

struct SparseOperator {
  SparseMatrixC matrix;
  BasisTag basis = BasisTag::two_excitation_softcore;
  bool hermitian = false;

  [[nodiscard]] int dimension() const { return static_cast<int>(matrix.rows()); }
};

// Sparse triplet text format, one nonzero per line: "row col re im", preceded
// by a "# rows cols nnz" header line. Zero-based indices, 17 significant digits.
void write_triplets(std::ostream& out, const SparseMatrixC& m);
void write_triplets(std::ostream& out, const Eigen::MatrixXcd& m);
SparseMatrixC read_triplets(std::istream& in);

// h_ij = -i (gamma/2) exp(i k0 |x_i - x_j|) summed over every waveguide the
// pair shares; the diagonal collects -i gamma/2 per waveguide touching the site.
DenseOperator single_excitation_hamiltonian(const WaveguideNetwork& network, const LatticeSpec& spec);

// Ordered pair list (i <= j), lexicographic. Softcore keeps i == j, hardcore
// drops it. Index arithmetic is closed-form so index_of is O(1).
class TwoExcitationBasis {
public:
  TwoExcitationBasis(int num_sites, Statistics statistics);

  [[nodiscard]] int num_sites() const { return num_sites_; }
  [[nodiscard]] Statistics statistics() const { return statistics_; }
  [[nodiscard]] int dimension() const { return static_cast<int>(pairs_.size()); }
  [[nodiscard]] const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }
  [[nodiscard]] std::pair<int, int> pair(int n) const { return pairs_[static_cast<std::size_t>(n)]; }

  // Index of the unordered pair {i, j}; -1 if it is not part of the basis
  // (i == j in hardcore, or out of range).
  [[nodiscard]] int index_of(int i, int j) const;

  // 1/sqrt(2) for the doubly occupied state |ii> = (b_i^dag)^2 |0> / sqrt(2).
  [[nodiscard]] static double normalization(int i, int j) { return i == j ? 0.7071067811865476 : 1.0; }

private:
  int num_sites_;
  Statistics statistics_;
  std::vector<std::pair<int, int>> pairs_;
};

TwoExcitationBasis two_excitation_basis(int num_sites, Statistics statistics);

// Second-quantized projection of h1 (plus U on doubly occupied states in the
// softcore case) onto the symmetrized two-excitation basis. The hardcore
// matrix is the bosonic one restricted to i != j, which coincides with the
// spin-algebra result in this sector.
SparseOperator two_excitation_hamiltonian(const DenseOperator& h1, const LatticeSpec& spec,
                                          const TwoExcitationBasis& basis);

// Same, with the interaction passed explicitly (spec.interaction is ignored).
SparseOperator two_excitation_hamiltonian(const DenseOperator& h1, double interaction,
                                          const TwoExcitationBasis& basis);

} // namespace wqed
