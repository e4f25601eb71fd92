#include "liebwqed/hamiltonian.hpp"

#include "liebwqed/errors.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace wqed {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

BasisTag tag_for(Statistics s) {
  return s == Statistics::softcore ? BasisTag::two_excitation_softcore : BasisTag::two_excitation_hardcore;
}

} // namespace

void write_triplets(std::ostream& out, const SparseMatrixC& m) {
  out << "# " << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    for (SparseMatrixC::InnerIterator it(m, r); it; ++it) {
      out << it.row() << ' ' << it.col() << ' ' << it.value().real() << ' ' << it.value().imag() << '\n';
    }
  }
}

void write_triplets(std::ostream& out, const Eigen::MatrixXcd& m) {
  SparseMatrixC s = m.sparseView(Complex(0.0), 0.0);
  write_triplets(out, s);
}

SparseMatrixC read_triplets(std::istream& in) {
  std::string line;
  Eigen::Index rows = -1;
  Eigen::Index cols = -1;
  std::vector<Eigen::Triplet<Complex>> entries;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line.front() == '#') {
      char hash = 0;
      long long nnz = 0;
      if (!(ls >> hash >> rows >> cols >> nnz)) throw ValidationError("bad triplet header: " + line);
      entries.reserve(static_cast<std::size_t>(nnz));
      continue;
    }
    Eigen::Index r = 0;
    Eigen::Index c = 0;
    double re = 0.0;
    double im = 0.0;
    if (!(ls >> r >> c >> re >> im)) throw ValidationError("bad triplet line: " + line);
    entries.emplace_back(r, c, Complex(re, im));
  }
  if (rows < 0) throw ValidationError("triplet stream has no header");
  SparseMatrixC m(rows, cols);
  m.setFromTriplets(entries.begin(), entries.end());
  return m;
}

DenseOperator single_excitation_hamiltonian(const WaveguideNetwork& network, const LatticeSpec& spec) {
  const int n = network.num_sites();
  DenseOperator h{Eigen::MatrixXcd::Zero(n, n), BasisTag::single_excitation, false};
  const Complex prefactor(0.0, -0.5 * spec.gamma);
  const double k0 = spec.resonant_wavevector;
  for (const auto& guide : network.waveguides()) {
    for (const int i : guide.sites) {
      for (const int j : guide.sites) {
        const double r = std::abs(network.coordinate(i, guide.axis) - network.coordinate(j, guide.axis));
        h.matrix(i, j) += prefactor * std::polar(1.0, k0 * r);
      }
    }
  }
  return h;
}

TwoExcitationBasis::TwoExcitationBasis(int num_sites, Statistics statistics)
    : num_sites_(num_sites), statistics_(statistics) {
  if (num_sites < 2) {
    throw ValidationError("two-excitation basis needs at least 2 sites, got " + std::to_string(num_sites));
  }
  const bool hardcore = statistics == Statistics::hardcore;
  const auto n = static_cast<std::size_t>(num_sites);
  pairs_.reserve(hardcore ? n * (n - 1) / 2 : n * (n + 1) / 2);
  for (int i = 0; i < num_sites; ++i) {
    for (int j = hardcore ? i + 1 : i; j < num_sites; ++j) pairs_.emplace_back(i, j);
  }
}

int TwoExcitationBasis::index_of(int i, int j) const {
  if (i > j) std::swap(i, j);
  if (i < 0 || j >= num_sites_) return -1;
  const long long n = num_sites_;
  const long long ii = i;
  if (statistics_ == Statistics::hardcore) {
    if (i == j) return -1;
    return static_cast<int>(ii * (n - 1) - ii * (ii - 1) / 2 + (j - i - 1));
  }
  return static_cast<int>(ii * n - ii * (ii - 1) / 2 + (j - i));
}

TwoExcitationBasis two_excitation_basis(int num_sites, Statistics statistics) {
  return TwoExcitationBasis(num_sites, statistics);
}

SparseOperator two_excitation_hamiltonian(const DenseOperator& h1, const LatticeSpec& spec,
                                          const TwoExcitationBasis& basis) {
  if (spec.statistics != basis.statistics()) {
    throw ValidationError("basis statistics (" + std::string(to_string(basis.statistics())) +
                          ") do not match the lattice spec (" + std::string(to_string(spec.statistics)) + ")");
  }
  return two_excitation_hamiltonian(h1, spec.interaction, basis);
}

SparseOperator two_excitation_hamiltonian(const DenseOperator& h1, double interaction,
                                          const TwoExcitationBasis& basis) {
  if (h1.basis != BasisTag::single_excitation) {
    throw ValidationError("two_excitation_hamiltonian expects a single-excitation operator");
  }
  const int n = h1.dimension();
  if (n != basis.num_sites()) {
    throw ValidationError("basis has " + std::to_string(basis.num_sites()) + " sites but h1 is " +
                          std::to_string(n) + "x" + std::to_string(n));
  }
  const bool hardcore = basis.statistics() == Statistics::hardcore;

  // Column sparsity of h1: unconnected pairs are exact zeros.
  std::vector<std::vector<std::pair<int, Complex>>> column(static_cast<std::size_t>(n));
  for (int l = 0; l < n; ++l) {
    for (int k = 0; k < n; ++k) {
      if (h1.matrix(k, l) != Complex(0.0)) column[static_cast<std::size_t>(l)].emplace_back(k, h1.matrix(k, l));
    }
  }

  std::vector<Eigen::Triplet<Complex>> entries;
  std::size_t estimate = 0;
  for (const auto& c : column) estimate += c.size();
  entries.reserve(static_cast<std::size_t>(basis.dimension()) * (2 * estimate / static_cast<std::size_t>(n) + 1));

  // b_k^dag b_l acting on b_i^dag b_j^dag |0> / sqrt(1 + d_ij) yields
  // h_ki b_k^dag b_j^dag + h_kj b_i^dag b_k^dag, renormalized into the target pair.
  for (int col = 0; col < basis.dimension(); ++col) {
    const auto [i, j] = basis.pair(col);
    const double source = i == j ? kSqrt2 : 1.0;
    const auto emit = [&](int moved, int spectator) {
      for (const auto& [k, value] : column[static_cast<std::size_t>(moved)]) {
        if (hardcore && k == spectator) continue;
        const int row = basis.index_of(k, spectator);
        const double target = k == spectator ? kSqrt2 : 1.0;
        entries.emplace_back(row, col, value * (target / source));
      }
    };
    emit(i, j);
    emit(j, i);
    if (!hardcore && i == j && interaction != 0.0) entries.emplace_back(col, col, Complex(interaction, 0.0));
  }

  SparseOperator h2{SparseMatrixC(basis.dimension(), basis.dimension()), tag_for(basis.statistics()), false};
  h2.matrix.setFromTriplets(entries.begin(), entries.end());
  h2.matrix.makeCompressed();
  return h2;
}

} // namespace wqed
