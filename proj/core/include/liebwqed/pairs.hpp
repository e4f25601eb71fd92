#pragma once

#include "liebwqed/flatband.hpp"
#include "liebwqed/lattice.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace wqed {

// Flat-band Bloch vector (0, -t_y, t_x) / sqrt(|t_x|^2 + |t_y|^2) in (B, A, C)
// order. Satisfies v(-k) = conj(v(k)) because t(-k) = conj(t(k)).
Eigen::Vector3cd flatband_bloch_vector(double kx, double ky, const LatticeSpec& spec);

// Momentum grid for pair states of an L x L torus. Single-particle momenta
// use the half-step shifted grid (so they never hit the tan pole); total
// momenta K = 2 pi j / (L d) lie on the unshifted grid, which keeps
// k2 = K - k1 on the shifted grid and contains Gamma, X and M.
class PairGrid {
public:
  PairGrid(int size, double lattice_constant);

  [[nodiscard]] int size() const { return size_; }
  [[nodiscard]] int num_points() const { return size_ * size_; }
  [[nodiscard]] double momentum(int n) const { return k_[static_cast<std::size_t>(n)]; }
  // Flat index kx-major: n = nx * L + ny.
  [[nodiscard]] double kx(int n) const { return momentum(n / size_); }
  [[nodiscard]] double ky(int n) const { return momentum(n % size_); }
  [[nodiscard]] double total_momentum(int j) const;
  // Index of K - k1 on the shifted grid, for K = (total_momentum(jx), total_momentum(jy)).
  [[nodiscard]] int partner(int n, int jx, int jy) const;

private:
  int size_;
  double d_;
  std::vector<double> k_;
};

// Interaction matrix over pair momenta k1 (k2 = K - k1) on the full grid,
// V[k1', k1] = (U / Nc) sum_beta v_beta(-k1') v_beta(-(K - k1')) v_beta(k1) v_beta(K - k1).
// The negated-momentum form is Hermitian only in the v(-k) = conj(v(k))
// gauge; throws NumericalError if ||V - V^dag||_max > 1e-10 (gauge bug).
Eigen::MatrixXcd interaction_matrix(int jx, int jy, const PairGrid& grid, double interaction, const LatticeSpec& spec);

// Isometry from exchange-symmetric pair states {k1, K - k1} onto the full
// grid: orbits of two points get 1/sqrt(2) on each, fixed points get 1.
Eigen::MatrixXd exchange_symmetrizer(int jx, int jy, const PairGrid& grid);

struct PairSpectrumPoint {
  int jx = 0;
  int jy = 0;
  double kx = 0.0;
  double ky = 0.0;
  int basis_size = 0;           // exchange-symmetric states at this K
  Eigen::VectorXd eigenvalues;  // ascending
  Eigen::MatrixXcd eigenvectors;  // columns, in the symmetric basis
  int dark_count = 0;           // |E| < dark_tolerance * U
  double upper = 0.0;           // largest |E|
  double lower = 0.0;           // second largest |E|
  int upper_index = 0;
  int lower_index = 0;
  bool ambiguous = false;       // third |E| within 1e-6 U of the second
};

struct PairSpectrum {
  int grid_size = 0;
  double interaction = 0.0;
  std::vector<PairSpectrumPoint> points;
};

PairSpectrumPoint pair_spectrum_at(int jx, int jy, const PairGrid& grid, double interaction, const LatticeSpec& spec,
                                   double dark_tolerance = 1e-10);

// Every K of the commensurate L x L total-momentum grid.
PairSpectrum pair_spectrum(int grid_size, double interaction, const LatticeSpec& spec, double dark_tolerance = 1e-10);

// Along Gamma -> X -> M -> Gamma through grid points (L even).
PairSpectrum pair_spectrum_path(int grid_size, double interaction, const LatticeSpec& spec,
                                double dark_tolerance = 1e-10);

enum class SymmetryPoint : std::uint8_t { gamma, x, m };
enum class Branch : std::uint8_t { upper, lower };

SymmetryPoint parse_symmetry_point(const std::string& text);
std::string to_string(SymmetryPoint p);
std::string to_string(Branch b);

// Conditional distribution of the second excitation over relative cells
// (dx, dy) in [-L/2, L/2) and sublattices, given the first one on
// sublattice `reference` of cell 0. If the two dispersive branches are
// degenerate at K (|E_u - E_l| < 1e-8 U), the density is averaged over the
// two-dimensional eigenspace so the map is basis independent.
struct RelativePopulation {
  SymmetryPoint point = SymmetryPoint::gamma;
  Branch branch = Branch::upper;
  Sublattice reference = Sublattice::A;
  int grid_size = 0;
  double energy = 0.0;
  bool degenerate = false;
  // probability[(dx + L/2) * L + (dy + L/2)][static_cast<int>(sublattice)]
  std::vector<std::array<double, 3>> probability;

  [[nodiscard]] double at(int dx, int dy, Sublattice s) const;
  // Weight with Chebyshev distance max(|dx|, |dy|) <= radius.
  [[nodiscard]] double weight_within(int radius) const;
  [[nodiscard]] double total() const { return weight_within(grid_size); }
};

RelativePopulation relative_population(SymmetryPoint point, Branch branch, int grid_size, const LatticeSpec& spec,
                                       Sublattice reference = Sublattice::A);

// Real-space analogue on a finite lattice: P H_int P restricted to the
// flat-band pair subspace, H_int = U sum_i n_i (n_i - 1) / 2 (softcore).
// In flat-band coordinates (see FlatbandPairProjector) it equals U W^dag W,
// W_(i, ab) = <ii|Sym(a,b)>.
struct FlatbandClassification {
  double interaction = 0.0;
  double threshold = 0.0;        // tol * U
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXcd dispersive;   // columns in flat-band coordinates, E > threshold
  Eigen::MatrixXcd dark;         // columns in flat-band coordinates, E <= threshold
  bool ambiguous = false;        // an eigenvalue within 100x of the threshold on either side

  [[nodiscard]] double dispersive_weight(const Eigen::VectorXcd& coordinates) const;
  [[nodiscard]] double dark_weight(const Eigen::VectorXcd& coordinates) const;
};

FlatbandClassification classify_flatband_eigenstates(const FlatbandPairProjector& projector, double interaction,
                                                     double tol = 1e-8);

} // namespace wqed
