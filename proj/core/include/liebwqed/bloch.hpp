#pragma once

#include "liebwqed/lattice.hpp"

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace wqed {

// Momentum-space single-excitation theory of the infinite lattice.
// Bloch-matrix ordering is (B, A, C).

// 1D waveguide-QED dispersion (gamma/4)[cot((k0+k)d/2) + cot((k0-k)d/2)].
// Throws DivergenceError within 1e-12 of a pole (k = +-k0 mod 2pi/d).
double epsilon_1d(double k, const LatticeSpec& spec);

// Off-diagonal B-edge coupling t(k). Uses the closed chiral form
// (gamma/2) sin(k0 a) (1 + i tan(k d / 2)) when spec.chiral().
std::complex<double> edge_coupling(double k, const LatticeSpec& spec);

// d t / d k for the chiral form.
std::complex<double> edge_coupling_derivative(double k, const LatticeSpec& spec);

Eigen::Matrix3cd bloch_hamiltonian(double kx, double ky, const LatticeSpec& spec);

class BlochModel {
public:
  explicit BlochModel(const LatticeSpec& spec);

  [[nodiscard]] const LatticeSpec& spec() const { return spec_; }
  [[nodiscard]] bool chiral() const { return chiral_; }
  [[nodiscard]] Eigen::Matrix3cd hamiltonian(double kx, double ky) const { return bloch_hamiltonian(kx, ky, spec_); }

private:
  LatticeSpec spec_;
  bool chiral_;
};

struct BandPoint {
  double kx = 0.0;
  double ky = 0.0;
  Eigen::Vector3d energies;    // ascending
  Eigen::Matrix3cd eigenvectors;  // columns, largest component real positive
};

struct BandStructure {
  int grid_size = 0;
  std::vector<BandPoint> points;  // kx-major
};

// Half-step shifted grid k_n = -pi/d + (n + 1/2) 2pi/(G d), n = 0..G-1.
// Symmetric under k -> -k, never touches the zone edge, contains Gamma for odd G.
std::vector<double> shifted_grid(int grid_size, double lattice_constant);

// Sorted eigenpairs of the Bloch matrix at one k.
BandPoint diagonalize_bloch(double kx, double ky, const LatticeSpec& spec);

BandStructure band_structure(int grid_size, const LatticeSpec& spec);

// Minimum of band `band` starting from the lowest grid sample, refined by a
// local search on the Bloch eigenvalue (grid samples bracket the true minimum).
struct BandExtremum {
  double kx = 0.0;
  double ky = 0.0;
  double energy = 0.0;
};
BandExtremum band_minimum(const BandStructure& bands, int band, const LatticeSpec& spec);

// Flat-to-dispersive gap (gamma/sqrt 2)|sin(k0 a)|. Chiral specs only.
double band_gap(const LatticeSpec& spec);

} // namespace wqed
