#pragma once

#include "liebwqed/lattice.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstddef>

namespace wqed {

// Quantum geometric tensor of one Bloch band at one k. T_xx and T_yy are real
// up to rounding; T_yx = conj(T_xy). Metric g = Re T, Berry curvature
// Omega = -2 Im T_xy.
struct QGTValue {
  double kx = 0.0;
  double ky = 0.0;
  int band = 1;
  std::complex<double> txx;
  std::complex<double> tyy;
  std::complex<double> txy;

  [[nodiscard]] double berry_curvature() const { return -2.0 * txy.imag(); }
  [[nodiscard]] Eigen::Matrix2d metric() const;
};

// Analytic dH/dk_x (or dk_y) of the chiral Bloch matrix. Only the B-A (x) or
// B-C (y) entries are nonzero.
Eigen::Matrix3cd bloch_hamiltonian_derivative(double kx, double ky, Axis axis, const LatticeSpec& spec);

// Sum-over-states form with analytic derivatives:
// T_ij = sum_{m != n} <m|d_i H|n><n|d_j H|m> / (E_m - E_n)^2.
// Throws NumericalError if another band comes within 1e-8 of band n.
QGTValue qgt_generic(double kx, double ky, int band, const LatticeSpec& spec);

// Flat-band closed form. With cx = cos(kx d/2), cy = cos(ky d/2):
// T_xx = (d^2/4) cy^2 / (cx^2 + cy^2)^2, T_yy likewise with cx,
// T_xy = -(d^2/4) cx cy exp(i (ky - kx) d / 2) / (cx^2 + cy^2)^2.
// Throws DivergenceError at the zone corner.
QGTValue qgt_closed_form(double kx, double ky, const LatticeSpec& spec);

struct QGTIntegrationOptions {
  int grid_size = 512;         // coarse grid; the fine grid is twice as dense
  double shift = 0.5;          // node offset in units of the grid step
  bool closed_form = false;    // integrand from the closed form instead of the sum over states
  double drift_tolerance = 1e-2;
};

struct QGTIntegrals {
  int coarse_grid = 0;
  int fine_grid = 0;
  double re_txy_coarse = 0.0;
  double re_txy_fine = 0.0;
  double re_txy = 0.0;          // Richardson extrapolation (4 I_fine - I_coarse) / 3
  double im_txy = 0.0;          // fine grid
  double berry_flux = 0.0;      // integral of Omega, fine grid
  double chern_raw = 0.0;       // berry_flux / 2 pi
  int chern = 0;
  double drift = 0.0;           // |re_txy - re_txy_fine|
};

// Brillouin-zone Riemann sums of the flat-band QGT on two shifted grids.
// Throws NumericalError if the extrapolated value drifts more than
// drift_tolerance from the fine-grid sum.
QGTIntegrals integrate_qgt(const QGTIntegrationOptions& options, const LatticeSpec& spec);

// Deterministic pairwise (cascade) summation.
double pairwise_sum(const double* values, std::size_t count);

} // namespace wqed
