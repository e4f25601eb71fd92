#include "liebwqed/geometry.hpp"

#include "liebwqed/bloch.hpp"
#include "liebwqed/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

namespace wqed {

namespace {

constexpr double kDegeneracyTolerance = 1e-8;

std::vector<double> grid_nodes(int grid_size, double shift, double d) {
  std::vector<double> k(static_cast<std::size_t>(grid_size));
  const double step = 2.0 * std::numbers::pi / (grid_size * d);
  for (int n = 0; n < grid_size; ++n) k[static_cast<std::size_t>(n)] = -std::numbers::pi / d + (n + shift) * step;
  return k;
}

struct GridSums {
  double re_txy = 0.0;
  double im_txy = 0.0;
};

GridSums riemann_sums(int grid_size, const QGTIntegrationOptions& options, const LatticeSpec& spec) {
  const double d = spec.lattice_constant;
  const auto k = grid_nodes(grid_size, options.shift, d);
  const double cell = std::pow(2.0 * std::numbers::pi / (grid_size * d), 2);
  std::vector<double> re_rows(k.size());
  std::vector<double> im_rows(k.size());
  std::vector<double> re(k.size());
  std::vector<double> im(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    for (std::size_t j = 0; j < k.size(); ++j) {
      const QGTValue t = options.closed_form ? qgt_closed_form(k[i], k[j], spec) : qgt_generic(k[i], k[j], 1, spec);
      re[j] = t.txy.real();
      im[j] = t.txy.imag();
    }
    re_rows[i] = pairwise_sum(re.data(), re.size());
    im_rows[i] = pairwise_sum(im.data(), im.size());
  }
  return {cell * pairwise_sum(re_rows.data(), re_rows.size()), cell * pairwise_sum(im_rows.data(), im_rows.size())};
}

} // namespace

Eigen::Matrix2d QGTValue::metric() const {
  Eigen::Matrix2d g;
  g << txx.real(), txy.real(), txy.real(), tyy.real();
  return g;
}

Eigen::Matrix3cd bloch_hamiltonian_derivative(double kx, double ky, Axis axis, const LatticeSpec& spec) {
  Eigen::Matrix3cd dh = Eigen::Matrix3cd::Zero();
  const int edge = axis == Axis::x ? 1 : 2;
  const auto dt = edge_coupling_derivative(axis == Axis::x ? kx : ky, spec);
  dh(0, edge) = dt;
  dh(edge, 0) = std::conj(dt);
  return dh;
}

QGTValue qgt_generic(double kx, double ky, int band, const LatticeSpec& spec) {
  if (band < 0 || band > 2) throw ValidationError("band index must be 0, 1 or 2");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> solver(bloch_hamiltonian(kx, ky, spec));
  if (solver.info() != Eigen::Success) throw NumericalError("Bloch eigensolver failed");
  const auto& e = solver.eigenvalues();
  const auto& v = solver.eigenvectors();
  const Eigen::Matrix3cd dx = v.adjoint() * bloch_hamiltonian_derivative(kx, ky, Axis::x, spec) * v;
  const Eigen::Matrix3cd dy = v.adjoint() * bloch_hamiltonian_derivative(kx, ky, Axis::y, spec) * v;

  QGTValue t{kx, ky, band, {}, {}, {}};
  for (int m = 0; m < 3; ++m) {
    if (m == band) continue;
    const double gap = e(m) - e(band);
    if (std::abs(gap) < kDegeneracyTolerance) {
      std::ostringstream msg;
      msg << "band " << band << " is degenerate with band " << m << " at k = (" << kx << ", " << ky << ")";
      throw NumericalError(msg.str());
    }
    const double w = 1.0 / (gap * gap);
    t.txx += w * dx(m, band) * dx(band, m);
    t.tyy += w * dy(m, band) * dy(band, m);
    t.txy += w * dx(m, band) * dy(band, m);
  }
  return t;
}

QGTValue qgt_closed_form(double kx, double ky, const LatticeSpec& spec) {
  if (!spec.chiral()) throw ValidationError("the closed-form QGT requires a chiral spec (k0 d = m pi)");
  const double d = spec.lattice_constant;
  const double cx = std::cos(0.5 * kx * d);
  const double cy = std::cos(0.5 * ky * d);
  const double s = cx * cx + cy * cy;
  if (s < 1e-24) throw DivergenceError("closed-form QGT is singular at the zone corner");
  const double pre = 0.25 * d * d / (s * s);
  QGTValue t{kx, ky, 1, {}, {}, {}};
  t.txx = pre * cy * cy;
  t.tyy = pre * cx * cx;
  t.txy = -pre * cx * cy * std::polar(1.0, 0.5 * (ky - kx) * d);
  return t;
}

QGTIntegrals integrate_qgt(const QGTIntegrationOptions& options, const LatticeSpec& spec) {
  spec.validate();
  if (!spec.chiral()) throw ValidationError("integrate_qgt requires a chiral spec (k0 d = m pi)");
  if (options.grid_size < 2) throw ValidationError("QGT integration grid must have at least 2 points per axis");
  if (!(options.shift > 0.0 && options.shift < 1.0)) throw ValidationError("grid shift must lie in (0, 1)");

  QGTIntegrals out;
  out.coarse_grid = options.grid_size;
  out.fine_grid = 2 * options.grid_size;
  const auto coarse = riemann_sums(out.coarse_grid, options, spec);
  const auto fine = riemann_sums(out.fine_grid, options, spec);
  out.re_txy_coarse = coarse.re_txy;
  out.re_txy_fine = fine.re_txy;
  out.re_txy = (4.0 * fine.re_txy - coarse.re_txy) / 3.0;
  out.im_txy = fine.im_txy;
  out.berry_flux = -2.0 * fine.im_txy;
  out.chern_raw = out.berry_flux / (2.0 * std::numbers::pi);
  out.chern = static_cast<int>(std::lround(out.chern_raw));
  out.drift = std::abs(out.re_txy - out.re_txy_fine);
  if (out.drift > options.drift_tolerance) {
    std::ostringstream msg;
    msg << "QGT integral not converged: extrapolated " << out.re_txy << " vs fine-grid " << out.re_txy_fine;
    throw NumericalError(msg.str());
  }
  return out;
}

double pairwise_sum(const double* values, std::size_t count) {
  if (count <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) s += values[i];
    return s;
  }
  const std::size_t half = count / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, count - half);
}

} // namespace wqed
