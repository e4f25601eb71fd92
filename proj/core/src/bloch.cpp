#include "liebwqed/bloch.hpp"

#include "liebwqed/errors.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace wqed {

namespace {

constexpr double kPoleTolerance = 1e-12;

double checked_cot(double x, const char* what) {
  const double s = std::sin(x);
  if (std::abs(s) < kPoleTolerance) throw DivergenceError(std::string(what) + ": cot pole at argument " + std::to_string(x));
  return std::cos(x) / s;
}

double checked_tan(double x, const char* what) {
  const double c = std::cos(x);
  if (std::abs(c) < kPoleTolerance) throw DivergenceError(std::string(what) + ": tan pole at argument " + std::to_string(x));
  return std::sin(x) / c;
}

void fix_gauge(Eigen::Ref<Eigen::Vector3cd> v) {
  Eigen::Index best = 0;
  v.cwiseAbs().maxCoeff(&best);
  const auto phase = v(best) / std::abs(v(best));
  v /= phase;
  v(best) = std::abs(v(best));
}

} // namespace

double epsilon_1d(double k, const LatticeSpec& spec) {
  const double d = spec.lattice_constant;
  const double k0 = spec.resonant_wavevector;
  return 0.25 * spec.gamma *
         (checked_cot(0.5 * (k0 + k) * d, "epsilon_1d") + checked_cot(0.5 * (k0 - k) * d, "epsilon_1d"));
}

std::complex<double> edge_coupling(double k, const LatticeSpec& spec) {
  const double d = spec.lattice_constant;
  const double s = std::sin(spec.resonant_wavevector * spec.intracell_distance);
  if (spec.chiral()) {
    return 0.5 * spec.gamma * s * std::complex<double>(1.0, checked_tan(0.5 * k * d, "edge_coupling"));
  }
  const double k0 = spec.resonant_wavevector;
  const double c = std::cos(k0 * spec.intracell_distance);
  const double cot_plus = checked_cot(0.5 * (k0 + k) * d, "edge_coupling");
  const double cot_minus = checked_cot(0.5 * (k0 - k) * d, "edge_coupling");
  const double eps = 0.25 * spec.gamma * (cot_plus + cot_minus);
  return {eps * c + 0.5 * spec.gamma * s, -0.25 * spec.gamma * s * (cot_plus - cot_minus)};
}

std::complex<double> edge_coupling_derivative(double k, const LatticeSpec& spec) {
  if (!spec.chiral()) throw ValidationError("edge_coupling_derivative requires a chiral spec (k0 d = m pi)");
  const double d = spec.lattice_constant;
  const double c = std::cos(0.5 * k * d);
  if (std::abs(c) < kPoleTolerance) throw DivergenceError("edge_coupling_derivative: tan pole at zone edge");
  const double s = std::sin(spec.resonant_wavevector * spec.intracell_distance);
  return {0.0, 0.5 * spec.gamma * s * 0.5 * d / (c * c)};
}

Eigen::Matrix3cd bloch_hamiltonian(double kx, double ky, const LatticeSpec& spec) {
  const auto tx = edge_coupling(kx, spec);
  const auto ty = edge_coupling(ky, spec);
  Eigen::Matrix3cd h = Eigen::Matrix3cd::Zero();
  h(0, 1) = tx;
  h(0, 2) = ty;
  h(1, 0) = std::conj(tx);
  h(2, 0) = std::conj(ty);
  if (!spec.chiral()) {
    const double ex = epsilon_1d(kx, spec);
    const double ey = epsilon_1d(ky, spec);
    h(0, 0) = ex + ey;
    h(1, 1) = ex;
    h(2, 2) = ey;
  }
  return h;
}

BlochModel::BlochModel(const LatticeSpec& spec) : spec_(spec), chiral_(spec.chiral()) { spec_.validate(); }

std::vector<double> shifted_grid(int grid_size, double lattice_constant) {
  if (grid_size < 1) throw ValidationError("grid size must be positive");
  std::vector<double> k(static_cast<std::size_t>(grid_size));
  const double step = 2.0 * std::numbers::pi / (grid_size * lattice_constant);
  for (int n = 0; n < grid_size; ++n) {
    k[static_cast<std::size_t>(n)] = -std::numbers::pi / lattice_constant + (n + 0.5) * step;
  }
  // Exact zero for the central node of odd grids.
  if (grid_size % 2 == 1) k[static_cast<std::size_t>(grid_size / 2)] = 0.0;
  return k;
}

BandPoint diagonalize_bloch(double kx, double ky, const LatticeSpec& spec) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> solver(bloch_hamiltonian(kx, ky, spec));
  if (solver.info() != Eigen::Success) throw NumericalError("Bloch eigensolver failed");
  BandPoint p;
  p.kx = kx;
  p.ky = ky;
  p.energies = solver.eigenvalues();
  p.eigenvectors = solver.eigenvectors();
  for (int n = 0; n < 3; ++n) fix_gauge(p.eigenvectors.col(n));
  return p;
}

BandStructure band_structure(int grid_size, const LatticeSpec& spec) {
  spec.validate();
  const auto k = shifted_grid(grid_size, spec.lattice_constant);
  BandStructure bands;
  bands.grid_size = grid_size;
  bands.points.reserve(k.size() * k.size());
  for (const double kx : k) {
    for (const double ky : k) bands.points.push_back(diagonalize_bloch(kx, ky, spec));
  }
  return bands;
}

BandExtremum band_minimum(const BandStructure& bands, int band, const LatticeSpec& spec) {
  if (bands.points.empty()) throw ValidationError("empty band structure");
  if (band < 0 || band > 2) throw ValidationError("band index must be 0, 1 or 2");
  const BandPoint* best = &bands.points.front();
  for (const auto& p : bands.points) {
    if (p.energies(band) < best->energies(band)) best = &p;
  }
  const auto energy = [&](double kx, double ky) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> solver(bloch_hamiltonian(kx, ky, spec), Eigen::EigenvaluesOnly);
    return solver.eigenvalues()(band);
  };

  // Compass search from the best sample; the step starts at the grid spacing.
  double kx = best->kx;
  double ky = best->ky;
  double value = best->energies(band);
  double step = 2.0 * std::numbers::pi / (bands.grid_size * spec.lattice_constant);
  const double edge = std::numbers::pi / spec.lattice_constant;
  constexpr std::array<std::array<int, 2>, 4> moves{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
  while (step > 1e-11) {
    bool improved = false;
    for (const auto& m : moves) {
      const double nx = kx + m[0] * step;
      const double ny = ky + m[1] * step;
      if (std::abs(nx) >= edge || std::abs(ny) >= edge) continue;
      const double e = energy(nx, ny);
      if (e < value) {
        kx = nx;
        ky = ny;
        value = e;
        improved = true;
      }
    }
    if (!improved) step *= 0.5;
  }
  return {kx, ky, value};
}

double band_gap(const LatticeSpec& spec) {
  if (!spec.chiral()) throw ValidationError("band_gap is defined for chiral specs (k0 d = m pi) only");
  return spec.gamma / std::numbers::sqrt2 * std::abs(std::sin(spec.resonant_wavevector * spec.intracell_distance));
}

} // namespace wqed
