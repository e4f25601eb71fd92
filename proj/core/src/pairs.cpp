#include "liebwqed/pairs.hpp"

#include "liebwqed/bloch.hpp"
#include "liebwqed/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace wqed {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

// Position of a sublattice inside the (B, A, C) Bloch vector.
int bloch_slot(Sublattice s) {
  switch (s) {
  case Sublattice::B: return 0;
  case Sublattice::A: return 1;
  case Sublattice::C: return 2;
  }
  return 0;
}

double threshold_for(double tol, double interaction) {
  return interaction != 0.0 ? tol * std::abs(interaction) : tol;
}

std::pair<int, int> symmetry_indices(SymmetryPoint p, int grid_size) {
  if (grid_size % 2 != 0) throw ValidationError("symmetry points X and M need an even pair grid");
  const int h = grid_size / 2;
  switch (p) {
  case SymmetryPoint::gamma: return {0, 0};
  case SymmetryPoint::x: return {h, 0};
  case SymmetryPoint::m: return {h, h};
  }
  return {0, 0};
}

} // namespace

Eigen::Vector3cd flatband_bloch_vector(double kx, double ky, const LatticeSpec& spec) {
  if (!spec.chiral()) throw ValidationError("the flat-band Bloch vector requires a chiral spec (k0 d = m pi)");
  const auto tx = edge_coupling(kx, spec);
  const auto ty = edge_coupling(ky, spec);
  const double n = std::sqrt(std::norm(tx) + std::norm(ty));
  if (n == 0.0) throw NumericalError("flat-band Bloch vector undefined: t_x = t_y = 0 (a = 0?)");
  return {0.0, -ty / n, tx / n};
}

PairGrid::PairGrid(int size, double lattice_constant)
    : size_(size), d_(lattice_constant), k_(shifted_grid(size, lattice_constant)) {}

double PairGrid::total_momentum(int j) const {
  const int w = ((j % size_) + size_) % size_;
  const int s = 2 * w > size_ ? w - size_ : w;
  return 2.0 * std::numbers::pi * s / (size_ * d_);
}

int PairGrid::partner(int n, int jx, int jy) const {
  const int nx = n / size_;
  const int ny = n % size_;
  const auto wrap = [this](int v) { return ((v % size_) + size_) % size_; };
  return wrap(jx - nx - 1) * size_ + wrap(jy - ny - 1);
}

namespace {

// Columns v(k1) v(K - k1), componentwise. With v(-k) = conj v(k) the
// interaction matrix is (U/Nc) f^H f.
Eigen::MatrixXcd pair_factor(int jx, int jy, const PairGrid& grid, const LatticeSpec& spec) {
  const int nc = grid.num_points();
  Eigen::MatrixXcd f(3, nc);
  for (int n = 0; n < nc; ++n) {
    const int p = grid.partner(n, jx, jy);
    const auto v1 = flatband_bloch_vector(grid.kx(n), grid.ky(n), spec);
    const auto v2 = flatband_bloch_vector(grid.kx(p), grid.ky(p), spec);
    const auto w1 = flatband_bloch_vector(-grid.kx(n), -grid.ky(n), spec);
    const auto w2 = flatband_bloch_vector(-grid.kx(p), -grid.ky(p), spec);
    const double gauge = std::max((w1 - v1.conjugate()).cwiseAbs().maxCoeff(), (w2 - v2.conjugate()).cwiseAbs().maxCoeff());
    if (gauge > 1e-12) {
      std::ostringstream msg;
      msg << "flat-band Bloch vector violates v(-k) = conj(v(k)) by " << gauge;
      throw NumericalError(msg.str());
    }
    f.col(n) = v1.cwiseProduct(v2);
  }
  return f;
}

} // namespace

Eigen::MatrixXcd interaction_matrix(int jx, int jy, const PairGrid& grid, double interaction,
                                    const LatticeSpec& spec) {
  const Eigen::MatrixXcd f = pair_factor(jx, jy, grid, spec);
  // literal form sum_beta v(-k1') v(-(K - k1')) v(k1) v(K - k1)
  const Eigen::MatrixXcd g = f.conjugate();
  Eigen::MatrixXcd v = (interaction / grid.num_points()) * (g.transpose() * f);
  const double defect = (v - v.adjoint()).cwiseAbs().maxCoeff();
  if (defect > 1e-10) {
    std::ostringstream msg;
    msg << "interaction matrix is not Hermitian (defect " << defect << "); check the Bloch-vector gauge";
    throw NumericalError(msg.str());
  }
  return v;
}

Eigen::MatrixXd exchange_symmetrizer(int jx, int jy, const PairGrid& grid) {
  const int nc = grid.num_points();
  std::vector<std::pair<int, int>> orbits;
  for (int n = 0; n < nc; ++n) {
    const int p = grid.partner(n, jx, jy);
    if (n <= p) orbits.emplace_back(n, p);
  }
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(nc, static_cast<Eigen::Index>(orbits.size()));
  for (std::size_t c = 0; c < orbits.size(); ++c) {
    const auto [a, b] = orbits[c];
    const auto col = static_cast<Eigen::Index>(c);
    if (a == b) {
      s(a, col) = 1.0;
    } else {
      s(a, col) = 1.0 / kSqrt2;
      s(b, col) = 1.0 / kSqrt2;
    }
  }
  return s;
}

PairSpectrumPoint pair_spectrum_at(int jx, int jy, const PairGrid& grid, double interaction, const LatticeSpec& spec,
                                   double dark_tolerance) {
  const Eigen::MatrixXd s = exchange_symmetrizer(jx, jy, grid);
  // S^T V S = (U/Nc) W^H W with W = f S of rank <= 2. The SVD of W gives the
  // eigenpairs directly; the tridiagonal QR on S^T V S stalls for some K.
  const Eigen::MatrixXcd w = pair_factor(jx, jy, grid, spec) * s;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(w, Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) throw NumericalError("pair interaction SVD failed");
  const Eigen::Index nb = s.cols();
  const double scale = interaction / grid.num_points();
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(nb);
  lambda.head(svd.singularValues().size()) = scale * svd.singularValues().array().square().matrix();
  std::vector<Eigen::Index> asc(static_cast<std::size_t>(nb));
  std::iota(asc.begin(), asc.end(), Eigen::Index{0});
  std::stable_sort(asc.begin(), asc.end(), [&](Eigen::Index a, Eigen::Index b) { return lambda(a) < lambda(b); });

  PairSpectrumPoint pt;
  pt.jx = jx;
  pt.jy = jy;
  pt.kx = grid.total_momentum(jx);
  pt.ky = grid.total_momentum(jy);
  pt.basis_size = static_cast<int>(s.cols());
  pt.eigenvalues.resize(nb);
  pt.eigenvectors.resize(nb, nb);
  for (Eigen::Index i = 0; i < nb; ++i) {
    pt.eigenvalues(i) = lambda(asc[static_cast<std::size_t>(i)]);
    pt.eigenvectors.col(i) = svd.matrixV().col(asc[static_cast<std::size_t>(i)]);
  }

  const double dark = threshold_for(dark_tolerance, interaction);
  pt.dark_count = static_cast<int>((pt.eigenvalues.array().abs() < dark).count());

  std::vector<int> order(static_cast<std::size_t>(pt.basis_size));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return std::abs(pt.eigenvalues(a)) > std::abs(pt.eigenvalues(b)); });
  if (pt.basis_size >= 2) {
    const int a = order[0];
    const int b = order[1];
    pt.upper_index = pt.eigenvalues(a) >= pt.eigenvalues(b) ? a : b;
    pt.lower_index = pt.upper_index == a ? b : a;
    pt.upper = pt.eigenvalues(pt.upper_index);
    pt.lower = pt.eigenvalues(pt.lower_index);
  } else {
    pt.upper = pt.lower = pt.eigenvalues(0);
  }
  if (pt.basis_size >= 3) {
    const double second = std::abs(pt.eigenvalues(order[1]));
    const double third = std::abs(pt.eigenvalues(order[2]));
    pt.ambiguous = second - third < 1e-6 * std::abs(interaction);
  }
  return pt;
}

PairSpectrum pair_spectrum(int grid_size, double interaction, const LatticeSpec& spec, double dark_tolerance) {
  spec.validate();
  const PairGrid grid(grid_size, spec.lattice_constant);
  PairSpectrum out{grid_size, interaction, {}};
  out.points.reserve(static_cast<std::size_t>(grid.num_points()));
  for (int jx = 0; jx < grid_size; ++jx) {
    for (int jy = 0; jy < grid_size; ++jy) out.points.push_back(pair_spectrum_at(jx, jy, grid, interaction, spec, dark_tolerance));
  }
  return out;
}

PairSpectrum pair_spectrum_path(int grid_size, double interaction, const LatticeSpec& spec, double dark_tolerance) {
  spec.validate();
  if (grid_size % 2 != 0) throw ValidationError("the Gamma-X-M path needs an even pair grid");
  const PairGrid grid(grid_size, spec.lattice_constant);
  const int h = grid_size / 2;
  std::vector<std::pair<int, int>> path;
  for (int j = 0; j < h; ++j) path.emplace_back(j, 0);
  for (int j = 0; j < h; ++j) path.emplace_back(h, j);
  for (int j = h; j >= 0; --j) path.emplace_back(j, j);
  PairSpectrum out{grid_size, interaction, {}};
  for (const auto& [jx, jy] : path) out.points.push_back(pair_spectrum_at(jx, jy, grid, interaction, spec, dark_tolerance));
  return out;
}

SymmetryPoint parse_symmetry_point(const std::string& text) {
  if (text == "G" || text == "Gamma" || text == "gamma") return SymmetryPoint::gamma;
  if (text == "X" || text == "x") return SymmetryPoint::x;
  if (text == "M" || text == "m") return SymmetryPoint::m;
  throw ValidationError("unknown symmetry point '" + text + "' (expected Gamma, X or M)");
}

std::string to_string(SymmetryPoint p) {
  switch (p) {
  case SymmetryPoint::gamma: return "Gamma";
  case SymmetryPoint::x: return "X";
  case SymmetryPoint::m: return "M";
  }
  return "?";
}

std::string to_string(Branch b) { return b == Branch::upper ? "upper" : "lower"; }

double RelativePopulation::at(int dx, int dy, Sublattice s) const {
  const int h = grid_size / 2;
  if (dx < -h || dx >= grid_size - h || dy < -h || dy >= grid_size - h) return 0.0;
  return probability[static_cast<std::size_t>((dx + h) * grid_size + (dy + h))][static_cast<std::size_t>(s)];
}

double RelativePopulation::weight_within(int radius) const {
  const int h = grid_size / 2;
  double w = 0.0;
  for (int dx = -h; dx < grid_size - h; ++dx) {
    for (int dy = -h; dy < grid_size - h; ++dy) {
      if (std::max(std::abs(dx), std::abs(dy)) > radius) continue;
      for (const auto s : {Sublattice::A, Sublattice::B, Sublattice::C}) w += at(dx, dy, s);
    }
  }
  return w;
}

RelativePopulation relative_population(SymmetryPoint point, Branch branch, int grid_size, const LatticeSpec& spec,
                                       Sublattice reference) {
  if (reference == Sublattice::B) throw ValidationError("flat-band pairs have no amplitude on B; pick A or C");
  spec.validate();
  const auto [jx, jy] = symmetry_indices(point, grid_size);
  const PairGrid grid(grid_size, spec.lattice_constant);
  const auto pt = pair_spectrum_at(jx, jy, grid, 1.0, spec);
  const Eigen::MatrixXd s = exchange_symmetrizer(jx, jy, grid);

  RelativePopulation out;
  out.point = point;
  out.branch = branch;
  out.reference = reference;
  out.grid_size = grid_size;
  out.energy = branch == Branch::upper ? pt.upper : pt.lower;
  out.degenerate = std::abs(pt.upper - pt.lower) < 1e-8;

  std::vector<Eigen::VectorXcd> states;
  if (out.degenerate) {
    states.emplace_back(s * pt.eigenvectors.col(pt.upper_index));
    states.emplace_back(s * pt.eigenvectors.col(pt.lower_index));
  } else {
    states.emplace_back(s * pt.eigenvectors.col(branch == Branch::upper ? pt.upper_index : pt.lower_index));
  }

  const int nc = grid.num_points();
  const int ref = bloch_slot(reference);
  std::vector<Eigen::Vector3cd> v(static_cast<std::size_t>(nc));
  for (int n = 0; n < nc; ++n) v[static_cast<std::size_t>(n)] = flatband_bloch_vector(grid.kx(n), grid.ky(n), spec);

  const int h = grid_size / 2;
  const double d = spec.lattice_constant;
  out.probability.assign(static_cast<std::size_t>(nc), {0.0, 0.0, 0.0});
  for (const auto& c : states) {
    for (int dx = -h; dx < grid_size - h; ++dx) {
      for (int dy = -h; dy < grid_size - h; ++dy) {
        Eigen::Vector3cd amp = Eigen::Vector3cd::Zero();
        for (int n = 0; n < nc; ++n) {
          const int p = grid.partner(n, jx, jy);
          const auto& v1 = v[static_cast<std::size_t>(n)];
          const auto& v2 = v[static_cast<std::size_t>(p)];
          const auto phase = std::polar(1.0, (grid.kx(p) * dx + grid.ky(p) * dy) * d);
          amp += (c(n) * v1(ref) * phase) * v2;
        }
        auto& cell = out.probability[static_cast<std::size_t>((dx + h) * grid_size + (dy + h))];
        for (const auto sub : {Sublattice::A, Sublattice::B, Sublattice::C}) {
          cell[static_cast<std::size_t>(sub)] += std::norm(amp(bloch_slot(sub)));
        }
      }
    }
  }
  double total = 0.0;
  for (const auto& cell : out.probability) total += cell[0] + cell[1] + cell[2];
  if (total <= 0.0) throw NumericalError("relative population vanishes for the chosen reference sublattice");
  for (auto& cell : out.probability) {
    for (auto& p : cell) p /= total;
  }
  return out;
}

double FlatbandClassification::dispersive_weight(const Eigen::VectorXcd& coordinates) const {
  return (dispersive.adjoint() * coordinates).squaredNorm();
}

double FlatbandClassification::dark_weight(const Eigen::VectorXcd& coordinates) const {
  return (dark.adjoint() * coordinates).squaredNorm();
}

FlatbandClassification classify_flatband_eigenstates(const FlatbandPairProjector& projector, double interaction,
                                                     double tol) {
  if (projector.basis().statistics() != Statistics::softcore) {
    throw ValidationError("flat-band classification needs the softcore (bosonic) basis");
  }
  if (interaction <= 0.0) throw ValidationError("flat-band classification needs U > 0");
  const auto& k = projector.kernel().basis;
  const int n = projector.kernel().num_sites();
  const int m = projector.kernel().dimension();
  Eigen::MatrixXcd w(n, projector.dimension());
  int col = 0;
  for (int a = 0; a < m; ++a) {
    for (int b = a; b < m; ++b) {
      w.col(col++) = k.col(a).cwiseProduct(k.col(b)) * (a == b ? 1.0 : kSqrt2);
    }
  }
  const Eigen::MatrixXcd mat = interaction * (w.adjoint() * w);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(mat);
  if (solver.info() != Eigen::Success) throw NumericalError("projected interaction eigensolver failed");

  FlatbandClassification out;
  out.interaction = interaction;
  out.threshold = tol * interaction;
  out.eigenvalues = solver.eigenvalues();
  const auto& e = out.eigenvalues;
  const Eigen::Index split = (e.array() <= out.threshold).count();  // ascending, so dark states come first
  out.dark = solver.eigenvectors().leftCols(split);
  out.dispersive = solver.eigenvectors().rightCols(e.size() - split);
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    if (e(i) > out.threshold / 100.0 && e(i) < out.threshold * 100.0) out.ambiguous = true;
  }
  return out;
}

} // namespace wqed
