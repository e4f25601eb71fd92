#include "liebwqed/dynamics.hpp"

#include "liebwqed/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <thread>

namespace wqed {

namespace {

constexpr double kStepSafety = 0.9;   // gamma in Expokit
constexpr double kErrorSlack = 1.2;   // delta in Expokit

// Two significant digits, rounded up, as in Expokit.
double round_step(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) return t;
  const double s = std::pow(10.0, std::floor(std::log10(t)) - 1.0);
  return std::ceil(t / s) * s;
}

double max_row_sum(const SparseMatrixC& h) {
  double best = 0.0;
  for (Eigen::Index r = 0; r < h.outerSize(); ++r) {
    double s = 0.0;
    for (SparseMatrixC::InnerIterator it(h, r); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

void require_ascending(const std::vector<double>& times) {
  if (times.empty()) throw ValidationError("no output times requested");
  if (times.front() < 0.0) throw ValidationError("output times must be nonnegative");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] >= times[i - 1])) throw ValidationError("output times must be ascending");
  }
}

struct MinimumCandidate {
  std::size_t index;
  double prominence;
};

std::optional<MinimumCandidate> first_prominent_minimum(const std::vector<double>& f, double prominence) {
  double left = f.empty() ? 0.0 : f.front();
  for (std::size_t i = 1; i + 1 < f.size(); ++i) {
    left = std::max(left, f[i - 1]);
    if (!(f[i] < f[i - 1] && f[i] < f[i + 1])) continue;
    double right = f[i];
    for (std::size_t j = i + 1; j < f.size() && f[j] >= f[i]; ++j) right = std::max(right, f[j]);
    const double p = std::min(left, right) - f[i];
    if (p > prominence) return MinimumCandidate{i, p};
  }
  return std::nullopt;
}

double parabola_vertex(double t0, double f0, double t1, double f1, double t2, double f2) {
  const double denom = (t0 - t1) * (t0 - t2) * (t1 - t2);
  if (denom == 0.0) return t1;
  const double a = (t2 * (f1 - f0) + t1 * (f0 - f2) + t0 * (f2 - f1)) / denom;
  const double b = (t2 * t2 * (f0 - f1) + t1 * t1 * (f2 - f0) + t0 * t0 * (f1 - f2)) / denom;
  if (!(a > 0.0)) return t1;
  return std::clamp(-b / (2.0 * a), t0, t2);
}

} // namespace

PropagationMethod parse_method(const std::string& text) {
  if (text == "krylov") return PropagationMethod::krylov;
  if (text == "dense_eig") return PropagationMethod::dense_eig;
  throw ValidationError("unknown propagation method '" + text + "' (expected krylov or dense_eig)");
}

std::string to_string(PropagationMethod m) { return m == PropagationMethod::krylov ? "krylov" : "dense_eig"; }

KrylovPropagator::KrylovPropagator(const SparseMatrixC& h, const PropagationOptions& options)
    : h_(h), options_(options), anorm_(max_row_sum(h)) {
  if (h.rows() != h.cols()) throw ValidationError("Krylov propagator needs a square operator");
  if (options_.krylov_dim < 2) throw ValidationError("Krylov subspace dimension must be at least 2");
  if (!(options_.tol > 0.0)) throw ValidationError("Krylov tolerance must be positive");
  options_.krylov_dim = static_cast<int>(std::min<Eigen::Index>(options_.krylov_dim, h.rows()));
  basis_.resize(h.rows(), options_.krylov_dim + 1);
}

void KrylovPropagator::apply(const Eigen::VectorXcd& x, Eigen::Ref<Eigen::VectorXcd> y) {
  y.noalias() = h_ * x;
  y *= Complex(0.0, -1.0);
  ++stats_.matvecs;
}

void KrylovPropagator::advance(Eigen::VectorXcd& psi, double dt) {
  if (dt < 0.0) throw ValidationError("Krylov propagation only runs forward in time");
  if (psi.size() != h_.rows()) throw ValidationError("state dimension does not match the operator");
  double beta = psi.norm();
  if (dt == 0.0 || beta == 0.0 || anorm_ == 0.0) return;

  const int m = options_.krylov_dim;
  const double tol = options_.tol;
  const double btol = 1e-12 * std::max(anorm_, 1.0);
  const double rndoff = anorm_ * std::numeric_limits<double>::epsilon();
  if (suggested_step_ <= 0.0) {
    const double fact = std::pow((m + 1) / std::numbers::e, m + 1) * std::sqrt(2.0 * std::numbers::pi * (m + 1));
    suggested_step_ = round_step((1.0 / anorm_) * std::pow((fact * tol) / (4.0 * beta * anorm_), 1.0 / m));
  }

  Eigen::MatrixXcd hess(m + 2, m + 2);
  Eigen::VectorXcd av(psi.size());
  double t_now = 0.0;
  while (t_now < dt) {
    if (++stats_.steps > options_.max_steps) throw NumericalError("Krylov propagation exceeded the step limit");
    double t_step = std::min(dt - t_now, suggested_step_);
    const bool clipped = t_step < suggested_step_;

    hess.setZero();
    basis_.col(0) = psi / beta;
    int k1 = 2;
    int mb = m;
    for (int j = 0; j < m; ++j) {
      apply(basis_.col(j), basis_.col(j + 1));
      auto w = basis_.col(j + 1);
      const auto prev = basis_.leftCols(j + 1);
      Eigen::VectorXcd coeff = prev.adjoint() * w;
      w.noalias() -= prev * coeff;
      const Eigen::VectorXcd again = prev.adjoint() * w;  // reorthogonalize once
      w.noalias() -= prev * again;
      coeff += again;
      hess.block(0, j, j + 1, 1) = coeff;
      const double s = w.norm();
      if (s < btol) {
        k1 = 0;
        mb = j + 1;
        t_step = dt - t_now;
        ++stats_.happy_breakdowns;
        break;
      }
      hess(j + 1, j) = s;
      w /= s;
    }
    double avnorm = 0.0;
    if (k1 != 0) {
      hess(m + 1, m) = 1.0;
      apply(basis_.col(m), av);
      avnorm = av.norm();
    }

    Eigen::MatrixXcd f;
    double err_loc = btol;
    double xm = 1.0 / m;
    for (int reject = 0;; ++reject) {
      const int mx = mb + k1;
      f = (t_step * hess.topLeftCorner(mx, mx)).exp();
      if (k1 == 0) break;
      const double phi1 = std::abs(beta * f(m, 0));
      const double phi2 = std::abs(beta * f(m + 1, 0) * avnorm);
      if (phi1 > 10.0 * phi2) {
        err_loc = phi2;
        xm = 1.0 / m;
      } else if (phi1 > phi2) {
        err_loc = (phi1 * phi2) / (phi1 - phi2);
        xm = 1.0 / m;
      } else {
        err_loc = phi1;
        xm = 1.0 / (m - 1);
      }
      if (err_loc <= kErrorSlack * t_step * tol) break;
      if (reject >= options_.max_rejections) {
        std::ostringstream msg;
        msg << "Krylov step rejected " << reject << " times at t = " << t_now << " (local error " << err_loc << ")";
        throw NumericalError(msg.str());
      }
      ++stats_.rejections;
      t_step = round_step(kStepSafety * t_step * std::pow(t_step * tol / err_loc, xm));
    }

    const int mx = mb + std::max(0, k1 - 1);
    psi = basis_.leftCols(mx) * (beta * f.col(0).head(mx));
    beta = psi.norm();
    t_now += t_step;
    stats_.error_estimate += std::max(err_loc, rndoff);
    const double next = round_step(kStepSafety * t_step * std::pow(t_step * tol / std::max(err_loc, rndoff), xm));
    if (k1 != 0 && !(clipped && next < suggested_step_)) suggested_step_ = next;
    if (beta == 0.0) return;
  }
}

DenseEigenPropagator::DenseEigenPropagator(const Eigen::MatrixXcd& h) {
  if (h.rows() != h.cols()) throw ValidationError("dense propagator needs a square operator");
  if (h.rows() > 6000) throw ValidationError("dense_eig is limited to dimensions <= 6000; use krylov");
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(h);
  if (solver.info() != Eigen::Success) throw NumericalError("dense eigensolver did not converge");
  eigenvalues_ = solver.eigenvalues();
  eigenvectors_ = solver.eigenvectors();
  const Eigen::BDCSVD<Eigen::MatrixXcd> svd(eigenvectors_);
  const auto& sigma = svd.singularValues();
  condition_ = sigma(sigma.size() - 1) > 0.0 ? sigma(0) / sigma(sigma.size() - 1) : std::numeric_limits<double>::infinity();
  if (!(condition_ < 1e12)) {
    std::ostringstream msg;
    msg << "eigenvector matrix is numerically singular (condition " << condition_ << "); operator is near-defective";
    throw NumericalError(msg.str());
  }
  lu_.compute(eigenvectors_);
}

Eigen::VectorXcd DenseEigenPropagator::coefficients(const Eigen::VectorXcd& psi0) const { return lu_.solve(psi0); }

Eigen::VectorXcd DenseEigenPropagator::synthesize(const Eigen::VectorXcd& coefficients, double t) const {
  const Eigen::VectorXcd phase = (Complex(0.0, -t) * eigenvalues_).array().exp();
  return eigenvectors_ * phase.cwiseProduct(coefficients);
}

Eigen::VectorXcd DenseEigenPropagator::evolve(const Eigen::VectorXcd& psi0, double t) const {
  return synthesize(coefficients(psi0), t);
}

PropagationStats propagate(const SparseOperator& h2, const Eigen::VectorXcd& psi0, const std::vector<double>& times,
                           const PropagationOptions& options, const StateObserver& observer) {
  require_ascending(times);
  if (psi0.size() != h2.dimension()) throw ValidationError("initial state does not match the Hamiltonian dimension");
  if (options.method == PropagationMethod::dense_eig) {
    const DenseEigenPropagator prop{Eigen::MatrixXcd(h2.matrix)};
    const Eigen::VectorXcd c = prop.coefficients(psi0);
    for (std::size_t i = 0; i < times.size(); ++i) {
      observer(i, times[i], times[i] == 0.0 ? psi0 : prop.synthesize(c, times[i]));
    }
    PropagationStats stats;
    stats.eigenvector_condition = prop.condition();
    return stats;
  }
  KrylovPropagator prop(h2.matrix, options);
  Eigen::VectorXcd psi = psi0;
  double t_prev = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    prop.advance(psi, times[i] - t_prev);
    t_prev = times[i];
    observer(i, times[i], psi);
  }
  return prop.stats();
}

double EvolutionTrace::max_norm_increase() const {
  double worst = 0.0;
  for (std::size_t i = 1; i < norm.size(); ++i) worst = std::max(worst, norm[i] - norm[i - 1]);
  return worst;
}

EvolutionTrace propagate(const SparseOperator& h2, const Eigen::VectorXcd& psi0, const std::vector<double>& times,
                         const PropagationOptions& options) {
  EvolutionTrace trace;
  trace.times = times;
  trace.states.reserve(times.size());
  trace.stats = propagate(h2, psi0, times, options,
                          [&](std::size_t, double, const Eigen::VectorXcd& psi) { trace.states.push_back(psi); });
  return trace;
}

namespace {

struct ObservableRow {
  double fidelity = 0.0;
  double norm = 0.0;
  double flatband = 0.0;
  double dispersive = 0.0;
  double dark = 0.0;
};

ObservableRow evaluate(const Eigen::VectorXcd& psi, const Eigen::VectorXcd& psi0, const ObservableSetup& setup) {
  ObservableRow row;
  row.fidelity = std::norm(psi0.dot(psi));
  const double n = psi.squaredNorm();
  row.norm = setup.norm_convention == NormConvention::squared ? n * n : n;
  if (setup.projector != nullptr) {
    const Eigen::VectorXcd y = setup.projector->coordinates(psi);
    row.flatband = y.squaredNorm();
    if (setup.classification != nullptr) {
      row.dispersive = setup.classification->dispersive_weight(y);
      row.dark = setup.classification->dark_weight(y);
    }
  }
  return row;
}

void check_setup(const Eigen::VectorXcd& psi0, const TwoExcitationBasis& basis, const ObservableSetup& setup) {
  if (psi0.size() != basis.dimension()) throw ValidationError("initial state does not match the basis");
  if (setup.projector != nullptr && setup.projector->basis().dimension() != basis.dimension()) {
    throw ValidationError("flat-band projector is defined on a different basis");
  }
  if (setup.classification != nullptr) {
    if (setup.projector == nullptr) throw ValidationError("subspace weights need the flat-band projector");
    if (setup.classification->eigenvalues.size() != setup.projector->dimension()) {
      throw ValidationError("classification does not match the flat-band projector");
    }
  }
}

void push(EvolutionTrace& trace, const ObservableRow& row, const ObservableSetup& setup) {
  trace.fidelity.push_back(row.fidelity);
  trace.norm.push_back(row.norm);
  if (setup.projector != nullptr) trace.flatband_projection.push_back(row.flatband);
  if (setup.classification != nullptr) {
    trace.dispersive_weight.push_back(row.dispersive);
    trace.dark_weight.push_back(row.dark);
  }
}

} // namespace

void observables(EvolutionTrace& trace, const Eigen::VectorXcd& psi0, const TwoExcitationBasis& basis,
                 const ObservableSetup& setup) {
  check_setup(psi0, basis, setup);
  if (trace.states.size() != trace.times.size()) throw ValidationError("trace does not hold a state per output time");
  trace.fidelity.clear();
  trace.norm.clear();
  trace.flatband_projection.clear();
  trace.dispersive_weight.clear();
  trace.dark_weight.clear();
  trace.populations.clear();
  for (const auto& psi : trace.states) {
    if (psi.size() != basis.dimension()) throw ValidationError("stored state does not match the basis");
    push(trace, evaluate(psi, psi0, setup), setup);
    if (setup.site_populations) trace.populations.push_back(site_population(psi, basis));
  }
}

EvolutionTrace evolve(const SparseOperator& h2, const Eigen::VectorXcd& psi0, const std::vector<double>& times,
                      const PropagationOptions& options, const TwoExcitationBasis& basis, const ObservableSetup& setup) {
  check_setup(psi0, basis, setup);
  EvolutionTrace trace;
  trace.times = times;
  trace.stats = propagate(h2, psi0, times, options, [&](std::size_t, double, const Eigen::VectorXcd& psi) {
    push(trace, evaluate(psi, psi0, setup), setup);
    if (setup.site_populations) trace.populations.push_back(site_population(psi, basis));
  });
  return trace;
}

std::vector<double> site_population(const Eigen::VectorXcd& psi, const TwoExcitationBasis& basis) {
  if (psi.size() != basis.dimension()) throw ValidationError("state does not match the basis");
  std::vector<double> n(static_cast<std::size_t>(basis.num_sites()), 0.0);
  for (int k = 0; k < basis.dimension(); ++k) {
    const auto [i, j] = basis.pair(k);
    const double p = std::norm(psi(k));
    n[static_cast<std::size_t>(i)] += p;
    n[static_cast<std::size_t>(j)] += p;
  }
  return n;
}

SubspaceWeights subspace_weights(const EvolutionTrace& trace, const FlatbandPairProjector& projector,
                                 const FlatbandClassification& classification) {
  if (trace.states.empty()) throw ValidationError("subspace weights need stored states");
  SubspaceWeights w;
  for (const auto& psi : trace.states) {
    const Eigen::VectorXcd y = projector.coordinates(psi);
    w.dispersive.push_back(classification.dispersive_weight(y));
    w.dark.push_back(classification.dark_weight(y));
  }
  return w;
}

Eigen::VectorXcd embed_state(const Eigen::VectorXcd& psi, const TwoExcitationBasis& from, const TwoExcitationBasis& to) {
  if (from.num_sites() != to.num_sites()) throw ValidationError("bases cover different numbers of sites");
  if (psi.size() != from.dimension()) throw ValidationError("state does not match the source basis");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(to.dimension());
  for (int k = 0; k < from.dimension(); ++k) {
    const auto [i, j] = from.pair(k);
    const int target = to.index_of(i, j);
    if (target < 0) {
      if (psi(k) != Complex(0.0)) throw ValidationError("state has weight on pairs the target basis excludes");
      continue;
    }
    out(target) = psi(k);
  }
  return out;
}

OscillationResult oscillation_frequency(const std::vector<double>& times, const std::vector<double>& fidelity,
                                        double prominence) {
  if (times.size() != fidelity.size()) throw ValidationError("times and fidelity differ in length");
  const auto hit = first_prominent_minimum(fidelity, prominence);
  if (!hit) {
    std::ostringstream msg;
    msg << "F0 has no local minimum with prominence > " << prominence << " before t = "
        << (times.empty() ? 0.0 : times.back()) << "; extend the time window";
    throw NumericalError(msg.str());
  }
  const std::size_t i = hit->index;
  OscillationResult r;
  r.index = i;
  r.prominence = hit->prominence;
  r.t_min = parabola_vertex(times[i - 1], fidelity[i - 1], times[i], fidelity[i], times[i + 1], fidelity[i + 1]);
  if (!(r.t_min > 0.0)) throw NumericalError("F0 minimum at t = 0");
  r.omega0 = std::numbers::pi / r.t_min;
  return r;
}

OscillationResult oscillation_frequency(const EvolutionTrace& trace, double prominence) {
  return oscillation_frequency(trace.times, trace.fidelity, prominence);
}

std::vector<double> log_time_grid(double t_max, int points_per_decade, double t_first) {
  if (!(t_max > 0.0) || !(t_first > 0.0) || points_per_decade < 1) {
    throw ValidationError("log time grid needs t_max > 0, t_first > 0 and at least one point per decade");
  }
  std::vector<double> t{0.0};
  if (t_first >= t_max) {
    t.push_back(t_max);
    return t;
  }
  const double decades = std::log10(t_max / t_first);
  const int count = static_cast<int>(std::ceil(decades * points_per_decade));
  for (int k = 0; k < count; ++k) t.push_back(t_first * std::pow(10.0, static_cast<double>(k) / points_per_decade));
  t.push_back(t_max);
  return t;
}

std::vector<double> linear_time_grid(double t_begin, double t_end, int count) {
  if (count < 2 || !(t_end > t_begin)) throw ValidationError("linear time grid needs count >= 2 and t_end > t_begin");
  std::vector<double> t(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) t[static_cast<std::size_t>(k)] = t_begin + (t_end - t_begin) * k / (count - 1);
  return t;
}

std::vector<double> merge_time_grids(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> t(a);
  t.insert(t.end(), b.begin(), b.end());
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end(), [](double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(1.0, std::abs(y)); }),
          t.end());
  return t;
}

DecayFit fit_exponential_decay(const std::vector<double>& times, const std::vector<double>& values, double t_begin,
                               double t_end, double floor) {
  if (times.size() != values.size()) throw ValidationError("times and values differ in length");
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t_begin || times[i] > t_end || !(values[i] > floor)) continue;
    x.push_back(times[i]);
    y.push_back(std::log(values[i]));
  }
  DecayFit fit;
  fit.samples = static_cast<int>(x.size());
  if (x.size() < 3) throw NumericalError("exponential fit needs at least 3 positive samples in the window");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw NumericalError("exponential fit window has a single distinct time");
  const double slope = sxy / sxx;
  fit.rate = -slope;
  fit.amplitude = std::exp(my - slope * mx);
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (my + slope * (x[i] - mx));
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

InitialStateKind parse_initial_state(const std::string& text) {
  if (text == "softcore_pair" || text == "softcore") return InitialStateKind::softcore_pair;
  if (text == "hardcore_pair" || text == "hardcore") return InitialStateKind::hardcore_pair;
  throw ValidationError("unknown initial state '" + text + "' (expected softcore_pair or hardcore_pair)");
}

std::string to_string(InitialStateKind k) {
  return k == InitialStateKind::softcore_pair ? "softcore_pair" : "hardcore_pair";
}

std::pair<CellIndex, CellIndex> central_cls_pair(const LatticeSpec& spec) {
  if (spec.num_cells_x < 3 || spec.num_cells_y < 2) {
    throw ValidationError("two adjacent CLS need at least 3 x 2 cells");
  }
  const CellIndex r0{std::max(1, spec.num_cells_x / 2 - 1), std::max(1, spec.num_cells_y / 2)};
  return {r0, CellIndex{r0.x + 1, r0.y}};
}

Eigen::VectorXcd initial_state(InitialStateKind kind, const SiteTable& table, const TwoExcitationBasis& basis) {
  const auto [r0, r1] = central_cls_pair(table.spec());
  if (kind == InitialStateKind::softcore_pair) {
    if (basis.statistics() != Statistics::softcore) {
      throw ValidationError("the softcore CLS pair needs a softcore basis (it occupies one site twice)");
    }
    return cls_initial_state(r0, r1, table, basis);
  }
  if (basis.statistics() == Statistics::hardcore) return cls_initial_state(r0, r1, table, basis);
  const TwoExcitationBasis spins(basis.num_sites(), Statistics::hardcore);
  return embed_state(cls_initial_state(r0, r1, table, spins), spins, basis);
}

SweepPoint measure_oscillation(double interaction, const LatticeSpec& base, const SweepOptions& options) {
  SweepPoint point;
  point.interaction = interaction;
  point.hardcore = std::isinf(interaction);
  point.initial = point.hardcore || interaction >= options.plateau_min_interaction ? options.initial_large
                                                                                   : options.initial_small;
  try {
    if (!point.hardcore && !(interaction > 0.0)) throw ValidationError("sweep values must be positive (U = 0 has no dynamics)");
    LatticeSpec spec = base;
    spec.statistics = point.hardcore ? Statistics::hardcore : Statistics::softcore;
    spec.interaction = point.hardcore ? 0.0 : interaction;
    spec.validate();
    const SiteTable table(spec);
    const WaveguideNetwork network(table);
    const auto h1 = single_excitation_hamiltonian(network, spec);
    const TwoExcitationBasis basis(table.size(), spec.statistics);
    const auto h2 = two_excitation_hamiltonian(h1, spec, basis);
    const Eigen::VectorXcd psi0 = initial_state(point.initial, table, basis);

    std::optional<DenseEigenPropagator> dense;
    std::optional<KrylovPropagator> krylov;
    Eigen::VectorXcd coeff;
    if (options.propagation.method == PropagationMethod::dense_eig) {
      dense.emplace(Eigen::MatrixXcd(h2.matrix));
      coeff = dense->coefficients(psi0);
    } else {
      krylov.emplace(h2.matrix, options.propagation);
    }

    std::vector<double> times{0.0};
    std::vector<double> fidelity{1.0};
    Eigen::VectorXcd psi = psi0;
    double window = options.initial_window;
    double t = 0.0;
    for (;;) {
      const double dt = window / options.samples_per_window;
      const double start = t;
      for (int k = 1; t < window * (1.0 - 1e-12); ++k) {
        const double next = std::min(window, start + k * dt);
        if (dense) {
          psi = dense->synthesize(coeff, next);
        } else {
          krylov->advance(psi, next - t);
        }
        t = next;
        times.push_back(t);
        fidelity.push_back(std::norm(psi0.dot(psi)));
      }
      if (first_prominent_minimum(fidelity, options.prominence)) break;
      if (window >= options.max_window) {
        std::ostringstream msg;
        msg << "no F0 minimum before t = " << window;
        throw NumericalError(msg.str());
      }
      window = std::min(2.0 * window, options.max_window);
    }
    const auto osc = oscillation_frequency(times, fidelity, options.prominence);
    point.omega0 = osc.omega0;
    point.t_min = osc.t_min;
    point.window = window;
    point.ok = true;
  } catch (const std::exception& e) {
    point.error = e.what();
  }
  return point;
}

SweepResult sweep_interaction(const std::vector<double>& interactions, const LatticeSpec& base,
                              const SweepOptions& options) {
  if (interactions.empty()) throw ValidationError("empty interaction list");
  SweepResult result;
  result.points.resize(interactions.size());
  const int workers = std::max(1, std::min<int>(options.threads, static_cast<int>(interactions.size())));
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < interactions.size(); i = next++) {
      result.points[i] = measure_oscillation(interactions[i], base, options);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  double u_min = std::numeric_limits<double>::infinity();
  for (const auto& p : result.points) {
    if (p.ok && !p.hardcore) u_min = std::min(u_min, p.interaction);
  }
  double suu = 0.0;
  double suw = 0.0;
  std::vector<const SweepPoint*> linear;
  std::vector<double> plateau;
  for (const auto& p : result.points) {
    if (!p.ok) continue;
    if (p.hardcore || p.interaction >= options.plateau_min_interaction) {
      plateau.push_back(p.omega0);
    } else if (p.interaction <= options.linear_range * u_min) {
      linear.push_back(&p);
      suu += p.interaction * p.interaction;
      suw += p.interaction * p.omega0;
    }
  }
  result.linear_count = static_cast<int>(linear.size());
  if (suu > 0.0) {
    result.slope = suw / suu;
    for (const auto* p : linear) {
      const double fit = result.slope * p->interaction;
      result.max_relative_residual = std::max(result.max_relative_residual, std::abs(p->omega0 - fit) / fit);
    }
  }
  result.plateau_count = static_cast<int>(plateau.size());
  if (!plateau.empty()) {
    const auto [lo, hi] = std::minmax_element(plateau.begin(), plateau.end());
    double mean = 0.0;
    for (const double w : plateau) mean += w;
    mean /= static_cast<double>(plateau.size());
    result.plateau_mean = mean;
    result.plateau_spread = (*hi - *lo) / mean;
  }
  return result;
}

} // namespace wqed
