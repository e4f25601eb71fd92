#pragma once

#include "liebwqed/flatband.hpp"
#include "liebwqed/hamiltonian.hpp"
#include "liebwqed/pairs.hpp"

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace wqed {

enum class PropagationMethod : std::uint8_t { krylov, dense_eig };

PropagationMethod parse_method(const std::string& text);
std::string to_string(PropagationMethod m);

struct PropagationOptions {
  PropagationMethod method = PropagationMethod::krylov;
  double tol = 1e-10;        // local error per unit time (Krylov)
  int krylov_dim = 30;
  int max_rejections = 30;   // step-size reductions allowed per step
  long max_steps = 50'000'000;
};

struct PropagationStats {
  long steps = 0;
  long rejections = 0;
  long matvecs = 0;
  long happy_breakdowns = 0;
  double error_estimate = 0.0;      // accumulated local error estimates
  double eigenvector_condition = 0.0;  // dense_eig only
};

// exp(-i H t) v by restarted Arnoldi with adaptive step size (Expokit
// scheme: error estimate from the augmented Hessenberg matrix, step
// shrinking on rejection, happy breakdown when the Krylov space is exact).
class KrylovPropagator {
public:
  KrylovPropagator(const SparseMatrixC& h, const PropagationOptions& options);

  // psi <- exp(-i H dt) psi, dt >= 0.
  void advance(Eigen::VectorXcd& psi, double dt);
  [[nodiscard]] const PropagationStats& stats() const { return stats_; }

private:
  void apply(const Eigen::VectorXcd& x, Eigen::Ref<Eigen::VectorXcd> y);

  const SparseMatrixC& h_;
  PropagationOptions options_;
  double anorm_;
  double suggested_step_ = 0.0;
  Eigen::MatrixXcd basis_;
  PropagationStats stats_;
};

// Full non-Hermitian eigendecomposition H = V diag(lambda) V^-1; small
// lattices only. Throws NumericalError if the eigensolver fails or V is
// numerically singular (condition estimate above 1e12).
class DenseEigenPropagator {
public:
  explicit DenseEigenPropagator(const Eigen::MatrixXcd& h);

  // exp(-i H t) psi0.
  [[nodiscard]] Eigen::VectorXcd evolve(const Eigen::VectorXcd& psi0, double t) const;
  // Coefficients V^-1 psi0, reused across output times.
  [[nodiscard]] Eigen::VectorXcd coefficients(const Eigen::VectorXcd& psi0) const;
  [[nodiscard]] Eigen::VectorXcd synthesize(const Eigen::VectorXcd& coefficients, double t) const;
  [[nodiscard]] double condition() const { return condition_; }

private:
  Eigen::VectorXcd eigenvalues_;
  Eigen::MatrixXcd eigenvectors_;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
  double condition_ = 0.0;
};

using StateObserver = std::function<void(std::size_t index, double t, const Eigen::VectorXcd& psi)>;

// Calls `observer` at every output time (times ascending, times[0] = 0 gives
// psi0 itself).
PropagationStats propagate(const SparseOperator& h2, const Eigen::VectorXcd& psi0, const std::vector<double>& times,
                           const PropagationOptions& options, const StateObserver& observer);

enum class NormConvention : std::uint8_t { inner_product, squared };

struct EvolutionTrace {
  std::vector<double> times;
  std::vector<Eigen::VectorXcd> states;   // empty unless stored
  std::vector<double> fidelity;           // |<psi0|psi(t)>|^2
  std::vector<double> norm;               // <psi|psi>, or its square
  std::vector<double> flatband_projection;
  std::vector<double> dispersive_weight;  // empty without a classification
  std::vector<double> dark_weight;
  std::vector<std::vector<double>> populations;  // per-site, if requested
  PropagationStats stats;

  // Largest increase of N between consecutive output times.
  [[nodiscard]] double max_norm_increase() const;
  [[nodiscard]] bool norm_monotone(double tol = 1e-10) const { return max_norm_increase() <= tol; }
};

// Propagate and keep every state.
EvolutionTrace propagate(const SparseOperator& h2, const Eigen::VectorXcd& psi0, const std::vector<double>& times,
                         const PropagationOptions& options);

struct ObservableSetup {
  const FlatbandPairProjector* projector = nullptr;
  const FlatbandClassification* classification = nullptr;
  NormConvention norm_convention = NormConvention::inner_product;
  bool site_populations = false;
};

// Fill the observable series of a trace with stored states.
void observables(EvolutionTrace& trace, const Eigen::VectorXcd& psi0, const TwoExcitationBasis& basis,
                 const ObservableSetup& setup);

// Propagate and evaluate observables on the fly without storing states.
EvolutionTrace evolve(const SparseOperator& h2, const Eigen::VectorXcd& psi0, const std::vector<double>& times,
                      const PropagationOptions& options, const TwoExcitationBasis& basis, const ObservableSetup& setup);

// <n_i> for every site; sums to 2 <psi|psi>.
std::vector<double> site_population(const Eigen::VectorXcd& psi, const TwoExcitationBasis& basis);

struct SubspaceWeights {
  std::vector<double> dispersive;
  std::vector<double> dark;
};
SubspaceWeights subspace_weights(const EvolutionTrace& trace, const FlatbandPairProjector& projector,
                                 const FlatbandClassification& classification);

// Copy a state between two bases over the same sites; pairs missing from
// the target basis must carry zero amplitude.
Eigen::VectorXcd embed_state(const Eigen::VectorXcd& psi, const TwoExcitationBasis& from, const TwoExcitationBasis& to);

struct OscillationResult {
  double omega0 = 0.0;   // pi / t_min
  double t_min = 0.0;    // parabola-refined
  std::size_t index = 0; // sample of the discrete minimum
  double prominence = 0.0;
};

// First strict local minimum of F0 with prominence above `prominence`,
// refined by a three-point parabola. Throws NumericalError if there is none
// (time window too short).
OscillationResult oscillation_frequency(const std::vector<double>& times, const std::vector<double>& fidelity,
                                        double prominence = 1e-3);
OscillationResult oscillation_frequency(const EvolutionTrace& trace, double prominence = 1e-3);

// {0} followed by points_per_decade log-spaced times from t_first to t_max.
std::vector<double> log_time_grid(double t_max, int points_per_decade, double t_first = 1e-2);
std::vector<double> linear_time_grid(double t_begin, double t_end, int count);
std::vector<double> merge_time_grids(const std::vector<double>& a, const std::vector<double>& b);

// Exponential fit of a decaying series: log w = log A - rate t over samples
// with w > floor in [t_begin, t_end].
struct DecayFit {
  double rate = 0.0;
  double amplitude = 0.0;
  double r_squared = 0.0;
  int samples = 0;
};
DecayFit fit_exponential_decay(const std::vector<double>& times, const std::vector<double>& values, double t_begin,
                               double t_end, double floor = 1e-300);

enum class InitialStateKind : std::uint8_t {
  softcore_pair,  // c^dag_R0 c^dag_R1 |0> with the shared site doubly occupied
  hardcore_pair,  // spin version: doubly occupied component removed, renormalized
};
InitialStateKind parse_initial_state(const std::string& text);
std::string to_string(InitialStateKind k);

// Adjacent CLS pair centered in the array, R1 = R0 + x.
std::pair<CellIndex, CellIndex> central_cls_pair(const LatticeSpec& spec);

// Initial state expressed in `basis` (hardcore_pair is embedded with zero
// double occupancy when the basis is softcore).
Eigen::VectorXcd initial_state(InitialStateKind kind, const SiteTable& table, const TwoExcitationBasis& basis);

// Below plateau_min_interaction the sweep starts from `initial_small`, at or
// above it (and in the hardcore limit) from `initial_large`. The hardcore
// pair carries a ~10% non-flat-band admixture whose fast beating hides the
// slow interaction-driven minimum of F0 at small U.
struct SweepOptions {
  InitialStateKind initial_small = InitialStateKind::softcore_pair;
  InitialStateKind initial_large = InitialStateKind::hardcore_pair;
  PropagationOptions propagation;
  double initial_window = 20.0;   // first time window; doubled until a minimum is found
  double max_window = 2.0e4;
  int samples_per_window = 400;
  double prominence = 1e-3;
  double linear_range = 10.0;     // linear fit uses U <= linear_range * min U
  double plateau_min_interaction = 1.0;  // plateau uses U >= this, plus hardcore
  int threads = 1;                // concurrent U values
};

struct SweepPoint {
  double interaction = 0.0;  // +inf for hardcore
  bool hardcore = false;
  bool ok = false;
  InitialStateKind initial = InitialStateKind::softcore_pair;
  double omega0 = 0.0;
  double t_min = 0.0;
  double window = 0.0;
  std::string error;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  double slope = 0.0;                 // omega0 = slope * U, least squares through the origin
  double max_relative_residual = 0.0;
  int linear_count = 0;
  double plateau_mean = 0.0;
  double plateau_spread = 0.0;        // (max - min) / mean
  int plateau_count = 0;
};

constexpr double kHardcore = std::numeric_limits<double>::infinity();

// omega0 for every U (kHardcore selects the hardcore basis). Per-U failures
// are recorded in the point and the sweep continues.
SweepResult sweep_interaction(const std::vector<double>& interactions, const LatticeSpec& base,
                              const SweepOptions& options);

// Single-U building block of the sweep.
SweepPoint measure_oscillation(double interaction, const LatticeSpec& base, const SweepOptions& options);

} // namespace wqed
