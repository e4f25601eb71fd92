#include "cli.hpp"

#include "liebwqed/bloch.hpp"
#include "liebwqed/dynamics.hpp"
#include "liebwqed/errors.hpp"
#include "liebwqed/flatband.hpp"
#include "liebwqed/geometry.hpp"
#include "liebwqed/hamiltonian.hpp"
#include "liebwqed/lattice.hpp"
#include "liebwqed/pairs.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <unistd.h>

namespace wqed::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> d{
      // lattice
      {"cells", "8x8"},
      {"d", "1"},
      {"a", "0.5"},
      {"k0", "pi"},
      {"gamma", "1"},
      {"U", "0.1"},
      // bands / qgt
      {"grid", "64"},
      {"band", "1"},
      {"integrate", "false"},
      {"shift", "0.5"},
      {"closed_form", "false"},
      // pair-spectrum
      {"pair_grid", "16"},
      {"reference", "A"},
      // evolve
      {"tmax", "10000"},
      {"t_first", "0.01"},
      {"points_per_decade", "20"},
      {"linear_tmax", "1000"},
      {"linear_points", "400"},
      {"method", "krylov"},
      {"tol", "1e-10"},
      {"krylov_dim", "30"},
      {"initial_state", "auto"},
      {"norm", "inner_product"},
      {"export_matrices", "false"},
      // sweep-u
      {"u_list", "0.025,0.05,0.1,0.2,5,10,hardcore"},
      {"initial_small", "softcore_pair"},
      {"initial_large", "hardcore_pair"},
      {"plateau_min", "1"},
      {"linear_range", "10"},
      {"window", "20"},
      {"max_window", "20000"},
      {"samples", "400"},
      {"prominence", "1e-3"},
      // run
      {"out", "out"},
      {"threads", "1"},
      {"seed", "0"},
  };
  return d;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

double json_number(double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::quiet_NaN(); }

std::string sha256(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw NumericalError("SHA-256 digest failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

// Collects outputs of one run; every file goes through temp + rename.
class OutputDir {
public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::string& content) {
    const fs::path target = dir_ / name;
    const fs::path tmp = dir_ / ("." + name + ".tmp." + std::to_string(::getpid()));
    {
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) throw ValidationError("cannot open " + tmp.string() + " for writing");
      f << content;
      if (!f.flush()) throw ValidationError("failed writing " + tmp.string());
    }
    fs::rename(tmp, target);
    if (name != "manifest.json") records_.push_back({name, sha256(content), content.size()});
  }

  [[nodiscard]] ordered_json manifest_entries() const {
    ordered_json list = ordered_json::array();
    for (const auto& r : records_) list.push_back({{"path", r.name}, {"sha256", r.digest}, {"bytes", r.bytes}});
    return list;
  }

  [[nodiscard]] const fs::path& path() const { return dir_; }

private:
  struct Record {
    std::string name;
    std::string digest;
    std::size_t bytes;
  };
  fs::path dir_;
  std::vector<Record> records_;
};

struct Context {
  std::string command;
  RunConfig config;
  std::ostream& out;
};

bool hardcore_requested(const RunConfig& c) { return c.get("U") == "hardcore"; }

LatticeSpec lattice_from(const RunConfig& c) {
  LatticeSpec spec;
  const auto& cells = c.get("cells");
  const auto x = cells.find('x');
  if (x == std::string::npos) throw ValidationError("cells must look like NxM, got '" + cells + "'");
  try {
    std::size_t used = 0;
    spec.num_cells_x = std::stoi(cells.substr(0, x), &used);
    if (used != x) throw std::invalid_argument(cells);
    const auto rest = cells.substr(x + 1);
    spec.num_cells_y = std::stoi(rest, &used);
    if (used != rest.size()) throw std::invalid_argument(cells);
  } catch (const std::logic_error&) {
    throw ValidationError("cells must look like NxM, got '" + cells + "'");
  }
  spec.lattice_constant = c.get_double("d");
  spec.intracell_distance = c.get_double("a");
  spec.resonant_wavevector = c.get_double("k0");
  spec.gamma = c.get_double("gamma");
  if (hardcore_requested(c)) {
    spec.statistics = Statistics::hardcore;
    spec.interaction = 0.0;
  } else {
    spec.statistics = Statistics::softcore;
    spec.interaction = c.get_double("U");
  }
  spec.validate();
  return spec;
}

PropagationOptions propagation_from(const RunConfig& c) {
  PropagationOptions o;
  o.method = parse_method(c.get("method"));
  o.tol = c.get_double("tol");
  o.krylov_dim = c.get_int("krylov_dim");
  if (!(o.tol > 0.0)) throw ValidationError("tol must be positive");
  return o;
}

Sublattice parse_sublattice(const std::string& s) {
  if (s == "A") return Sublattice::A;
  if (s == "B") return Sublattice::B;
  if (s == "C") return Sublattice::C;
  throw ValidationError("reference must be A, B or C, got '" + s + "'");
}

// ---------------------------------------------------------------- bands

ordered_json cmd_bands(Context& ctx, OutputDir& dir) {
  const auto spec = lattice_from(ctx.config);
  const int grid = ctx.config.get_int("grid");
  const auto bands = band_structure(grid, spec);
  std::ostringstream csv;
  csv << "kx,ky,e1,e2,e3\n";
  double flat = 0.0;
  double e3_grid = std::numeric_limits<double>::infinity();
  for (const auto& p : bands.points) {
    csv << fmt(p.kx) << ',' << fmt(p.ky) << ',' << fmt(p.energies(0)) << ',' << fmt(p.energies(1)) << ','
        << fmt(p.energies(2)) << '\n';
    flat = std::max(flat, std::abs(p.energies(1)));
    e3_grid = std::min(e3_grid, p.energies(2));
  }
  dir.write("bands.csv", csv.str());
  const auto refined = band_minimum(bands, 2, spec);
  ordered_json summary{{"grid", grid},
                       {"chiral", spec.chiral()},
                       {"max_abs_middle_band", flat},
                       {"min_upper_band_grid", e3_grid},
                       {"min_upper_band", refined.energy},
                       {"min_upper_band_k", {refined.kx, refined.ky}}};
  if (spec.chiral()) summary["gap_formula"] = band_gap(spec);
  dir.write("bands_summary.json", summary.dump(2) + "\n");
  ctx.out << "bands: " << bands.points.size() << " k-points, max|e2| = " << flat << ", min e3 = " << fmt(refined.energy);
  if (spec.chiral()) ctx.out << " (gap formula " << fmt(band_gap(spec)) << ")";
  ctx.out << '\n';
  return summary;
}

// ---------------------------------------------------------------- qgt

ordered_json cmd_qgt(Context& ctx, OutputDir& dir) {
  const auto spec = lattice_from(ctx.config);
  if (ctx.config.get_bool("integrate")) {
    QGTIntegrationOptions o;
    o.grid_size = ctx.config.explicitly_set("grid") ? ctx.config.get_int("grid") : 512;
    o.shift = ctx.config.get_double("shift");
    o.closed_form = ctx.config.get_bool("closed_form");
    const auto r = integrate_qgt(o, spec);
    ordered_json j{{"coarse_grid", r.coarse_grid},
                   {"fine_grid", r.fine_grid},
                   {"shift", o.shift},
                   {"integrand", o.closed_form ? "closed_form" : "sum_over_states"},
                   {"re_txy_coarse", r.re_txy_coarse},
                   {"re_txy_fine", r.re_txy_fine},
                   {"re_txy", r.re_txy},
                   {"im_txy", r.im_txy},
                   {"berry_flux", r.berry_flux},
                   {"chern_raw", r.chern_raw},
                   {"chern", r.chern},
                   {"drift", r.drift},
                   {"minus_pi_over_2", -std::numbers::pi / 2.0}};
    dir.write("qgt_integrals.json", j.dump(2) + "\n");
    ctx.out << std::setprecision(10) << "integral Re T_xy = " << r.re_txy << " (grids " << r.coarse_grid << "/"
            << r.fine_grid << ", -pi/2 = " << -std::numbers::pi / 2.0 << ")\n"
            << "integral Im T_xy = " << r.im_txy << "\n"
            << "integral Omega   = " << r.berry_flux << "\n"
            << "Chern number     = " << r.chern << " (raw " << r.chern_raw << ")\n";
    return j;
  }
  const int grid = ctx.config.get_int("grid");
  const int band = ctx.config.get_int("band");
  const auto k = shifted_grid(grid, spec.lattice_constant);
  std::ostringstream csv;
  csv << "kx,ky,ReTxx,ReTyy,ReTxy,ImTxy\n";
  for (const double kx : k) {
    for (const double ky : k) {
      const auto t = qgt_generic(kx, ky, band, spec);
      csv << fmt(kx) << ',' << fmt(ky) << ',' << fmt(t.txx.real()) << ',' << fmt(t.tyy.real()) << ','
          << fmt(t.txy.real()) << ',' << fmt(t.txy.imag()) << '\n';
    }
  }
  dir.write("qgt.csv", csv.str());
  ctx.out << "qgt: band " << band << " on " << grid << "x" << grid << " shifted grid\n";
  return {{"grid", grid}, {"band", band}};
}

// ---------------------------------------------------------------- cls-check

ordered_json cmd_cls_check(Context& ctx, OutputDir& dir) {
  const auto spec = lattice_from(ctx.config);
  const SiteTable table(spec);
  const WaveguideNetwork network(table);
  const auto h1 = single_excitation_hamiltonian(network, spec);
  {
    std::ostringstream sites;
    table.write_csv(sites);
    dir.write("sites.csv", sites.str());
  }
  if (ctx.config.get_bool("export_matrices")) {
    std::ostringstream trip;
    write_triplets(trip, h1.matrix);
    dir.write("h1.triplets", trip.str());
  }
  std::ostringstream csv;
  csv << "Rx,Ry,residual\n";
  double worst = 0.0;
  const auto centers = cls_centers(table);
  for (const auto c : centers) {
    const double r = (h1.matrix * cls_amplitudes(c, table).dense(table.size())).norm();
    worst = std::max(worst, r);
    csv << c.x << ',' << c.y << ',' << fmt(r) << '\n';
  }
  dir.write("cls_check.csv", csv.str());
  const auto kernel = flatband_kernel(h1, table);
  ordered_json j{{"cells", ctx.config.get("cells")},
                 {"num_sites", table.size()},
                 {"cls_count", centers.size()},
                 {"kernel_dimension", kernel.dimension()},
                 {"max_residual", worst},
                 {"kernel_threshold", kernel.threshold},
                 {"smallest_discarded_singular_value", kernel.smallest_discarded}};
  dir.write("cls_summary.json", j.dump(2) + "\n");
  ctx.out << "cls-check: " << centers.size() << " CLS, kernel dimension " << kernel.dimension()
          << ", max ||h1 cls|| = " << worst << '\n';
  return j;
}

// ---------------------------------------------------------------- pair-spectrum

ordered_json cmd_pair_spectrum(Context& ctx, OutputDir& dir) {
  auto spec = lattice_from(ctx.config);
  const int grid = ctx.config.get_int("pair_grid");
  const auto all = pair_spectrum(grid, 1.0, spec);

  std::ostringstream eig;
  std::ostringstream br;
  eig << "jx,jy,Kx,Ky,n,E_over_U\n";
  br << "jx,jy,Kx,Ky,basis_size,dark_count,upper,lower,ambiguous\n";
  int worst_dark_defect = 0;
  for (const auto& p : all.points) {
    for (Eigen::Index n = 0; n < p.eigenvalues.size(); ++n) {
      eig << p.jx << ',' << p.jy << ',' << fmt(p.kx) << ',' << fmt(p.ky) << ',' << n << ',' << fmt(p.eigenvalues(n)) << '\n';
    }
    br << p.jx << ',' << p.jy << ',' << fmt(p.kx) << ',' << fmt(p.ky) << ',' << p.basis_size << ',' << p.dark_count << ','
       << fmt(p.upper) << ',' << fmt(p.lower) << ',' << (p.ambiguous ? 1 : 0) << '\n';
    worst_dark_defect = std::max(worst_dark_defect, std::abs(p.basis_size - 2 - p.dark_count));
  }
  dir.write("pair_spectrum.csv", eig.str());
  dir.write("pair_branches.csv", br.str());

  ordered_json j{{"pair_grid", grid}, {"energy_unit", "U"}, {"max_dark_count_defect", worst_dark_defect}};
  if (grid % 2 == 0) {
    const auto path = pair_spectrum_path(grid, 1.0, spec);
    std::ostringstream pc;
    pc << "step,Kx,Ky,upper,lower\n";
    for (std::size_t s = 0; s < path.points.size(); ++s) {
      const auto& p = path.points[s];
      pc << s << ',' << fmt(p.kx) << ',' << fmt(p.ky) << ',' << fmt(p.upper) << ',' << fmt(p.lower) << '\n';
    }
    dir.write("pair_path.csv", pc.str());

    const auto ref = parse_sublattice(ctx.config.get("reference"));
    ordered_json maps = ordered_json::array();
    for (const auto point : {SymmetryPoint::gamma, SymmetryPoint::x, SymmetryPoint::m}) {
      for (const auto branch : {Branch::upper, Branch::lower}) {
        const auto pop = relative_population(point, branch, grid, spec, ref);
        ordered_json cells = ordered_json::array();
        const int h = grid / 2;
        for (int dx = -h; dx < grid - h; ++dx) {
          for (int dy = -h; dy < grid - h; ++dy) {
            cells.push_back({{"dx", dx},
                             {"dy", dy},
                             {"A", pop.at(dx, dy, Sublattice::A)},
                             {"B", pop.at(dx, dy, Sublattice::B)},
                             {"C", pop.at(dx, dy, Sublattice::C)}});
          }
        }
        maps.push_back({{"point", to_string(point)},
                        {"branch", to_string(branch)},
                        {"energy_over_U", pop.energy},
                        {"degenerate", pop.degenerate},
                        {"weight_within_1", pop.weight_within(1)},
                        {"weight_within_2", pop.weight_within(2)},
                        {"cells", cells}});
      }
    }
    ordered_json rp{{"schema", "relative_population/1"},
                    {"pair_grid", grid},
                    {"reference", std::string(1, to_char(ref))},
                    {"maps", maps}};
    dir.write("relative_population.json", rp.dump(1) + "\n");
  } else {
    ctx.out << "pair-spectrum: odd pair_grid, skipping the symmetry path and population maps\n";
  }
  dir.write("pair_summary.json", j.dump(2) + "\n");
  ctx.out << "pair-spectrum: " << all.points.size() << " K points on a " << grid << "x" << grid
          << " grid, max |dark count - (basis - 2)| = " << worst_dark_defect << '\n';
  return j;
}

// ---------------------------------------------------------------- evolve

// First output time after which the population vector changes by less than
// 1e-6 (relative) over a decade of time.
std::optional<std::size_t> steady_state_index(const EvolutionTrace& trace) {
  const auto& t = trace.times;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] > 0.0)) continue;
    const auto j = static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), 10.0 * t[i]) - t.begin());
    if (j >= t.size()) break;
    const auto& a = trace.populations[i];
    const auto& b = trace.populations[j];
    double diff = 0.0;
    double base = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      diff += (a[k] - b[k]) * (a[k] - b[k]);
      base += a[k] * a[k];
    }
    if (base > 0.0 && std::sqrt(diff / base) < 1e-6) return i;
  }
  return std::nullopt;
}

ordered_json cmd_evolve(Context& ctx, OutputDir& dir) {
  const auto spec = lattice_from(ctx.config);
  const SiteTable table(spec);
  const WaveguideNetwork network(table);
  const auto h1 = single_excitation_hamiltonian(network, spec);
  const TwoExcitationBasis basis(table.size(), spec.statistics);
  const auto h2 = two_excitation_hamiltonian(h1, spec, basis);
  if (ctx.config.get_bool("export_matrices")) {
    std::ostringstream t1;
    write_triplets(t1, h1.matrix);
    dir.write("h1.triplets", t1.str());
    std::ostringstream t2;
    write_triplets(t2, h2.matrix);
    dir.write("h2.triplets", t2.str());
  }

  const auto& kind_text = ctx.config.get("initial_state");
  const InitialStateKind kind = kind_text == "auto"
                                    ? (spec.statistics == Statistics::hardcore ? InitialStateKind::hardcore_pair
                                                                               : InitialStateKind::softcore_pair)
                                    : parse_initial_state(kind_text);
  const Eigen::VectorXcd psi0 = initial_state(kind, table, basis);

  const FlatbandPairProjector projector(flatband_kernel(h1, table), basis);
  std::optional<FlatbandClassification> classes;
  if (spec.statistics == Statistics::softcore && spec.interaction > 0.0) {
    classes = classify_flatband_eigenstates(projector, spec.interaction);
  }

  const double tmax = ctx.config.get_double("tmax");
  auto times = log_time_grid(tmax, ctx.config.get_int("points_per_decade"), ctx.config.get_double("t_first"));
  const double linear_end = std::min(tmax, ctx.config.get_double("linear_tmax"));
  const int linear_points = ctx.config.get_int("linear_points");
  if (linear_points >= 2 && linear_end > 0.0) times = merge_time_grids(times, linear_time_grid(0.0, linear_end, linear_points));

  ObservableSetup setup;
  setup.projector = &projector;
  setup.classification = classes ? &*classes : nullptr;
  const auto& norm_text = ctx.config.get("norm");
  if (norm_text == "squared") {
    setup.norm_convention = NormConvention::squared;
  } else if (norm_text != "inner_product") {
    throw ValidationError("norm must be inner_product or squared, got '" + norm_text + "'");
  }
  setup.site_populations = true;
  const auto trace = evolve(h2, psi0, times, propagation_from(ctx.config), basis, setup);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::ostringstream csv;
  csv << "t,F0,N,P_FB,w_disp,w_dark\n";
  double max_gap = 0.0;
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    const double wd = classes ? trace.dispersive_weight[i] : nan;
    const double wk = classes ? trace.dark_weight[i] : nan;
    csv << fmt(trace.times[i]) << ',' << fmt(trace.fidelity[i]) << ',' << fmt(trace.norm[i]) << ','
        << fmt(trace.flatband_projection[i]) << ',' << fmt(wd) << ',' << fmt(wk) << '\n';
    max_gap = std::max(max_gap, std::abs(trace.flatband_projection[i] - trace.norm[i]));
  }
  dir.write("trace.csv", csv.str());

  std::optional<OscillationResult> osc;
  try {
    osc = oscillation_frequency(trace);
  } catch (const NumericalError&) {
    osc.reset();
  }

  const auto snapshot = [&](std::size_t i, const char* label) {
    return ordered_json{{"label", label}, {"t", trace.times[i]}, {"population", trace.populations[i]}};
  };
  ordered_json sites = ordered_json::array();
  for (const auto& s : table.sites()) {
    sites.push_back({{"flat_index", s.flat_index},
                     {"Rx", s.cell.x},
                     {"Ry", s.cell.y},
                     {"sublattice", std::string(1, to_char(s.sublattice))},
                     {"x", s.x},
                     {"y", s.y}});
  }
  ordered_json shots = ordered_json::array();
  shots.push_back(snapshot(0, "initial"));
  if (osc) shots.push_back(snapshot(osc->index, "t_min"));
  const auto steady = steady_state_index(trace);
  if (steady) shots.push_back(snapshot(*steady, "steady"));
  shots.push_back(snapshot(trace.times.size() - 1, "final"));
  dir.write("snapshots.json", ordered_json{{"schema", "snapshots/1"}, {"sites", sites}, {"snapshots", shots}}.dump(1) + "\n");

  ordered_json j{{"statistics", std::string(to_string(spec.statistics))},
                 {"interaction", spec.statistics == Statistics::hardcore ? ordered_json("hardcore") : ordered_json(spec.interaction)},
                 {"initial_state", to_string(kind)},
                 {"dimension", basis.dimension()},
                 {"output_times", trace.times.size()},
                 {"flatband_projection_initial", trace.flatband_projection.front()},
                 {"norm_final", trace.norm.back()},
                 {"max_abs_pfb_minus_norm", max_gap},
                 {"max_norm_increase", trace.max_norm_increase()},
                 {"krylov_steps", trace.stats.steps},
                 {"krylov_rejections", trace.stats.rejections},
                 {"matvecs", trace.stats.matvecs}};
  if (osc) {
    j["omega0"] = osc->omega0;
    j["t_min"] = osc->t_min;
  } else {
    j["omega0"] = nullptr;
  }
  j["steady_state_time"] = steady ? ordered_json(trace.times[*steady]) : ordered_json(nullptr);
  if (classes) {
    double drift = 0.0;
    for (const double w : trace.dark_weight) drift = std::max(drift, std::abs(w - trace.dark_weight.front()));
    j["dispersive_states"] = classes->dispersive.cols();
    j["dark_states"] = classes->dark.cols();
    j["max_dark_weight_drift"] = drift;
  }
  dir.write("evolve_summary.json", j.dump(2) + "\n");
  ctx.out << "evolve: " << trace.times.size() << " output times to t = " << tmax << ", N(final) = " << trace.norm.back()
          << ", max|P_FB - N| = " << max_gap;
  if (osc) ctx.out << ", omega0 = " << osc->omega0;
  ctx.out << '\n';
  return j;
}

// ---------------------------------------------------------------- sweep-u

std::vector<double> parse_u_list(const std::string& text) {
  std::vector<double> us;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    us.push_back(item == "hardcore" ? kHardcore : parse_number(item, "u_list"));
  }
  if (us.empty()) throw ValidationError("u_list is empty");
  return us;
}

ordered_json cmd_sweep(Context& ctx, OutputDir& dir) {
  auto c = ctx.config;
  const auto spec = lattice_from(c);
  SweepOptions o;
  o.initial_small = parse_initial_state(c.get("initial_small"));
  o.initial_large = parse_initial_state(c.get("initial_large"));
  o.propagation = propagation_from(c);
  o.initial_window = c.get_double("window");
  o.max_window = c.get_double("max_window");
  o.samples_per_window = c.get_int("samples");
  o.prominence = c.get_double("prominence");
  o.linear_range = c.get_double("linear_range");
  o.plateau_min_interaction = c.get_double("plateau_min");
  o.threads = c.get_int("threads");
  const auto r = sweep_interaction(parse_u_list(c.get("u_list")), spec, o);

  std::ostringstream csv;
  csv << "U,hardcore,initial_state,ok,omega0,t_min,window,error\n";
  for (const auto& p : r.points) {
    std::string err = p.error;
    for (auto& ch : err) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    csv << (p.hardcore ? "hardcore" : fmt(p.interaction)) << ',' << (p.hardcore ? 1 : 0) << ',' << to_string(p.initial)
        << ',' << (p.ok ? 1 : 0) << ',' << fmt(p.ok ? p.omega0 : std::numeric_limits<double>::quiet_NaN()) << ','
        << fmt(p.ok ? p.t_min : std::numeric_limits<double>::quiet_NaN()) << ',' << fmt(p.window) << ',' << err << '\n';
  }
  dir.write("sweep.csv", csv.str());
  ordered_json j{{"schema", "sweep_fit/1"},
                 {"cells", c.get("cells")},
                 {"linear_slope", json_number(r.slope)},
                 {"linear_max_relative_residual", json_number(r.max_relative_residual)},
                 {"linear_count", r.linear_count},
                 {"plateau_mean", json_number(r.plateau_mean)},
                 {"plateau_spread", json_number(r.plateau_spread)},
                 {"plateau_count", r.plateau_count},
                 {"band_gap", spec.chiral() ? ordered_json(band_gap(spec)) : ordered_json(nullptr)}};
  dir.write("sweep_fit.json", j.dump(2) + "\n");
  ctx.out << "sweep-u: slope " << r.slope << " (max residual " << r.max_relative_residual << ", " << r.linear_count
          << " points), plateau " << r.plateau_mean << " (spread " << r.plateau_spread << ", " << r.plateau_count
          << " points)\n";
  int failed = 0;
  for (const auto& p : r.points) {
    if (!p.ok) {
      ++failed;
      ctx.out << "  U = " << (p.hardcore ? std::string("hardcore") : fmt(p.interaction)) << " failed: " << p.error << '\n';
    }
  }
  if (failed == static_cast<int>(r.points.size())) throw NumericalError("every sweep point failed");
  return j;
}

} // namespace

// ---------------------------------------------------------------- config

RunConfig::RunConfig() : values_(defaults()) {}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (values_.count(key) == 0) throw ValidationError("unknown config key '" + key + "'");
  values_[key] = value;
  explicit_.insert(key);
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ValidationError("unknown config key '" + key + "'");
  return it->second;
}

void RunConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot read config file " + path);
  std::stringstream buffer;
  buffer << f.rdbuf();
  const std::string text = buffer.str();
  if (trim(text).starts_with("{")) {
    ordered_json j;
    try {
      j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("malformed manifest " + path + ": " + e.what());
    }
    if (!j.contains("config") || !j["config"].is_object()) throw ValidationError("manifest " + path + " has no config object");
    for (const auto& [k, v] : j["config"].items()) set(k, v.is_string() ? v.get<std::string>() : v.dump());
    return;
  }
  std::istringstream lines(text);
  std::string line;
  int number = 0;
  while (std::getline(lines, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(path + ":" + std::to_string(number) + ": expected 'key = value'");
    }
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

int RunConfig::get_int(const std::string& key) const {
  const auto& v = get(key);
  try {
    std::size_t used = 0;
    const int n = std::stoi(v, &used);
    if (used == v.size()) return n;
  } catch (const std::logic_error&) {
  }
  throw ValidationError(key + " must be an integer, got '" + v + "'");
}

double RunConfig::get_double(const std::string& key) const { return parse_number(get(key), key); }

bool RunConfig::get_bool(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError(key + " must be true or false, got '" + v + "'");
}

double parse_number(const std::string& text, const std::string& key) {
  std::string t = trim(text);
  double factor = 1.0;
  if (t.size() >= 2 && t.ends_with("pi")) {
    factor = std::numbers::pi;
    t = trim(t.substr(0, t.size() - 2));
    if (!t.empty() && t.back() == '*') t = trim(t.substr(0, t.size() - 1));
    if (t.empty()) return factor;
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used == t.size()) return v * factor;
  } catch (const std::logic_error&) {
  }
  throw ValidationError(key + " must be a number, got '" + text + "'");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lieb-lattice waveguide-QED simulator", "liebwqed"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  struct Flags {
    std::string config;
    std::string cells;
    std::string u;
    std::string grid;
    std::string out;
    std::string method;
    std::string tol;
    std::string threads;
    std::string tmax;
    bool integrate = false;
    std::vector<std::string> sets;
  } flags;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"bands", "Bloch band structure on a shifted k-grid"},
      {"qgt", "Flat-band quantum geometric tensor (--integrate for BZ integrals)"},
      {"cls-check", "Darkness of every compact localized state and the flat-band kernel"},
      {"pair-spectrum", "Per-K flat-band pair spectrum and relative-coordinate maps"},
      {"evolve", "Two-excitation dynamics from two adjacent CLS"},
      {"sweep-u", "Fidelity oscillation frequency versus interaction strength"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "key = value config file or a run manifest");
    sub->add_option("--cells", flags.cells, "lattice size NxM");
    sub->add_option("--U", flags.u, "interaction strength, or 'hardcore'");
    sub->add_option("--grid", flags.grid, "k-grid points per axis");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--method", flags.method, "krylov | dense_eig");
    sub->add_option("--tol", flags.tol, "propagator tolerance");
    sub->add_option("--threads", flags.threads, "worker threads (sweep-u runs U values concurrently)");
    sub->add_option("--tmax", flags.tmax, "final time in units of 1/gamma");
    sub->add_option("--set", flags.sets, "override any config key: key=value")->take_all();
    if (name == "qgt") sub->add_flag("--integrate", flags.integrate, "Brillouin-zone integrals and Chern number");
    subs.push_back(sub);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  Context ctx{"", RunConfig{}, out};
  for (auto* sub : subs) {
    if (sub->parsed()) ctx.command = sub->get_name();
  }

  try {
    if (!flags.config.empty()) ctx.config.load(flags.config);
    const std::pair<const char*, std::string*> overrides[] = {
        {"cells", &flags.cells}, {"U", &flags.u},           {"grid", &flags.grid},       {"out", &flags.out},
        {"method", &flags.method}, {"tol", &flags.tol},     {"threads", &flags.threads}, {"tmax", &flags.tmax},
    };
    for (const auto& [key, value] : overrides) {
      if (!value->empty()) ctx.config.set(key, *value);
    }
    if (flags.integrate) ctx.config.set("integrate", "true");
    for (const auto& s : flags.sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + s + "'");
      ctx.config.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    }
    if (ctx.config.get_int("threads") < 1) throw ValidationError("threads must be >= 1");
    Eigen::setNbThreads(ctx.config.get_int("threads"));

    OutputDir dir(ctx.config.get("out"));
    const auto start = std::chrono::steady_clock::now();
    ordered_json summary;
    if (ctx.command == "bands") summary = cmd_bands(ctx, dir);
    else if (ctx.command == "qgt") summary = cmd_qgt(ctx, dir);
    else if (ctx.command == "cls-check") summary = cmd_cls_check(ctx, dir);
    else if (ctx.command == "pair-spectrum") summary = cmd_pair_spectrum(ctx, dir);
    else if (ctx.command == "evolve") summary = cmd_evolve(ctx, dir);
    else if (ctx.command == "sweep-u") summary = cmd_sweep(ctx, dir);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    ordered_json config = ordered_json::object();
    for (const auto& [k, v] : ctx.config.values()) config[k] = v;
    ordered_json manifest{{"schema", "manifest/1"},
                          {"tool", "liebwqed"},
                          {"version", kVersion},
                          {"command", ctx.command},
                          {"config", config},
                          {"versions",
                           {{"liebwqed", kVersion},
                            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                          std::to_string(EIGEN_MINOR_VERSION)},
                            {"compiler", __VERSION__}}},
                          {"wall_time_seconds", wall},
                          {"outputs", dir.manifest_entries()},
                          {"summary", summary}};
    dir.write("manifest.json", manifest.dump(2) + "\n");
    return 0;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 2;
  }
}

} // namespace wqed::cli
