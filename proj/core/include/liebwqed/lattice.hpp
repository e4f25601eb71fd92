#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wqed {

enum class Sublattice : std::uint8_t { A = 0, B = 1, C = 2 };

// Softcore: bosons with finite on-site repulsion U. Hardcore: U -> infinity
// (two-level emitters), realized by removing doubly occupied sites.
enum class Statistics : std::uint8_t { softcore, hardcore };

char to_char(Sublattice s);
std::string_view to_string(Statistics s);
Statistics parse_statistics(std::string_view text);

// Physical and geometric parameters of the emitter array. Units: d = 1 and
// gamma = 1 unless overridden; energies in gamma, times in 1/gamma.
struct LatticeSpec {
  int num_cells_x = 2;
  int num_cells_y = 2;
  double lattice_constant = 1.0;                  // d
  double intracell_distance = 0.5;                // a, 0 < a < d
  double resonant_wavevector = std::numbers::pi;  // k0
  double gamma = 1.0;
  double interaction = 0.0;                       // U, ignored when hardcore
  Statistics statistics = Statistics::softcore;

  // Throws ValidationError with a diagnostic naming the offending field.
  void validate() const;

  // k0 * d is an integer multiple of pi (relative tolerance 1e-12).
  [[nodiscard]] bool chiral() const;

  [[nodiscard]] int num_cells() const { return num_cells_x * num_cells_y; }
  [[nodiscard]] int num_sites() const { return 3 * num_cells(); }
};

struct CellIndex {
  int x = 0;
  int y = 0;
  auto operator<=>(const CellIndex&) const = default;
};

struct Site {
  CellIndex cell;
  Sublattice sublattice = Sublattice::A;
  double x = 0.0;
  double y = 0.0;
  int flat_index = 0;
};

// All emitters of an open Nx x Ny Lieb array. B sits at the waveguide
// crossing R*d, A at B + (a, 0) on the horizontal line, C at B + (0, a) on the
// vertical line. Ordering is row-major by cell, then A, B, C.
class SiteTable {
public:
  explicit SiteTable(const LatticeSpec& spec);

  [[nodiscard]] const LatticeSpec& spec() const { return spec_; }
  [[nodiscard]] int size() const { return static_cast<int>(sites_.size()); }
  [[nodiscard]] const std::vector<Site>& sites() const { return sites_; }
  [[nodiscard]] const Site& operator[](int i) const { return sites_[static_cast<std::size_t>(i)]; }

  [[nodiscard]] bool contains(CellIndex cell) const;
  // Throws ValidationError for cells outside the array.
  [[nodiscard]] int index_of(CellIndex cell, Sublattice s) const;

  // CSV: flat_index,Rx,Ry,sublattice,x,y
  void write_csv(std::ostream& out) const;

private:
  LatticeSpec spec_;
  std::vector<Site> sites_;
};

SiteTable build_lattice(const LatticeSpec& spec);

enum class Axis : std::uint8_t { x = 0, y = 1 };

struct Waveguide {
  Axis axis = Axis::x;
  int line = 0;            // row index Ry for horizontal, column Rx for vertical
  std::vector<int> sites;  // sorted by coordinate along the waveguide
};

// Connectivity of the square grid of independent 1D waveguides. Horizontal
// line Ry carries B and A of every cell in row Ry; vertical line Rx carries B
// and C of every cell in column Rx.
class WaveguideNetwork {
public:
  explicit WaveguideNetwork(const SiteTable& table);

  [[nodiscard]] const std::vector<Waveguide>& waveguides() const { return waveguides_; }
  // Waveguide ids touching site i (1 for A and C, 2 for B).
  [[nodiscard]] const std::vector<int>& membership(int site) const {
    return membership_[static_cast<std::size_t>(site)];
  }
  [[nodiscard]] int num_sites() const { return static_cast<int>(membership_.size()); }

  // Distance along the shared waveguide, or nullopt if i and j share none.
  // separation(i, i) is 0.
  [[nodiscard]] std::optional<double> separation(int i, int j) const;
  // Number of unordered pairs i < j sharing a waveguide.
  [[nodiscard]] std::size_t num_connected_pairs() const { return pair_map_.size(); }

  // Position of a site along a waveguide of the given axis.
  [[nodiscard]] double coordinate(int site, Axis axis) const;

private:
  [[nodiscard]] std::uint64_t key(int i, int j) const;

  std::vector<Waveguide> waveguides_;
  std::vector<std::vector<int>> membership_;
  std::vector<double> x_;
  std::vector<double> y_;
  std::unordered_map<std::uint64_t, double> pair_map_;
};

WaveguideNetwork build_network(const SiteTable& table);

} // namespace wqed
