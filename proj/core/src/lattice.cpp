#include "liebwqed/lattice.hpp"

#include "liebwqed/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace wqed {

char to_char(Sublattice s) {
  switch (s) {
  case Sublattice::A: return 'A';
  case Sublattice::B: return 'B';
  case Sublattice::C: return 'C';
  }
  return '?';
}

std::string_view to_string(Statistics s) {
  return s == Statistics::softcore ? "softcore" : "hardcore";
}

Statistics parse_statistics(std::string_view text) {
  if (text == "softcore") return Statistics::softcore;
  if (text == "hardcore") return Statistics::hardcore;
  throw ValidationError("unknown statistics '" + std::string(text) + "' (expected softcore|hardcore)");
}

void LatticeSpec::validate() const {
  std::ostringstream why;
  if (num_cells_x < 1 || num_cells_y < 1) {
    why << "cell counts must be positive, got " << num_cells_x << "x" << num_cells_y;
  } else if (!(lattice_constant > 0.0) || !std::isfinite(lattice_constant)) {
    why << "lattice constant d must be positive, got " << lattice_constant;
  } else if (!(intracell_distance > 0.0 && intracell_distance < lattice_constant)) {
    why << "intracell distance a must satisfy 0 < a < d, got a=" << intracell_distance
        << " d=" << lattice_constant;
  } else if (!std::isfinite(resonant_wavevector)) {
    why << "resonant wavevector k0 must be finite";
  } else if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    why << "gamma must be positive, got " << gamma;
  } else if (statistics == Statistics::softcore && (!(interaction >= 0.0) || !std::isfinite(interaction))) {
    why << "interaction U must be finite and >= 0, got " << interaction;
  }
  const auto msg = why.str();
  if (!msg.empty()) throw ValidationError("invalid lattice spec: " + msg);
}

bool LatticeSpec::chiral() const {
  const double phase = resonant_wavevector * lattice_constant / std::numbers::pi;
  const double m = std::round(phase);
  return std::abs(phase - m) <= 1e-12 * std::max(1.0, std::abs(phase));
}

SiteTable::SiteTable(const LatticeSpec& spec) : spec_(spec) {
  spec_.validate();
  const double d = spec_.lattice_constant;
  const double a = spec_.intracell_distance;
  sites_.reserve(static_cast<std::size_t>(spec_.num_sites()));
  for (int ry = 0; ry < spec_.num_cells_y; ++ry) {
    for (int rx = 0; rx < spec_.num_cells_x; ++rx) {
      const double bx = rx * d;
      const double by = ry * d;
      const int base = static_cast<int>(sites_.size());
      sites_.push_back({{rx, ry}, Sublattice::A, bx + a, by, base});
      sites_.push_back({{rx, ry}, Sublattice::B, bx, by, base + 1});
      sites_.push_back({{rx, ry}, Sublattice::C, bx, by + a, base + 2});
    }
  }
}

bool SiteTable::contains(CellIndex cell) const {
  return cell.x >= 0 && cell.y >= 0 && cell.x < spec_.num_cells_x && cell.y < spec_.num_cells_y;
}

int SiteTable::index_of(CellIndex cell, Sublattice s) const {
  if (!contains(cell)) {
    throw ValidationError("cell (" + std::to_string(cell.x) + "," + std::to_string(cell.y) +
                          ") is outside the array");
  }
  return 3 * (cell.y * spec_.num_cells_x + cell.x) + static_cast<int>(s);
}

void SiteTable::write_csv(std::ostream& out) const {
  out << "flat_index,Rx,Ry,sublattice,x,y\n";
  out << std::setprecision(17);
  for (const auto& s : sites_) {
    out << s.flat_index << ',' << s.cell.x << ',' << s.cell.y << ',' << to_char(s.sublattice) << ','
        << s.x << ',' << s.y << '\n';
  }
}

SiteTable build_lattice(const LatticeSpec& spec) { return SiteTable(spec); }

WaveguideNetwork::WaveguideNetwork(const SiteTable& table) {
  const auto& spec = table.spec();
  const auto n = static_cast<std::size_t>(table.size());
  membership_.resize(n);
  x_.resize(n);
  y_.resize(n);
  for (const auto& s : table.sites()) {
    x_[static_cast<std::size_t>(s.flat_index)] = s.x;
    y_[static_cast<std::size_t>(s.flat_index)] = s.y;
  }

  for (int ry = 0; ry < spec.num_cells_y; ++ry) {
    Waveguide w{Axis::x, ry, {}};
    for (int rx = 0; rx < spec.num_cells_x; ++rx) {
      w.sites.push_back(table.index_of({rx, ry}, Sublattice::B));
      w.sites.push_back(table.index_of({rx, ry}, Sublattice::A));
    }
    waveguides_.push_back(std::move(w));
  }
  for (int rx = 0; rx < spec.num_cells_x; ++rx) {
    Waveguide w{Axis::y, rx, {}};
    for (int ry = 0; ry < spec.num_cells_y; ++ry) {
      w.sites.push_back(table.index_of({rx, ry}, Sublattice::B));
      w.sites.push_back(table.index_of({rx, ry}, Sublattice::C));
    }
    waveguides_.push_back(std::move(w));
  }

  for (std::size_t w = 0; w < waveguides_.size(); ++w) {
    const auto& guide = waveguides_[w];
    for (std::size_t p = 0; p < guide.sites.size(); ++p) {
      const int i = guide.sites[p];
      membership_[static_cast<std::size_t>(i)].push_back(static_cast<int>(w));
      for (std::size_t q = p + 1; q < guide.sites.size(); ++q) {
        const int j = guide.sites[q];
        const double r = std::abs(coordinate(i, guide.axis) - coordinate(j, guide.axis));
        const auto [it, inserted] = pair_map_.emplace(key(i, j), r);
        if (!inserted) {
          throw NumericalError("sites " + std::to_string(i) + " and " + std::to_string(j) +
                               " share more than one waveguide");
        }
      }
    }
  }
}

std::uint64_t WaveguideNetwork::key(int i, int j) const {
  if (i > j) std::swap(i, j);
  return static_cast<std::uint64_t>(i) * membership_.size() + static_cast<std::uint64_t>(j);
}

double WaveguideNetwork::coordinate(int site, Axis axis) const {
  const auto s = static_cast<std::size_t>(site);
  return axis == Axis::x ? x_[s] : y_[s];
}

std::optional<double> WaveguideNetwork::separation(int i, int j) const {
  if (i == j) return 0.0;
  const auto it = pair_map_.find(key(i, j));
  if (it == pair_map_.end()) return std::nullopt;
  return it->second;
}

WaveguideNetwork build_network(const SiteTable& table) { return WaveguideNetwork(table); }

} // namespace wqed
