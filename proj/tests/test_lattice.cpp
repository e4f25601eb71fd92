#include "liebwqed/errors.hpp"
#include "liebwqed/lattice.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace wqed;

TEST(Lattice, SingleCellPositions) {
  const SiteTable t(fixture::chiral_spec(1, 1));
  ASSERT_EQ(t.size(), 3);
  EXPECT_EQ(t[0].sublattice, Sublattice::A);
  EXPECT_DOUBLE_EQ(t[0].x, 0.5);
  EXPECT_DOUBLE_EQ(t[0].y, 0.0);
  EXPECT_DOUBLE_EQ(t[1].x, 0.0);
  EXPECT_DOUBLE_EQ(t[1].y, 0.0);
  EXPECT_DOUBLE_EQ(t[2].x, 0.0);
  EXPECT_DOUBLE_EQ(t[2].y, 0.5);
}

TEST(Lattice, FlatIndexIsRowMajorByCell) {
  const SiteTable t(fixture::chiral_spec(4, 3));
  for (int ry = 0; ry < 3; ++ry) {
    for (int rx = 0; rx < 4; ++rx) {
      for (int s = 0; s < 3; ++s) {
        const int idx = t.index_of({rx, ry}, static_cast<Sublattice>(s));
        EXPECT_EQ(idx, 3 * (ry * 4 + rx) + s);
        EXPECT_EQ(t[idx].flat_index, idx);
        EXPECT_EQ(t[idx].cell.x, rx);
        EXPECT_EQ(t[idx].cell.y, ry);
      }
    }
  }
  EXPECT_THROW((void)t.index_of({4, 0}, Sublattice::A), ValidationError);
}

TEST(Lattice, ValidationRejectsBadSpecs) {
  auto s = fixture::chiral_spec(2, 2);
  s.intracell_distance = 1.0;
  EXPECT_THROW(s.validate(), ValidationError);
  s = fixture::chiral_spec(0, 2);
  EXPECT_THROW(s.validate(), ValidationError);
  s = fixture::chiral_spec(2, 2);
  s.gamma = -1.0;
  EXPECT_THROW(s.validate(), ValidationError);
  s = fixture::chiral_spec(2, 2);
  s.interaction = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(s.validate(), ValidationError);
  EXPECT_NO_THROW(fixture::chiral_spec(1, 1).validate());
}

TEST(Lattice, ChiralDetection) {
  auto s = fixture::chiral_spec(2, 2);
  EXPECT_TRUE(s.chiral());
  s.resonant_wavevector = 2.0 * std::numbers::pi;
  EXPECT_TRUE(s.chiral());
  s.resonant_wavevector = 0.7 * std::numbers::pi;
  EXPECT_FALSE(s.chiral());
}

TEST(Network, MembershipAndSeparation) {
  const SiteTable t(fixture::chiral_spec(3, 2));
  const WaveguideNetwork net(t);
  EXPECT_EQ(net.waveguides().size(), 5u);
  for (int i = 0; i < t.size(); ++i) {
    EXPECT_EQ(net.membership(i).size(), t[i].sublattice == Sublattice::B ? 2u : 1u);
  }
  const int a00 = t.index_of({0, 0}, Sublattice::A);
  const int a20 = t.index_of({2, 0}, Sublattice::A);
  const int c00 = t.index_of({0, 0}, Sublattice::C);
  const int b01 = t.index_of({0, 1}, Sublattice::B);
  EXPECT_DOUBLE_EQ(*net.separation(a00, a20), 2.0);
  EXPECT_FALSE(net.separation(a00, c00).has_value());
  EXPECT_DOUBLE_EQ(*net.separation(c00, b01), 0.5);
  EXPECT_DOUBLE_EQ(*net.separation(a00, a00), 0.0);
}

TEST(Network, ConnectedPairCount) {
  for (int nx = 1; nx <= 4; ++nx) {
    for (int ny = 1; ny <= 4; ++ny) {
      const SiteTable t(fixture::chiral_spec(nx, ny));
      const WaveguideNetwork net(t);
      const auto pairs = [](int m) { return static_cast<std::size_t>(m * (m - 1) / 2); };
      EXPECT_EQ(net.num_connected_pairs(), ny * pairs(2 * nx) + nx * pairs(2 * ny)) << nx << "x" << ny;
    }
  }
}

TEST(Lattice, StatisticsRoundTrip) {
  EXPECT_EQ(parse_statistics("softcore"), Statistics::softcore);
  EXPECT_EQ(parse_statistics(to_string(Statistics::hardcore)), Statistics::hardcore);
  EXPECT_THROW(parse_statistics("fermion"), ValidationError);
}

TEST(Lattice, CsvHeader) {
  std::ostringstream out;
  SiteTable(fixture::chiral_spec(2, 1)).write_csv(out);
  const auto text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "flat_index,Rx,Ry,sublattice,x,y");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 7);
}
