#include "cli.hpp"

#include "liebwqed/errors.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

namespace fs = std::filesystem;
using wqed::cli::run;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("liebwqed_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

int invoke(std::vector<std::string> args, std::string* err_text = nullptr) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(args, out, err);
  if (err_text != nullptr) *err_text = err.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& p, std::string* header = nullptr) {
  std::ifstream f(p);
  std::string line;
  std::getline(f, line);
  if (header != nullptr) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

} // namespace

TEST(Cli, BandsSingleCell) {
  const auto dir = scratch("bands");
  ASSERT_EQ(invoke({"bands", "--cells", "1x1", "--grid", "64", "--out", dir.string()}), 0);
  std::string header;
  const auto rows = read_csv(dir / "bands.csv", &header);
  EXPECT_EQ(header, "kx,ky,e1,e2,e3");
  ASSERT_EQ(rows.size(), 64u * 64u);
  for (const auto& r : rows) EXPECT_LT(std::abs(r[3]), 1e-12);
}

TEST(Cli, ManifestChecksumsAndRoundTrip) {
  const auto a = scratch("manifest_a");
  const auto b = scratch("manifest_b");
  ASSERT_EQ(invoke({"cls-check", "--cells", "4x3", "--out", a.string()}), 0);
  const auto manifest = read_json(a / "manifest.json");
  EXPECT_EQ(manifest["command"], "cls-check");
  EXPECT_EQ(manifest["config"]["cells"], "4x3");
  EXPECT_TRUE(manifest.contains("wall_time_seconds"));
  ASSERT_GE(manifest["outputs"].size(), 3u);
  for (const auto& o : manifest["outputs"]) EXPECT_EQ(slurp(a / o["path"].get<std::string>()).size(), o["bytes"].get<std::size_t>());

  ASSERT_EQ(invoke({"cls-check", "--config", (a / "manifest.json").string(), "--out", b.string()}), 0);
  const auto again = read_json(b / "manifest.json");
  ASSERT_EQ(again["outputs"].size(), manifest["outputs"].size());
  for (std::size_t i = 0; i < manifest["outputs"].size(); ++i) {
    EXPECT_EQ(again["outputs"][i]["sha256"], manifest["outputs"][i]["sha256"]);
  }
  // no temporaries left behind
  for (const auto& e : fs::directory_iterator(a)) EXPECT_NE(e.path().filename().string().front(), '.');
}


TEST(Cli, ConfigFileAndOverrides) {
  const auto dir = scratch("config");
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "# pair spectrum run\ncells = 1x1\npair_grid = 4\nreference = C\n";
  }
  ASSERT_EQ(invoke({"pair-spectrum", "--config", (dir / "run.cfg").string(), "--set", "pair_grid=6", "--out", (dir / "o").string()}), 0);
  const auto rows = read_csv(dir / "o" / "pair_branches.csv");
  EXPECT_EQ(rows.size(), 36u);
  const auto pop = read_json(dir / "o" / "relative_population.json");
  EXPECT_EQ(pop["reference"], "C");
  EXPECT_EQ(pop["maps"].size(), 6u);
}

TEST(Cli, ValidationErrorsExitOne) {
  const auto dir = scratch("errors");
  std::string err;
  EXPECT_EQ(invoke({"bands", "--cells", "0x2", "--out", dir.string()}, &err), 1);
  EXPECT_NE(err.find("cell"), std::string::npos);
  EXPECT_EQ(invoke({"bands", "--set", "colour=blue", "--out", dir.string()}, &err), 1);
  EXPECT_NE(err.find("colour"), std::string::npos);
  EXPECT_EQ(invoke({"evolve", "--method", "euler", "--cells", "3x2", "--out", dir.string()}), 1);
  EXPECT_EQ(invoke({"bands", "--cells", "banana", "--out", dir.string()}), 1);
  EXPECT_EQ(invoke({}), 1);
  EXPECT_EQ(invoke({"frobnicate"}), 1);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "bad.cfg");
    cfg << "cells 3x3\n";
  }
  EXPECT_EQ(invoke({"bands", "--config", (dir / "bad.cfg").string()}), 1);
}

TEST(Cli, NumericalFailureExitsTwo) {
  const auto dir = scratch("numerical");
  // k0 d off the chiral points: the flat band and its kernel disappear.
  EXPECT_EQ(invoke({"cls-check", "--cells", "3x3", "--set", "k0=0.7pi", "--out", dir.string()}), 2);
}

TEST(Cli, EvolveSmallLattice) {
  const auto dir = scratch("evolve");
  ASSERT_EQ(invoke({"evolve", "--cells", "3x2", "--U", "0.5", "--tmax", "20", "--set", "linear_tmax=20", "--set",
                    "linear_points=41", "--out", dir.string()}),
            0);
  std::string header;
  const auto rows = read_csv(dir / "trace.csv", &header);
  EXPECT_EQ(header, "t,F0,N,P_FB,w_disp,w_dark");
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows.front()[0], 0.0);
  EXPECT_NEAR(rows.front()[1], 1.0, 1e-14);
  EXPECT_NEAR(rows.back()[0], 20.0, 1e-12);
  const auto snaps = read_json(dir / "snapshots.json");
  EXPECT_EQ(snaps["sites"].size(), 18u);
  EXPECT_GE(snaps["snapshots"].size(), 2u);
}

TEST(Cli, EvolveHardcore) {
  const auto dir = scratch("evolve_hc");
  ASSERT_EQ(invoke({"evolve", "--cells", "3x2", "--U", "hardcore", "--tmax", "5", "--out", dir.string()}), 0);
  const auto summary = read_json(dir / "evolve_summary.json");
  EXPECT_EQ(summary["initial_state"], "hardcore_pair");
  EXPECT_LT(summary["flatband_projection_initial"].get<double>(), 1.0);
}

TEST(Cli, QgtGridAndIntegrals) {
  const auto dir = scratch("qgt");
  ASSERT_EQ(invoke({"qgt", "--cells", "1x1", "--grid", "8", "--out", dir.string()}), 0);
  std::string header;
  EXPECT_EQ(read_csv(dir / "qgt.csv", &header).size(), 64u);
  EXPECT_EQ(header, "kx,ky,ReTxx,ReTyy,ReTxy,ImTxy");
  ASSERT_EQ(invoke({"qgt", "--integrate", "--grid", "128", "--out", dir.string()}), 0);
  const auto j = read_json(dir / "qgt_integrals.json");
  EXPECT_EQ(j["fine_grid"], 256);
  EXPECT_NEAR(j["re_txy"].get<double>(), -std::numbers::pi / 2.0, 5e-2);
  EXPECT_EQ(j["chern"], 0);
}

TEST(Cli, ParseNumber) {
  EXPECT_DOUBLE_EQ(wqed::cli::parse_number("pi", "k0"), std::numbers::pi);
  EXPECT_DOUBLE_EQ(wqed::cli::parse_number("0.5pi", "k0"), 0.5 * std::numbers::pi);
  EXPECT_DOUBLE_EQ(wqed::cli::parse_number("2*pi", "k0"), 2.0 * std::numbers::pi);
  EXPECT_DOUBLE_EQ(wqed::cli::parse_number("1e-3", "tol"), 1e-3);
  EXPECT_THROW((void)wqed::cli::parse_number("1e-3x", "tol"), wqed::ValidationError);
}

TEST(Cli, RunConfigRejectsUnknownKeys) {
  wqed::cli::RunConfig c;
  EXPECT_THROW(c.set("nope", "1"), wqed::ValidationError);
  EXPECT_FALSE(c.explicitly_set("grid"));
  c.set("grid", "12");
  EXPECT_TRUE(c.explicitly_set("grid"));
  EXPECT_EQ(c.get_int("grid"), 12);
  c.set("grid", "12.5");
  EXPECT_THROW((void)c.get_int("grid"), wqed::ValidationError);
}
