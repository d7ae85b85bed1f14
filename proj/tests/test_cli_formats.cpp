#include "swipt/demo_setups.hpp"
#include "swipt/driver.hpp"
#include "swipt/report.hpp"
#include "swipt/scenario.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace {

using namespace swipt;
namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

nlohmann::json small_rician_scenario(const std::string& scheme, int n_states, int points) {
  nlohmann::json j;
  j["name"] = "unit_" + scheme;
  j["system"] = {{"p_max_dbm", 20.0}, {"zeta", 0.7}, {"noise_dbm", -50.0}};
  j["channel"] = {
      {"type", "rician"},
      {"geometry",
       {{"tx", {{0.0, 0.0}, {5.0, 5.0}}}, {"rx", {{2.5, 2.5}, {2.5, 2.5}}}}},
      {"rician", {{"m", 3.0}, {"c0_db", -20.0}, {"r0_m", 1.0}, {"xi", 3.0}}},
      {"seed", 9},
      {"n_states", n_states}};
  j["scheme"] = scheme;
  j["sweep"] = {{"mode", "targets"}, {"points", points}, {"max_fraction", 0.8}};
  j["solver"] = {{"tol", 1e-6}};
  return j;
}

TEST(Units, DbmConversionIsExact) {
  EXPECT_DOUBLE_EQ(dbm_to_watt(20.0), 0.1);
  EXPECT_DOUBLE_EQ(dbm_to_watt(-50.0), 1e-8);
  EXPECT_DOUBLE_EQ(dbm_to_watt(30.0), 1.0);
  EXPECT_NEAR(watt_to_dbm(0.1), 20.0, 1e-12);
  EXPECT_DOUBLE_EQ(db_to_linear(-20.0), 0.01);
}

TEST(Scenario, ParsesUnitsAndEchoesInput) {
  const nlohmann::json j = small_rician_scenario("fc", 100, 4);
  const Scenario sc = parse_scenario(j);
  EXPECT_DOUBLE_EQ(sc.system.p_max, 0.1);
  EXPECT_DOUBLE_EQ(sc.system.noise_powers[0], 1e-8);
  EXPECT_DOUBLE_EQ(sc.system.zeta, 0.7);
  EXPECT_EQ(sc.users(), 2);
  EXPECT_EQ(sc.n_states, 100);
  EXPECT_EQ(sc.raw, j);
  EXPECT_TRUE(sc.sweep.has_value());
}

TEST(Scenario, RejectsMalformedInput) {
  nlohmann::json j = small_rician_scenario("fc", 10, 2);
  j["scheme"] = "unknown";
  EXPECT_THROW(parse_scenario(j), std::invalid_argument);
  j = small_rician_scenario("fc", 10, 2);
  j["system"].erase("p_max_dbm");
  EXPECT_THROW(parse_scenario(j), std::invalid_argument);
  j = small_rician_scenario("fc", 10, 2);
  j["targets_w"] = {1.0, 1.0, 1.0};
  EXPECT_THROW(parse_scenario(j), ShapeError);
  // fixed channel must be square
  nlohmann::json f;
  f["system"] = {{"p_max_w", 0.1}, {"zeta", 1.0}, {"noise_w", 1e-8}};
  f["channel"] = {{"type", "fixed"}, {"h", {{{0.1, 0.0}, {0.2, 0.0}}}}};
  EXPECT_THROW(parse_scenario(f), ShapeError);
}

TEST(Csv, RoundTripIsExact) {
  RERegion region;
  region.users = 2;
  region.frac_names = {"frac_mode_id_id", "frac_mode_eh_eh"};
  RegionRow row;
  row.sweep_value = 1.2345678901234567e-4;
  row.sum_rate = 13.216461230734954;
  row.q = {9.87654321e-5, 0.1 / 3.0};
  row.feasible = true;
  row.gap = 4.4e-16;
  row.fracs = {2.0 / 3.0, 1.0 / 3.0};
  region.rows = {row};
  const std::string path = (fs::temp_directory_path() / "swipt_roundtrip.csv").string();
  write_region_csv(path, region);
  const RERegion back = read_region_csv(path);
  ASSERT_EQ(back.rows.size(), 1u);
  EXPECT_EQ(back.users, 2);
  EXPECT_EQ(back.frac_names, region.frac_names);
  EXPECT_EQ(back.rows[0].sweep_value, row.sweep_value);
  EXPECT_EQ(back.rows[0].sum_rate, row.sum_rate);
  EXPECT_EQ(back.rows[0].q[1], row.q[1]);
  EXPECT_EQ(back.rows[0].gap, row.gap);
  EXPECT_EQ(back.rows[0].fracs[0], row.fracs[0]);
  fs::remove(path);
}

TEST(Sweep, ByteIdenticalAcrossRepeatedRuns) {
  const Scenario sc = parse_scenario(small_rician_scenario("fc", 120, 4));
  const std::string d1 = (fs::temp_directory_path() / "swipt_det_a").string();
  const std::string d2 = (fs::temp_directory_path() / "swipt_det_b").string();
  const SweepOutcome a = run_region_sweep(sc, d1);
  const SweepOutcome b = run_region_sweep(sc, d2);
  EXPECT_EQ(read_file(a.csv_path), read_file(b.csv_path));
  EXPECT_FALSE(read_file(a.csv_path).empty());
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST(Sweep, RowsSortedAndSidecarEchoesEveryInput) {
  const Scenario sc = parse_scenario(small_rician_scenario("nc", 80, 5));
  const std::string dir = (fs::temp_directory_path() / "swipt_sidecar").string();
  const SweepOutcome out = run_region_sweep(sc, dir);
  ASSERT_EQ(out.region.rows.size(), 5u);
  for (std::size_t i = 1; i < out.region.rows.size(); ++i)
    EXPECT_GE(out.region.rows[i].sweep_value, out.region.rows[i - 1].sweep_value);

  nlohmann::json side;
  std::ifstream in(out.sidecar_path);
  in >> side;
  EXPECT_EQ(side.at("scenario"), sc.raw);
  const auto& r = side.at("resolved");
  EXPECT_DOUBLE_EQ(r.at("p_max_w").get<double>(), 0.1);
  EXPECT_DOUBLE_EQ(r.at("zeta").get<double>(), 0.7);
  EXPECT_EQ(r.at("seed").get<std::uint64_t>(), 9u);
  EXPECT_EQ(r.at("n_states").get<int>(), 80);
  EXPECT_DOUBLE_EQ(r.at("tol").get<double>(), 1e-6);
  EXPECT_EQ(r.at("sweep_grid").size(), 5u);
  EXPECT_EQ(r.at("rician_factor").get<double>(), 3.0);
  EXPECT_TRUE(side.contains("version"));
  EXPECT_TRUE(side.contains("columns"));
  fs::remove_all(dir);
}

TEST(Sweep, SumRateNonincreasingAlongTargets) {
  const Scenario sc = parse_scenario(small_rician_scenario("pc", 150, 6));
  const std::string dir = (fs::temp_directory_path() / "swipt_mono").string();
  const SweepOutcome out = run_region_sweep(sc, dir);
  for (std::size_t i = 1; i < out.region.rows.size(); ++i)
    EXPECT_LE(out.region.rows[i].sum_rate, out.region.rows[i - 1].sum_rate + 1e-6);
  fs::remove_all(dir);
}

TEST(Sweep, BoundarySweepsOnFixedChannel) {
  nlohmann::json j;
  j["name"] = "unit_awgn";
  j["system"] = {{"p_max_dbm", 20.0}, {"zeta", 0.7}, {"noise_dbm", -50.0}};
  const CMat h = demo::awgn_two_user_channels();
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < 2; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < 2; ++c) row.push_back({h(r, c).real(), h(r, c).imag()});
    rows.push_back(row);
  }
  j["channel"] = {{"type", "fixed"}, {"h", rows}};
  j["scheme"] = "fc";
  j["sweep"] = {{"mode", "ee_weights"}, {"points", 41}};
  const std::string dir = (fs::temp_directory_path() / "swipt_boundary").string();
  Scenario sc = parse_scenario(j);
  const SweepOutcome ee = run_region_sweep(sc, dir);
  ASSERT_EQ(ee.region.rows.size(), 41u);
  // weight on receiver 1 rises along the sweep: its harvest must not fall
  for (std::size_t i = 1; i < ee.region.rows.size(); ++i) {
    EXPECT_GE(ee.region.rows[i].q[0], ee.region.rows[i - 1].q[0] - 1e-12);
    EXPECT_LE(ee.region.rows[i].q[1], ee.region.rows[i - 1].q[1] + 1e-12);
  }

  j["name"] = "unit_awgn_re";
  j["sweep"] = {{"mode", "re_prices"}, {"points", 31}, {"mu_min", 1e2}, {"mu_max", 1e6}};
  sc = parse_scenario(j);
  const SweepOutcome re = run_region_sweep(sc, dir);
  for (std::size_t i = 1; i < re.region.rows.size(); ++i) {
    EXPECT_LE(re.region.rows[i].sum_rate, re.region.rows[i - 1].sum_rate + 1e-12);
    EXPECT_GE(re.region.rows[i].q[1], re.region.rows[i - 1].q[1] - 1e-12);
  }
  fs::remove_all(dir);
}

TEST(Summary, MatchesCsvRowExactly) {
  const Scenario sc = parse_scenario(small_rician_scenario("fc", 60, 3));
  const ChannelEnsemble ens = sc.build_ensemble();
  const SolveOutcome so = run_solve_targets(sc, ens, {1e-4, 1e-4}, 1e-4);
  RERegion region;
  region.users = 2;
  region.frac_names = so.summary.frac_names;
  region.rows = {so.row};
  const std::string path = (fs::temp_directory_path() / "swipt_summary.csv").string();
  write_region_csv(path, region);
  const RERegion back = read_region_csv(path);
  EXPECT_EQ(back.rows[0].sum_rate, so.summary.sum_rate);
  for (int u = 0; u < 2; ++u) EXPECT_EQ(back.rows[0].q[u], so.summary.energies[u]);
  for (std::size_t i = 0; i < so.summary.fracs.size(); ++i)
    EXPECT_EQ(back.rows[0].fracs[i], so.summary.fracs[i]);
  fs::remove(path);
}

}  // namespace
