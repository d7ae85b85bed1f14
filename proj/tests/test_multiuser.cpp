#include "swipt/demo_setups.hpp"
#include "swipt/multiuser.hpp"
#include "swipt/rng.hpp"

#include <gtest/gtest.h>

namespace {

using namespace swipt;

ChannelEnsemble cluster_ensemble(int n_states, std::uint64_t seed = 7) {
  const SystemParams prm = demo::default_system(4);
  return sample_rician(demo::four_user_cluster_geometry(), RicianParams{}, prm.noise_powers, seed,
                       n_states);
}

TEST(GreedyGrouping, DominantPairGoesFirst) {
  // one cross pair 10x stronger than everything else
  ChannelEnsemble ens;
  ChannelState st;
  st.h = CMat::Constant(4, 4, cd(0.01, 0.0));
  st.h(2, 0) = cd(0.1, 0.0);  // Tx1 -> Rx3 dominates
  st.noise_powers.assign(4, 1e-8);
  ens.states.push_back(st);
  const Grouping g = greedy_grouping(ens);
  EXPECT_EQ(g.pairs[0][0], 0);
  EXPECT_EQ(g.pairs[0][1], 2);
  EXPECT_FALSE(g.leftover.has_value());
  g.validate(4);
}

TEST(GreedyGrouping, OddCountLeavesOneUser) {
  ChannelEnsemble ens;
  ChannelState st;
  st.h = CMat::Identity(3, 3) * 0.01;
  st.h(0, 1) = cd(0.05, 0.0);
  st.noise_powers.assign(3, 1e-8);
  ens.states.push_back(st);
  const Grouping g = greedy_grouping(ens);
  ASSERT_EQ(g.pairs.size(), 1u);
  ASSERT_TRUE(g.leftover.has_value());
  EXPECT_EQ(*g.leftover, 2);
  g.validate(3);
}

TEST(GreedyGrouping, ClusteredLayoutPairsWithinClusters) {
  const auto ens = cluster_ensemble(500);
  const Grouping g = greedy_grouping(ens);
  ASSERT_EQ(g.pairs.size(), 2u);
  const auto has = [&](int a, int b) {
    for (const auto& pr : g.pairs)
      if ((pr[0] == a && pr[1] == b) || (pr[0] == b && pr[1] == a)) return true;
    return false;
  };
  EXPECT_TRUE(has(0, 1));
  EXPECT_TRUE(has(2, 3));
}

TEST(EnumerateGroupings, CountsMatchDoubleFactorial) {
  EXPECT_EQ(enumerate_groupings(4).size(), 3u);
  EXPECT_EQ(enumerate_groupings(6).size(), 15u);
  EXPECT_EQ(enumerate_groupings(3).size(), 3u);  // pair + leftover choices
}

TEST(Pairwise, SingleGroupReducesToTwoUserSolver) {
  const SystemParams prm = demo::default_system(2);
  const auto ens = sample_rician(demo::two_user_geometry(1), RicianParams{}, prm.noise_powers, 17,
                                 300);
  Grouping g;
  g.pairs = {{0, 1}};
  const std::vector<double> targets(2, 2e-4);
  const PairwiseResult pw = pairwise_cooperation(ens, g, targets, prm);
  EnergyTargets tg;
  tg.q_bar = {2e-4, 2e-4};
  const SchemeResult direct = solve_scheme(ens, TwoUserScheme::kFullCooperation, tg, prm);
  EXPECT_NEAR(pw.avg_sum_rate, direct.avg_sum_rate, 1e-12);
  EXPECT_NEAR(pw.avg_energies[0], direct.avg_energies[0], 1e-15);
  EXPECT_NEAR(pw.avg_sum_rate, pw.avg_sum_rate_optimized, 1e-12);
}

TEST(Pairwise, NoInterGroupChannelsMakeRealizedEqualOptimized) {
  // two ideal clusters: zero channel gain across groups
  Cscg rng(31);
  ChannelEnsemble ens;
  for (int s = 0; s < 120; ++s) {
    ChannelState st;
    st.h = CMat::Zero(4, 4);
    for (int blk = 0; blk < 2; ++blk)
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
          st.h(2 * blk + r, 2 * blk + c) = 0.03 * rng.standard_complex();
    st.noise_powers.assign(4, 1e-8);
    ens.states.push_back(st);
  }
  Grouping g;
  g.pairs = {{0, 1}, {2, 3}};
  const std::vector<double> targets(4, 1e-4);
  const PairwiseResult pw = pairwise_cooperation(ens, g, targets, demo::default_system(4));
  EXPECT_NEAR(pw.avg_sum_rate, pw.avg_sum_rate_optimized, 1e-9);
  for (int u = 0; u < 4; ++u)
    EXPECT_NEAR(pw.avg_energies[u], pw.avg_energies_intra[u], 1e-12);
}

TEST(Pairwise, InterferenceOnlyHurtsRatesAndHelpsHarvest) {
  const auto ens = cluster_ensemble(300);
  const SystemParams prm = demo::default_system(4);
  const Grouping g = greedy_grouping(ens);
  const std::vector<double> targets(4, 2e-4);
  const PairwiseResult pw = pairwise_cooperation(ens, g, targets, prm);
  ASSERT_TRUE(pw.feasible);
  EXPECT_LE(pw.avg_sum_rate, pw.avg_sum_rate_optimized + 1e-9);
  for (int u = 0; u < 4; ++u)
    EXPECT_GE(pw.avg_energies[u], pw.avg_energies_intra[u] - 1e-12);
}

TEST(Pairwise, LeftoverUserRunsSoloThresholding) {
  const SystemParams prm = demo::default_system(3);
  Geometry geo;
  geo.tx = {{0.0, 0.0}, {1.0, 0.0}, {4.0, 4.0}};
  geo.rx = {{1.0, 1.0}, {0.0, 1.0}, {5.0, 5.0}};
  const auto ens = sample_rician(geo, RicianParams{}, prm.noise_powers, 5, 200);
  const Grouping g = greedy_grouping(ens);
  ASSERT_TRUE(g.leftover.has_value());
  std::vector<double> targets(3, 0.0);
  targets[static_cast<std::size_t>(*g.leftover)] = 5e-5;
  const PairwiseResult pw = pairwise_cooperation(ens, g, targets, prm);
  EXPECT_TRUE(pw.feasible);
  EXPECT_GE(pw.avg_energies[static_cast<std::size_t>(*g.leftover)], 5e-5 - 1e-12);
  EXPECT_LT(pw.frac_id[static_cast<std::size_t>(*g.leftover)], 1.0);
}

TEST(EiaSubproblem, ZeroPricesDecode) {
  const auto ens = cluster_ensemble(5);
  const SystemParams prm = demo::default_system(4);
  const JointDecision d = eia_subproblem(ens.states[0], Vec::Zero(4), prm);
  EXPECT_EQ(d.rho_ia, 1);
  for (double q : d.energies) EXPECT_DOUBLE_EQ(q, 0.0);
  double expect = 0.0;
  for (int u = 0; u < 4; ++u) expect += eia_rate(ens.states[0], u, 1, prm);
  double got = 0.0;
  for (double r : d.rates) got += r;
  EXPECT_NEAR(got, expect, 1e-12);
}

TEST(EiaSubproblem, TwoUserHarvestBranchIsTheClosedForm) {
  const SystemParams prm = demo::default_system(2);
  ChannelState st;
  st.h = demo::awgn_two_user_channels();
  st.noise_powers = {1e-8, 1e-8};
  Vec mu(2);
  mu << 4e5, 6e5;  // large prices force the harvest branch
  const JointDecision d = eia_subproblem(st, mu, prm);
  ASSERT_EQ(d.rho_ia, 0);
  const std::vector<CVec> rows{st.h.row(0).transpose(), st.h.row(1).transpose()};
  const TwoUserEbf cf = closed_form_two_user_ebf(rows, mu, prm.p_max);
  EXPECT_NEAR((d.s_e.s - cf.s_e.s).norm(), 0.0, 1e-10);
}

TEST(EiaSubproblem, HarvestBranchCertifiedOnThreeUsers) {
  Cscg rng(41);
  const SystemParams prm = demo::default_system(3);
  ChannelState st;
  st.h.resize(3, 3);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) st.h(r, c) = rng.standard_complex();
  st.noise_powers.assign(3, 1e-8);
  Vec mu = Vec::Constant(3, 1e3);
  const JointDecision d = eia_subproblem(st, mu, prm);  // throws if the gap fails
  EXPECT_EQ(d.rho_ia, 0);
  for (int u = 0; u < 3; ++u) EXPECT_GT(d.energies[static_cast<std::size_t>(u)], 0.0);
}

TEST(SolveEia, ZeroTargetsDecodeEverywhere) {
  const auto ens = cluster_ensemble(200);
  const SystemParams prm = demo::default_system(4);
  const EiaResult r = solve_eia(ens, std::vector<double>(4, 0.0), prm, false);
  EXPECT_TRUE(r.feasible);
  EXPECT_DOUBLE_EQ(r.frac_id, 1.0);
  double expect = 0.0;
  for (const auto& st : ens.states)
    for (int u = 0; u < 4; ++u) expect += eia_rate(st, u, 1, prm);
  expect /= ens.size();
  EXPECT_NEAR(r.avg_sum_rate, expect, 1e-9 * expect);
}

TEST(SolveEia, DiagonalChannelsFillEveryCap) {
  Cscg rng(53);
  ChannelEnsemble ens;
  for (int s = 0; s < 60; ++s) {
    ChannelState st;
    st.h = CMat::Zero(3, 3);
    for (int u = 0; u < 3; ++u) st.h(u, u) = 0.02 + 0.01 * rng.uniform();
    st.noise_powers.assign(3, 1e-8);
    ens.states.push_back(st);
  }
  const SystemParams prm = demo::default_system(3);
  // targets high enough that some states must harvest
  double ceil0 = 0.0;
  for (const auto& st : ens.states) ceil0 += prm.zeta * prm.p_max * std::norm(st.h(0, 0));
  ceil0 /= ens.size();
  const EiaResult r = solve_eia(ens, std::vector<double>(3, 0.5 * ceil0), prm, false);
  ASSERT_TRUE(r.feasible);
  bool saw_harvest = false;
  for (const auto& d : r.per_state) {
    if (d.rho_ia == 1) continue;
    saw_harvest = true;
    for (int u = 0; u < 3; ++u)
      EXPECT_NEAR(d.s_e.s(u, u).real(), prm.p_max, 1e-6 * prm.p_max);
  }
  EXPECT_TRUE(saw_harvest);
}

TEST(SolveEia, GatingAndBeamRestriction) {
  const auto ens = cluster_ensemble(150, 19);
  const SystemParams prm = demo::default_system(4);
  const std::vector<double> targets(4, 3e-4);
  const EiaResult multi = solve_eia(ens, targets, prm, false);
  const EiaResult single = solve_eia(ens, targets, prm, true);
  ASSERT_TRUE(multi.feasible);
  ASSERT_TRUE(single.feasible);
  for (const auto* r : {&multi, &single})
    for (const auto& d : r->per_state) {
      double rsum = 0.0, qsum = 0.0;
      for (int u = 0; u < 4; ++u) {
        rsum += d.rates[static_cast<std::size_t>(u)];
        qsum += d.energies[static_cast<std::size_t>(u)];
      }
      if (d.rho_ia == 1)
        EXPECT_DOUBLE_EQ(qsum, 0.0);
      else
        EXPECT_DOUBLE_EQ(rsum, 0.0);
    }
  for (const auto& d : single.per_state)
    if (d.rho_ia == 0) EXPECT_LE(d.s_e.rank(), 1);
  // restricting the beam can only lose harvested value at matched prices
  EXPECT_GE(multi.avg_sum_rate, single.avg_sum_rate - 0.15);
}

}  // namespace
