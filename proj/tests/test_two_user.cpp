#include "swipt/demo_setups.hpp"
#include "swipt/oracles.hpp"
#include "swipt/rng.hpp"
#include "swipt/two_user.hpp"

#include <gtest/gtest.h>

namespace {

using namespace swipt;

ChannelState awgn_state() {
  ChannelState st;
  st.h = demo::awgn_two_user_channels();
  st.noise_powers = {1e-8, 1e-8};
  return st;
}

ChannelEnsemble case_ensemble(int case_id, int n_states, std::uint64_t seed = 42) {
  const SystemParams prm = demo::default_system(2);
  return sample_rician(demo::two_user_geometry(case_id), RicianParams{}, prm.noise_powers, seed,
                       n_states);
}

DualPoint prices(double m1, double m2) {
  DualPoint d;
  d.mu = Vec(2);
  d.mu << m1, m2;
  return d;
}

double objective(const StateDecision& d, const DualPoint& mu) {
  return d.rates[0] + d.rates[1] + mu.mu(0) * d.energies[0] + mu.mu(1) * d.energies[1];
}

TEST(FcSubproblem, ZeroPricesPickBothDecoding) {
  const SystemParams prm = demo::default_system(2);
  Cscg rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    ChannelState st;
    st.h.resize(2, 2);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) st.h(r, c) = 0.03 * rng.standard_complex();
    st.noise_powers = {1e-8, 1e-8};
    const StateDecision d = fc_subproblem(st, prices(0.0, 0.0), prm);
    EXPECT_EQ(d.mode.rho[0], 1);
    EXPECT_EQ(d.mode.rho[1], 1);
    EXPECT_EQ(d.s_e.rank(), 0);
  }
}

TEST(FcSubproblem, HugePricesPickBothHarvesting) {
  const SystemParams prm = demo::default_system(2);
  const ChannelState st = awgn_state();
  const StateDecision d = fc_subproblem(st, prices(1e6, 1e6), prm);
  EXPECT_EQ(d.mode.rho[0], 0);
  EXPECT_EQ(d.mode.rho[1], 0);
  // the covariance is the closed-form full-power beam
  Vec mu(2);
  mu << 1e6, 1e6;
  const std::vector<CVec> rows{st.h.row(0).transpose(), st.h.row(1).transpose()};
  const TwoUserEbf cf = closed_form_two_user_ebf(rows, mu, prm.p_max);
  EXPECT_NEAR((d.s_e.s - cf.s_e.s).norm(), 0.0, 1e-12);
  EXPECT_EQ(d.s_e.rank(), 1);
}

TEST(FcSubproblem, MixedModeBoundaryMatchesJointGrid) {
  // sweep the energy price and compare the (ID,EH) branch against a dense
  // joint grid over the split and the beam phase
  const SystemParams prm = demo::default_system(2);
  const ChannelState st = awgn_state();
  const detail::TwoUserView v = detail::make_view(st);
  const double p = prm.p_max;
  const int np = 10000, nt = 10000;
  for (const double mu2 : {3e3, 3e4, 3e5}) {
    const detail::ModeCandidate c = detail::fc_id_eh(v, mu2, prm);
    // joint grid: for each split, the best phase contribution is the cosine
    // peak over the grid, evaluated without the solver's alignment shortcut
    const cd z = st.h(1, 0) * std::conj(st.h(1, 1));
    double best = -1e300;
    for (int i = 0; i < np; ++i) {
      const double p1 = p * static_cast<double>(i) / (np - 1);
      const double rate = std::log2(1.0 + v.n11 * p1 / v.s1);
      const double base = v.n21 * p1 + v.n21 * (p - p1) + v.n22 * p;
      const double amp = 2.0 * std::sqrt(p - p1) * std::sqrt(p);
      double cosbest = -1.0;
      for (int t = 0; t < nt; ++t) {
        const double th = 2.0 * M_PI * t / nt;
        cosbest = std::max(cosbest, std::cos(std::arg(z) - th));
      }
      const double q2 = prm.zeta * (base + amp * std::abs(z) * cosbest);
      best = std::max(best, rate + mu2 * q2);
    }
    const double solver = c.rate1 + mu2 * c.q2;
    EXPECT_NEAR(solver, best, 1e-3 * std::abs(best)) << "mu2=" << mu2;
    EXPECT_GE(solver, best - 1e-9 * std::abs(best));
  }
}

TEST(FcCrossCheck, TwoSidedAgreementOnRandomStates) {
  const SystemParams prm = demo::default_system(2);
  Cscg rng(23);
  for (int trial = 0; trial < 8; ++trial) {
    ChannelState st;
    st.h.resize(2, 2);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) st.h(r, c) = 0.03 * rng.standard_complex();
    st.noise_powers = {1e-8, 1e-8};
    const DualPoint mu = prices(std::pow(10.0, 2.0 + 4.0 * rng.uniform()),
                                std::pow(10.0, 2.0 + 4.0 * rng.uniform()));
    const StateDecision d = fc_subproblem(st, mu, prm);
    const double f_solver = objective(d, mu);
    const double f_oracle = fc_cross_check(st, mu, prm, 200);
    EXPECT_NEAR(f_solver, f_oracle, 1e-3 * std::abs(f_oracle));
  }
}

TEST(FcCrossCheck, ZeroPricesReduceToOnOffOptimum) {
  const SystemParams prm = demo::default_system(2);
  const ChannelState st = awgn_state();
  const double oracle = fc_cross_check(st, prices(0.0, 0.0), prm, 200);
  // direct on-off enumeration
  const double p = prm.p_max;
  double best = 0.0;
  for (const auto& pc : {std::pair{0.0, p}, {p, 0.0}, {p, p}}) {
    const double r1 =
        std::log2(1.0 + std::norm(st.h(0, 0)) * pc.first /
                            (std::norm(st.h(0, 1)) * pc.second + st.noise_powers[0]));
    const double r2 =
        std::log2(1.0 + std::norm(st.h(1, 1)) * pc.second /
                            (std::norm(st.h(1, 0)) * pc.first + st.noise_powers[1]));
    best = std::max(best, r1 + r2);
  }
  EXPECT_NEAR(oracle, best, 1e-9 * best);
}

TEST(FcCrossCheck, NoCrossChannelsPickFullPowerEverywhere) {
  SystemParams prm = demo::default_system(2);
  ChannelState st;
  st.h = CMat::Zero(2, 2);
  st.h(0, 0) = cd(0.03, 0.0);
  st.h(1, 1) = cd(0.02, 0.01);
  st.noise_powers = {1e-8, 1e-8};
  const double oracle = fc_cross_check(st, prices(0.0, 0.0), prm, 100);
  const double both = std::log2(1.0 + std::norm(st.h(0, 0)) * prm.p_max / st.noise_powers[0]) +
                      std::log2(1.0 + std::norm(st.h(1, 1)) * prm.p_max / st.noise_powers[1]);
  EXPECT_NEAR(oracle, both, 1e-9 * both);
  const StateDecision d = fc_subproblem(st, prices(0.0, 0.0), prm);
  EXPECT_DOUBLE_EQ(d.powers.p_info[0], prm.p_max);
  EXPECT_DOUBLE_EQ(d.powers.p_info[1], prm.p_max);
}

TEST(PcSubproblem, BranchStructure) {
  const SystemParams prm = demo::default_system(2);
  const ChannelState st = awgn_state();
  // harvest-harvest branch always transmits at full power
  const StateDecision d_eh = pc_subproblem(st, prices(1e6, 1e6), prm);
  EXPECT_EQ(d_eh.mode.rho[0], 0);
  EXPECT_EQ(d_eh.mode.rho[1], 0);
  EXPECT_DOUBLE_EQ(d_eh.powers.p_info[0], prm.p_max);
  EXPECT_DOUBLE_EQ(d_eh.powers.p_info[1], prm.p_max);
  EXPECT_EQ(d_eh.s_e.rank(), 0);

  // mixed branch keeps the decoder's Tx at full power, partner on or off
  Cscg rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    ChannelState r;
    r.h.resize(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) r.h(i, j) = 0.03 * rng.standard_complex();
    r.noise_powers = {1e-8, 1e-8};
    const StateDecision d = pc_subproblem(r, prices(0.0, 2e4), prm);
    if (d.mode.rho[0] == 1 && d.mode.rho[1] == 0) {
      EXPECT_DOUBLE_EQ(d.powers.p_info[0], prm.p_max);
      EXPECT_TRUE(d.powers.p_info[1] == 0.0 || d.powers.p_info[1] == prm.p_max);
    }
  }
}

TEST(PcSubproblem, ZeroPricesAgreeWithFullCooperation) {
  const SystemParams prm = demo::default_system(2);
  Cscg rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    ChannelState st;
    st.h.resize(2, 2);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) st.h(r, c) = 0.03 * rng.standard_complex();
    st.noise_powers = {1e-8, 1e-8};
    const StateDecision a = fc_subproblem(st, prices(0.0, 0.0), prm);
    const StateDecision b = pc_subproblem(st, prices(0.0, 0.0), prm);
    EXPECT_EQ(a.mode.rho, b.mode.rho);
    EXPECT_EQ(a.powers.p_info, b.powers.p_info);
  }
}

TEST(NcDecide, ThresholdRule) {
  const SystemParams prm = demo::default_system(2);
  const ChannelState st = awgn_state();
  const StateDecision all_id = nc_decide(st, prices(0.0, 0.0), prm);
  EXPECT_EQ(all_id.mode.rho[0], 1);
  EXPECT_EQ(all_id.mode.rho[1], 1);
  const StateDecision all_eh = nc_decide(st, prices(1e9, 1e9), prm);
  EXPECT_EQ(all_eh.mode.rho[0], 0);
  EXPECT_EQ(all_eh.mode.rho[1], 0);

  // exact boundary prices harvest (the decode side needs a strict win)
  const detail::TwoUserView v = detail::make_view(st);
  const double r1 = std::log2(1.0 + v.n11 * prm.p_max / (v.n12 * prm.p_max + v.s1));
  const double q1 = prm.zeta * (v.n11 + v.n12) * prm.p_max;
  const StateDecision b = nc_decide(st, prices(r1 / q1, 0.0), prm);
  EXPECT_EQ(b.mode.rho[0], 0);
  EXPECT_EQ(b.mode.rho[1], 1);
  // both transmitters always carry information at full power
  EXPECT_DOUBLE_EQ(b.powers.p_info[0], prm.p_max);
  EXPECT_DOUBLE_EQ(b.powers.p_info[1], prm.p_max);
}

TEST(SolveScheme, ZeroTargetsGiveUnconstrainedOnOffCapacity) {
  const auto ens = case_ensemble(1, 400);
  const SystemParams prm = demo::default_system(2);
  const SchemeResult r =
      solve_scheme(ens, TwoUserScheme::kFullCooperation, EnergyTargets{{0.0, 0.0}}, prm);
  EXPECT_TRUE(r.feasible);
  EXPECT_EQ(r.dual.mu(0), 0.0);
  EXPECT_EQ(r.dual.mu(1), 0.0);
  double expect = 0.0;
  for (const auto& st : ens.states) {
    const double oracle = fc_cross_check(st, prices(0.0, 0.0), prm, 2);  // on-off only needs corners
    expect += oracle;
  }
  expect /= ens.size();
  EXPECT_NEAR(r.avg_sum_rate, expect, 1e-9 * expect);
}

TEST(SolveScheme, NoCooperationMatchesPerUserBisection) {
  const auto ens = case_ensemble(1, 500);
  const SystemParams prm = demo::default_system(2);
  // a mid-range common target
  double ceil0 = 0.0;
  for (const auto& st : ens.states)
    ceil0 += prm.zeta * prm.p_max * (std::norm(st.h(0, 0)) + std::norm(st.h(0, 1)));
  ceil0 /= ens.size();
  const double q_bar = 0.5 * ceil0;
  const SchemeResult r =
      solve_scheme(ens, TwoUserScheme::kNoCooperation, EnergyTargets{{q_bar, q_bar}}, prm);
  ASSERT_TRUE(r.feasible);
  double rate_sum = 0.0;
  for (int user = 0; user < 2; ++user) {
    const auto bis = oracles::nc_user_bisection(ens, user, q_bar, prm.p_max, prm.zeta);
    ASSERT_TRUE(bis.feasible);
    rate_sum += bis.avg_rate;
    EXPECT_GE(bis.avg_energy, q_bar - 1e-12);
    EXPECT_NEAR(r.dual.mu(user), bis.mu, 1e-6 * std::max(1.0, bis.mu)) << "user " << user;
  }
  EXPECT_NEAR(r.avg_sum_rate, rate_sum, 1e-6 * std::max(1.0, rate_sum));
}

TEST(SolveScheme, SchemeDominanceAtMatchedTargets) {
  const auto ens = case_ensemble(1, 400);
  const SystemParams prm = demo::default_system(2);
  // common ceiling is the non-beamformed one
  double ceiling = std::numeric_limits<double>::infinity();
  for (int user = 0; user < 2; ++user) {
    double c = 0.0;
    for (const auto& st : ens.states)
      c += prm.zeta * prm.p_max * (std::norm(st.h(user, 0)) + std::norm(st.h(user, 1)));
    ceiling = std::min(ceiling, c / ens.size());
  }
  for (const double frac : {0.25, 0.55, 0.8}) {
    const EnergyTargets tg{{frac * ceiling, frac * ceiling}};
    const SchemeResult fc = solve_scheme(ens, TwoUserScheme::kFullCooperation, tg, prm);
    const SchemeResult pc = solve_scheme(ens, TwoUserScheme::kPartialCooperation, tg, prm);
    const SchemeResult nc = solve_scheme(ens, TwoUserScheme::kNoCooperation, tg, prm);
    ASSERT_TRUE(fc.feasible && pc.feasible && nc.feasible) << "frac " << frac;
    EXPECT_GE(fc.avg_sum_rate, pc.avg_sum_rate - 1e-6) << "frac " << frac;
    EXPECT_GE(pc.avg_sum_rate, nc.avg_sum_rate - 1e-6) << "frac " << frac;
    for (const auto* r : {&fc, &pc, &nc})
      for (int u = 0; u < 2; ++u)
        EXPECT_GE(r->avg_energies[u],
                  tg.q_bar[u] - 1e-6 * std::max(tg.q_bar[u], prm.p_max));
  }
}

TEST(SolveScheme, SumRateNonincreasingInTargets) {
  const auto ens = case_ensemble(2, 300, 11);
  const SystemParams prm = demo::default_system(2);
  double ceiling = std::numeric_limits<double>::infinity();
  for (int user = 0; user < 2; ++user) {
    double c = 0.0;
    for (const auto& st : ens.states)
      c += prm.zeta * prm.p_max * (std::norm(st.h(user, 0)) + std::norm(st.h(user, 1)));
    ceiling = std::min(ceiling, c / ens.size());
  }
  for (const TwoUserScheme scheme : {TwoUserScheme::kFullCooperation,
                                     TwoUserScheme::kPartialCooperation,
                                     TwoUserScheme::kNoCooperation}) {
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 5; ++i) {
      const double q = 0.85 * ceiling * i / 5.0;
      const SchemeResult r = solve_scheme(ens, scheme, EnergyTargets{{q, q}}, prm);
      ASSERT_TRUE(r.feasible);
      EXPECT_LE(r.avg_sum_rate, prev + 1e-6);
      prev = r.avg_sum_rate;
    }
  }
}

TEST(SolveScheme, FullCooperationStructuralInvariants) {
  const auto ens = case_ensemble(1, 300, 5);
  const SystemParams prm = demo::default_system(2);
  double ceiling = std::numeric_limits<double>::infinity();
  for (int user = 0; user < 2; ++user) {
    double c = 0.0;
    for (const auto& st : ens.states)
      c += prm.zeta * prm.p_max *
           std::pow(std::abs(st.h(user, 0)) + std::abs(st.h(user, 1)), 2);
    ceiling = std::min(ceiling, c / ens.size());
  }
  const double q = 0.5 * ceiling;
  const SchemeResult r =
      solve_scheme(ens, TwoUserScheme::kFullCooperation, EnergyTargets{{q, q}}, prm);
  ASSERT_TRUE(r.feasible);
  int beamed = 0;
  for (const auto& d : r.per_state) {
    const bool id1 = d.mode.rho[0] == 1, id2 = d.mode.rho[1] == 1;
    if (id1 && id2) {
      EXPECT_EQ(d.s_e.rank(), 0);
      continue;
    }
    // single energy beam, both budgets saturated
    EXPECT_EQ(d.s_e.rank(), 1);
    ++beamed;
    for (int u = 0; u < 2; ++u)
      EXPECT_NEAR(d.powers.p_info[u] + d.s_e.diag(u), prm.p_max, 1e-9 * prm.p_max);
  }
  EXPECT_GT(beamed, 0);
}

TEST(SolveScheme, UnreachableTargetsAreRejectedUpFront) {
  const auto ens = case_ensemble(1, 200, 8);
  const SystemParams prm = demo::default_system(2);
  const SchemeResult r = solve_scheme(ens, TwoUserScheme::kPartialCooperation,
                                      EnergyTargets{{1.0, 1.0}}, prm);
  EXPECT_FALSE(r.feasible);
  ASSERT_EQ(r.max_energy_bound.size(), 2u);
  EXPECT_LT(r.max_energy_bound[0], 1.0);
}

TEST(SolveScheme, PerStateDecisionsReevaluateConsistently) {
  const auto ens = case_ensemble(2, 100, 3);
  const SystemParams prm = demo::default_system(2);
  const SchemeResult r = solve_scheme(ens, TwoUserScheme::kFullCooperation,
                                      EnergyTargets{{5e-5, 5e-5}}, prm);
  ASSERT_TRUE(r.feasible);
  double rate = 0.0, q1 = 0.0, q2 = 0.0;
  for (std::size_t i = 0; i < r.per_state.size(); ++i) {
    const auto& d = r.per_state[i];
    const double rr0 = achievable_rate(ens.states[i], 0, d.mode, d.powers, prm);
    const double rr1 = achievable_rate(ens.states[i], 1, d.mode, d.powers, prm);
    const double qq0 = harvested_power(ens.states[i], 0, d.mode, d.powers, d.s_e, prm);
    const double qq1 = harvested_power(ens.states[i], 1, d.mode, d.powers, d.s_e, prm);
    EXPECT_DOUBLE_EQ(d.rates[0], rr0);
    EXPECT_DOUBLE_EQ(d.rates[1], rr1);
    EXPECT_DOUBLE_EQ(d.energies[0], qq0);
    EXPECT_DOUBLE_EQ(d.energies[1], qq1);
    rate += rr0 + rr1;
    q1 += qq0;
    q2 += qq1;
  }
  EXPECT_NEAR(r.avg_sum_rate, rate / ens.size(), 1e-12);
  EXPECT_NEAR(r.avg_energies[0], q1 / ens.size(), 1e-15);
  EXPECT_NEAR(r.avg_energies[1], q2 / ens.size(), 1e-15);
}

}  // namespace
