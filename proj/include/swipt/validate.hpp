#pragma once

#include "swipt/demo_setups.hpp"
#include "swipt/driver.hpp"
#include "swipt/multiuser.hpp"
#include "swipt/oracles.hpp"
#include "swipt/two_user.hpp"

#include <chrono>
#include <string>
#include <vector>

// Cross-checks of the solver paths against independent references: grids,
// bisections, closed forms and exhaustive enumeration. Each check returns the
// worst observed statistic against its pinned tolerance.
namespace swipt::validate {

struct CheckResult {
  std::string name;
  bool pass = false;
  double observed = 0.0;
  double tol = 0.0;
  std::string detail;
  double seconds = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

inline CMat random_channels(Cscg& rng, int k, double scale) {
  CMat h(k, k);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) h(r, c) = scale * rng.standard_complex();
  return h;
}

inline std::vector<CVec> rows_of(const CMat& h) {
  std::vector<CVec> rows;
  for (int r = 0; r < h.rows(); ++r) rows.push_back(h.row(r).transpose());
  return rows;
}

}  // namespace detail

// Closed-form beamformer value against the dense phase grid and against the
// dual certificate p_max*(lambda1+lambda2).
inline CheckResult check_prop1(int instances, long grid_points, std::uint64_t seed) {
  detail::Stopwatch sw;
  Cscg rng(seed);
  const double p_max = 0.1;
  double worst_grid = 0.0, worst_dual = 0.0;
  for (int it = 0; it < instances; ++it) {
    const CMat h = detail::random_channels(rng, 2, 0.03);
    Vec mu(2);
    mu << 2.0 * rng.uniform(), 2.0 * rng.uniform();
    const TwoUserEbf cf = closed_form_two_user_ebf(detail::rows_of(h), mu, p_max);
    const auto grid = oracles::theta_grid_two_user(h, mu, p_max, grid_points);
    const double scale = std::max(std::abs(cf.value), 1e-300);
    worst_grid = std::max(worst_grid, std::abs(cf.value - grid.best_value) / scale);
    worst_dual = std::max(
        worst_dual, std::abs(cf.value - p_max * (cf.lambda1 + cf.lambda2)) / scale);
    if (grid.best_value > cf.value * (1.0 + 1e-12) + 1e-300) {
      CheckResult bad{"prop1", false, grid.best_value - cf.value, 0.0,
                      "grid exceeded the closed form", sw.seconds(), seed};
      return bad;
    }
  }
  CheckResult res;
  res.name = "prop1";
  res.observed = worst_grid;
  res.tol = 1e-6;
  res.pass = worst_grid <= 1e-6 && worst_dual <= 1e-9;
  res.detail = "max rel err vs theta grid " + format_double(worst_grid) +
               "; vs dual bound " + format_double(worst_dual) + " (tol 1e-9)";
  res.seconds = sw.seconds();
  res.seed = seed;
  return res;
}

// Ellipsoid-solved dual of the two-Tx beamformer against the closed-form
// multipliers, plus the complementary-slackness and boundary-feasibility
// residuals of the closed-form pair.
inline CheckResult check_appendix_dual(int instances, std::uint64_t seed) {
  detail::Stopwatch sw;
  Cscg rng(seed);
  const double p_max = 0.1;
  double worst_lambda = 0.0, worst_cs = 0.0, worst_schur = 0.0;
  for (int it = 0; it < instances; ++it) {
    const CMat h = detail::random_channels(rng, 2, 0.03);
    Vec mu(2);
    mu << 0.05 + 2.0 * rng.uniform(), 0.05 + 2.0 * rng.uniform();
    const auto rows = detail::rows_of(h);
    const TwoUserEbf cf = closed_form_two_user_ebf(rows, mu, p_max);
    const CMat a = swipt::detail::weight_matrix(rows, mu);
    const double anorm = a.norm();

    const DualSolve ds = dual_lambda_ellipsoid(a, p_max, 1e-12, 4000);
    worst_lambda = std::max(worst_lambda, std::abs(ds.lambda(0) - cf.lambda1) /
                                              std::max(cf.lambda1, 1e-300));
    worst_lambda = std::max(worst_lambda, std::abs(ds.lambda(1) - cf.lambda2) /
                                              std::max(cf.lambda2, 1e-300));

    CMat e = -a;
    e(0, 0) += cf.lambda1;
    e(1, 1) += cf.lambda2;
    worst_cs = std::max(worst_cs, (e * cf.s_e.s).norm() / std::max(anorm, 1e-300));

    CMat e2 = -a;
    e2(0, 0) += ds.lambda(0);
    e2(1, 1) += ds.lambda(1);
    Eigen::SelfAdjointEigenSolver<CMat> es(e2, Eigen::EigenvaluesOnly);
    worst_schur = std::max(worst_schur, -es.eigenvalues()(0) / std::max(anorm, 1e-300));
  }
  CheckResult res;
  res.name = "appendix_dual";
  res.observed = worst_lambda;
  res.tol = 1e-5;
  res.pass = worst_lambda <= 1e-5 && worst_cs <= 1e-8 && worst_schur <= 1e-9;
  res.detail = "max rel lambda err " + format_double(worst_lambda) + "; CS residual " +
               format_double(worst_cs) + " (tol 1e-8*|A|); boundary slack " +
               format_double(worst_schur) + " (tol 1e-9*|A|)";
  res.seconds = sw.seconds();
  res.seed = seed;
  return res;
}

// Per-state full-cooperation optimum against the exhaustive mode/power/phase
// grid: two-sided agreement within the grid-resolution budget.
inline CheckResult check_fc_oracle(int states, int grid_n, std::uint64_t seed) {
  detail::Stopwatch sw;
  Cscg rng(seed);
  SystemParams prm = demo::default_system(2);
  double worst = 0.0;
  for (int it = 0; it < states; ++it) {
    ChannelState st;
    st.h = detail::random_channels(rng, 2, 0.03);
    st.noise_powers = {1e-8, 1e-8};
    DualPoint mu;
    mu.mu = Vec(2);
    if (it % 10 == 9) {
      mu.mu << 0.0, 0.0;
    } else {
      mu.mu << std::pow(10.0, 2.0 + 4.0 * rng.uniform()), std::pow(10.0, 2.0 + 4.0 * rng.uniform());
    }
    const StateDecision d = fc_subproblem(st, mu, prm);
    const double f_solver = d.rates[0] + d.rates[1] + mu.mu(0) * d.energies[0] +
                            mu.mu(1) * d.energies[1];
    const double f_oracle = fc_cross_check(st, mu, prm, grid_n);
    const double rel = (f_solver - f_oracle) / std::max(std::abs(f_oracle), 1e-300);
    worst = std::max(worst, std::abs(rel));
  }
  CheckResult res;
  res.name = "fc_oracle";
  res.observed = worst;
  res.tol = 1e-3;
  res.pass = worst <= 1e-3;
  res.detail = "max two-sided rel deviation " + format_double(worst) + " at grid_n=" +
               std::to_string(grid_n);
  res.seconds = sw.seconds();
  res.seed = seed;
  return res;
}

// Numerical concavity certificate for the scalar split objective.
inline CheckResult check_concavity(int instances, int points, std::uint64_t seed) {
  detail::Stopwatch sw;
  Cscg rng(seed);
  const double p = 0.1;
  const double sigma = 1e-8;
  const double zeta = 0.7;
  double worst = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < instances; ++it) {
    const CMat h = detail::random_channels(rng, 2, 0.03);
    const double a = std::norm(h(0, 0)) / sigma;
    const double cross = std::abs(h(1, 0)) * std::abs(h(1, 1));
    const double mu2 = std::pow(10.0, 6.0 * rng.uniform());
    const double w = mu2 * zeta;
    const auto y = [&](double x) {
      return log2_1p(a * x) + w * 2.0 * cross * std::sqrt((p - x) * p);
    };
    const double fd = 1e-4 * p;
    for (int j = 0; j < points; ++j) {
      const double x = 2.0 * fd + (0.9 * p - 2.0 * fd) * rng.uniform();
      const double second = (y(x + fd) - 2.0 * y(x) + y(x - fd)) / (fd * fd);
      worst = std::max(worst, second);
    }
  }
  CheckResult res;
  res.name = "concavity";
  res.observed = worst;
  res.tol = 1e-6;
  res.pass = worst <= 1e-6;
  res.detail = "max numerical second difference " + format_double(worst);
  res.seconds = sw.seconds();
  res.seed = seed;
  return res;
}

// Certified relative duality gap of the K-Tx beamformer on random instances.
inline CheckResult check_sdp_gap(int instances, int k_users, std::uint64_t seed) {
  detail::Stopwatch sw;
  Cscg rng(seed);
  double worst = 0.0;
  int failures = 0;
  for (int it = 0; it < instances; ++it) {
    const CMat h = detail::random_channels(rng, k_users, 1.0);
    Vec mu(k_users);
    for (int u = 0; u < k_users; ++u) mu(u) = 0.05 + rng.uniform();
    EbfOptions opts;
    opts.tol = 1e-6;
    opts.throw_on_fail = false;
    const SdpSolution sol = weighted_energy_beamforming(detail::rows_of(h), mu, 0.1, opts);
    worst = std::max(worst, sol.gap);
    if (!sol.converged) ++failures;
  }
  CheckResult res;
  res.name = "sdp_gap_k" + std::to_string(k_users);
  res.observed = worst;
  res.tol = 1e-6;
  res.pass = worst <= 1e-6 && failures == 0;
  res.detail = "max certified relative gap " + format_double(worst) + ", " +
               std::to_string(failures) + " non-certified";
  res.seconds = sw.seconds();
  res.seed = seed;
  return res;
}

// Rank-one randomization quality against the relaxed optimum.
inline CheckResult check_randomization_ratio(int instances, int draws, double ratio_bound,
                                             std::uint64_t seed) {
  detail::Stopwatch sw;
  Cscg rng(seed);
  double worst = std::numeric_limits<double>::infinity();
  for (int it = 0; it < instances; ++it) {
    const CMat h = detail::random_channels(rng, 3, 1.0);
    Vec mu(3);
    for (int u = 0; u < 3; ++u) mu(u) = 0.05 + rng.uniform();
    const auto rows = detail::rows_of(h);
    const SdpSolution sol = weighted_energy_beamforming(rows, mu, 0.1);
    const CMat a = swipt::detail::weight_matrix(rows, mu);
    const EnergyCovariance s1 =
        randomize_rank_one(sol.s_e, a, 0.1, draws, seed ^ (0x9e3779b97f4a7c15ULL * (it + 1)));
    const double v1 = swipt::detail::trace_product(a, s1.s);
    worst = std::min(worst, v1 / std::max(sol.primal_value, 1e-300));
  }
  CheckResult res;
  res.name = "randomization_ratio";
  res.observed = worst;
  res.tol = ratio_bound;
  res.pass = worst >= ratio_bound;
  res.detail = "min single-beam/relaxed ratio " + format_double(worst) + " over " +
               std::to_string(instances) + " instances, " + std::to_string(draws) + " draws";
  res.seconds = sw.seconds();
  res.seed = seed;
  return res;
}

// Greedy pairing on the clustered layout: must return {0,1},{2,3} and beat the
// other two pairings of K=4 at a mid-range target.
inline CheckResult check_grouping_exhaustive(int n_states, std::uint64_t seed) {
  detail::Stopwatch sw;
  const Geometry geo = demo::four_user_cluster_geometry();
  const RicianParams rp;
  const SystemParams prm = demo::default_system(4);
  const ChannelEnsemble ens = sample_rician(geo, rp, prm.noise_powers, seed, n_states);

  const Grouping greedy = greedy_grouping(ens);
  const auto same_pairing = [](const Grouping& a, const std::vector<std::array<int, 2>>& want) {
    if (a.pairs.size() != want.size()) return false;
    for (const auto& w : want) {
      bool found = false;
      for (const auto& pr : a.pairs)
        found = found || (pr[0] == w[0] && pr[1] == w[1]) || (pr[0] == w[1] && pr[1] == w[0]);
      if (!found) return false;
    }
    return true;
  };
  const bool greedy_ok = same_pairing(greedy, {{0, 1}, {2, 3}});

  // mid-range common target from the intra-pair ceilings of the greedy case
  double ceiling = std::numeric_limits<double>::infinity();
  {
    const Eigen::MatrixXd mp = mean_channel_power(ens);
    for (const auto& pr : greedy.pairs)
      for (int s = 0; s < 2; ++s) {
        const int u = pr[static_cast<std::size_t>(s)];
        const int v = pr[static_cast<std::size_t>(1 - s)];
        double amp = 0.0;
        for (const auto& st : ens.states)
          amp += std::pow(std::abs(st.h(u, u)) + std::abs(st.h(u, v)), 2);
        amp /= ens.size();
        ceiling = std::min(ceiling, prm.zeta * prm.p_max * amp);
        (void)mp;
      }
  }
  const double q_mid = 0.4 * ceiling;
  const std::vector<double> targets(4, q_mid);

  double greedy_rate = 0.0;
  double best_other = -std::numeric_limits<double>::infinity();
  std::string rates_note;
  for (const Grouping& g : enumerate_groupings(4)) {
    const PairwiseResult pr = pairwise_cooperation(ens, g, targets, prm, 1e-6);
    rates_note += " {" + std::to_string(g.pairs[0][0]) + std::to_string(g.pairs[0][1]) + "|" +
                  std::to_string(g.pairs[1][0]) + std::to_string(g.pairs[1][1]) +
                  "}=" + format_double(pr.avg_sum_rate);
    if (same_pairing(g, greedy.pairs))
      greedy_rate = pr.avg_sum_rate;
    else
      best_other = std::max(best_other, pr.avg_sum_rate);
  }
  CheckResult res;
  res.name = "grouping_exhaustive";
  res.observed = greedy_rate - best_other;
  res.tol = -1e-9;
  res.pass = greedy_ok && greedy_rate >= best_other - 1e-9;
  res.detail = std::string(greedy_ok ? "greedy pairing {0,1}{2,3}" : "greedy pairing WRONG") +
               "; sum-rates at q=" + format_double(q_mid) + ":" + rates_note;
  res.seconds = sw.seconds();
  res.seed = seed;
  return res;
}

struct SuiteOptions {
  int instances = 100;
  long grid_points = 1000000;
  int grid_n = 200;
  int n_states = 1000;
  int draws = 1000;
  double ratio_bound = 0.9;
  std::uint64_t seed = 20240801;
};

inline std::vector<CheckResult> run_suite(const std::string& suite, const SuiteOptions& o) {
  std::vector<CheckResult> out;
  if (suite == "prop1") {
    out.push_back(check_prop1(o.instances, o.grid_points, o.seed));
  } else if (suite == "appendix_dual") {
    out.push_back(check_appendix_dual(o.instances, o.seed));
  } else if (suite == "fc_oracle") {
    out.push_back(check_fc_oracle(o.instances, o.grid_n, o.seed));
  } else if (suite == "sdp_gap") {
    out.push_back(check_sdp_gap(o.instances, 3, o.seed));
    out.push_back(check_sdp_gap(o.instances, 4, o.seed + 1));
    out.push_back(check_randomization_ratio(std::min(o.instances, 50), o.draws, o.ratio_bound,
                                            o.seed + 2));
  } else if (suite == "grouping_exhaustive") {
    out.push_back(check_grouping_exhaustive(o.n_states, o.seed));
  } else {
    throw std::invalid_argument("unknown validation suite: " + suite);
  }
  return out;
}

inline nlohmann::json report_json(const std::vector<CheckResult>& checks) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json j;
    j["name"] = c.name;
    j["pass"] = c.pass;
    j["observed"] = c.observed;
    j["tolerance"] = c.tol;
    j["detail"] = c.detail;
    j["seconds"] = c.seconds;
    j["seed"] = c.seed;
    arr.push_back(j);
  }
  return arr;
}

}  // namespace swipt::validate
