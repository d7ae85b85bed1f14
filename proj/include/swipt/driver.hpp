#pragma once

#include "swipt/multiuser.hpp"
#include "swipt/report.hpp"
#include "swipt/scenario.hpp"
#include "swipt/two_user.hpp"
#include "swipt/version.hpp"

#include <filesystem>
#include <string>

namespace swipt {

namespace detail {

inline std::vector<std::string> two_user_frac_names() {
  return {"frac_mode_id_id", "frac_mode_id_eh", "frac_mode_eh_id", "frac_mode_eh_eh"};
}

// Per-user average-energy ceiling of a scheme over an ensemble, used to place
// the default sweep grid.
inline double sweep_energy_ceiling(const Scenario& sc, const ChannelEnsemble& ens) {
  const int k = ens.users();
  const double p = sc.system.p_max;
  const double zeta = sc.system.zeta;
  Eigen::VectorXd ceil_k = Eigen::VectorXd::Zero(k);
  const bool beamformed = sc.scheme == "fc" || sc.scheme == "eia";
  for (const auto& st : ens.states) {
    for (int u = 0; u < k; ++u) {
      if (beamformed) {
        double amp = 0.0;
        for (int l = 0; l < k; ++l) amp += std::abs(st.h(u, l));
        ceil_k(u) += zeta * p * amp * amp;
      } else if (sc.scheme == "pairwise") {
        // intra-group signals only; pairing not known here, so use the
        // conservative single-Tx floor raised by the strongest partner
        double best = 0.0;
        for (int l = 0; l < k; ++l)
          if (l != u) best = std::max(best, std::abs(st.h(u, l)));
        const double amp = std::abs(st.h(u, u)) + best;
        ceil_k(u) += zeta * p * amp * amp;
      } else {
        double acc = 0.0;
        for (int l = 0; l < k; ++l) acc += std::norm(st.h(u, l));
        ceil_k(u) += zeta * p * acc;
      }
    }
  }
  ceil_k /= static_cast<double>(ens.size());
  return ceil_k.minCoeff();
}

}  // namespace detail

struct SolveOutcome {
  SolveSummary summary;
  RegionRow row;
};

// Solves one target vector under the scenario's scheme.
inline SolveOutcome run_solve_targets(const Scenario& sc, const ChannelEnsemble& ens,
                                      const std::vector<double>& targets, double sweep_value) {
  SolveOutcome out;
  out.summary.scheme = sc.scheme;
  out.summary.targets = targets;
  out.row.sweep_value = sweep_value;

  if (sc.scheme == "fc" || sc.scheme == "pc" || sc.scheme == "nc") {
    const TwoUserScheme scheme = sc.scheme == "fc" ? TwoUserScheme::kFullCooperation
                                 : sc.scheme == "pc" ? TwoUserScheme::kPartialCooperation
                                                     : TwoUserScheme::kNoCooperation;
    EnergyTargets tg;
    tg.q_bar = {targets.at(0), targets.at(1)};
    const SchemeResult r = solve_scheme(ens, scheme, tg, sc.system, sc.tol);
    out.summary.sum_rate = r.avg_sum_rate;
    out.summary.energies = r.avg_energies;
    out.summary.feasible = r.feasible;
    out.summary.gap = r.gap;
    out.summary.frac_names = detail::two_user_frac_names();
    out.summary.fracs.assign(r.mode_fractions.begin(), r.mode_fractions.end());
    out.summary.dual.assign(r.dual.mu.data(), r.dual.mu.data() + r.dual.mu.size());
    if (!r.dual_converged) out.summary.notes.push_back("dual search did not certify convergence");
  } else if (sc.scheme == "pairwise") {
    const Grouping g = greedy_grouping(ens);
    const PairwiseResult r = pairwise_cooperation(ens, g, targets, sc.system, sc.tol);
    out.summary.sum_rate = r.avg_sum_rate;
    out.summary.energies = r.avg_energies;
    out.summary.feasible = r.feasible;
    out.summary.gap = r.gap;
    for (int u = 0; u < ens.users(); ++u)
      out.summary.frac_names.push_back("frac_id_u" + std::to_string(u + 1));
    out.summary.fracs = r.frac_id;
    for (const auto& gr : r.group_results)
      for (int i = 0; i < gr.dual.mu.size(); ++i) out.summary.dual.push_back(gr.dual.mu(i));
    std::string note = "grouping:";
    for (const auto& pr : g.pairs)
      note += " {" + std::to_string(pr[0] + 1) + "," + std::to_string(pr[1] + 1) + "}";
    if (g.leftover) note += " leftover " + std::to_string(*g.leftover + 1);
    out.summary.notes.push_back(note);
    out.summary.notes.push_back(
        "optimization ignores inter-group interference; reported rates/energies include it");
  } else {  // eia
    const EiaResult r = solve_eia(ens, targets, sc.system, sc.single_beam, sc.tol,
                                  EiaOptions{sc.single_beam, sc.randomization_draws, sc.tol});
    out.summary.sum_rate = r.avg_sum_rate;
    out.summary.energies = r.avg_energies;
    out.summary.feasible = r.feasible;
    out.summary.gap = r.gap;
    out.summary.frac_names = {"frac_mode_id", "frac_mode_eh"};
    out.summary.fracs = {r.frac_id, 1.0 - r.frac_id};
    out.summary.dual.assign(r.dual.mu.data(), r.dual.mu.data() + r.dual.mu.size());
    if (r.upper_bound_label)
      out.summary.notes.push_back(
          "joint-cooperation rate is an upper bound: the line-of-sight component breaks the "
          "symmetric-phase assumption behind the half interference-free rate");
  }

  out.row.sum_rate = out.summary.sum_rate;
  out.row.q = out.summary.energies;
  out.row.feasible = out.summary.feasible;
  out.row.gap = out.summary.gap;
  out.row.fracs = out.summary.fracs;
  return out;
}

inline SolveOutcome run_solve(const Scenario& sc) {
  const ChannelEnsemble ens = sc.build_ensemble();
  return run_solve_targets(sc, ens, sc.targets_w, 0.0);
}

struct SweepOutcome {
  RERegion region;
  std::vector<double> grid;
  std::string csv_path;
  std::string sidecar_path;
  bool all_feasible = true;
};

namespace detail {

inline nlohmann::json resolved_config(const Scenario& sc, const std::vector<double>& grid) {
  nlohmann::json r;
  r["scheme"] = sc.scheme;
  r["users"] = sc.users();
  r["p_max_w"] = sc.system.p_max;
  r["zeta"] = sc.system.zeta;
  r["noise_powers_w"] = sc.system.noise_powers;
  r["fixed_channel"] = sc.fixed_channel;
  r["seed"] = sc.seed;
  r["n_states"] = sc.n_states;
  r["tol"] = sc.tol;
  r["single_beam"] = sc.single_beam;
  r["randomization_draws"] = sc.randomization_draws;
  r["targets_w"] = sc.targets_w;
  r["sweep_grid"] = grid;
  if (!sc.fixed_channel) {
    r["rician_factor"] = sc.rician.rician_factor;
    r["pathloss_c0"] = sc.rician.c0;
    r["pathloss_r0_m"] = sc.rician.r0;
    r["pathloss_exponent"] = sc.rician.xi;
    r["carrier_mhz"] = sc.rician.carrier_mhz;  // metadata only
    nlohmann::json tx = nlohmann::json::array(), rx = nlohmann::json::array();
    for (const auto& t : sc.geometry.tx) tx.push_back({t[0], t[1]});
    for (const auto& t : sc.geometry.rx) rx.push_back({t[0], t[1]});
    r["tx_positions_m"] = tx;
    r["rx_positions_m"] = rx;
  }
  return r;
}

}  // namespace detail

// Region sweep: one solve per grid point, a fixed-column CSV, and a JSON
// sidecar echoing every number the run consumed.
inline SweepOutcome run_region_sweep(const Scenario& sc, const std::string& out_dir) {
  if (!sc.sweep) throw std::invalid_argument("run_region_sweep: scenario has no sweep section");
  const SweepSpec& sp = *sc.sweep;
  const ChannelEnsemble ens = sc.build_ensemble();
  const int k = ens.users();

  SweepOutcome out;
  out.region.users = k;

  nlohmann::json notes;
  if (sp.mode == SweepSpec::Mode::kTargets) {
    if (!sp.grid_w.empty()) {
      out.grid = sp.grid_w;
    } else {
      const double ceiling = detail::sweep_energy_ceiling(sc, ens);
      for (int i = 0; i < sp.points; ++i)
        out.grid.push_back(sp.max_fraction * ceiling * static_cast<double>(i) /
                           std::max(1, sp.points - 1));
      notes["energy_ceiling_w"] = ceiling;
    }
    bool first = true;
    for (const double q : out.grid) {
      const std::vector<double> targets(static_cast<std::size_t>(k), q);
      const SolveOutcome so = run_solve_targets(sc, ens, targets, q);
      out.region.rows.push_back(so.row);
      out.all_feasible = out.all_feasible && so.row.feasible;
      if (first) {
        out.region.frac_names = so.summary.frac_names;
        for (const auto& n : so.summary.notes) notes["solver_notes"].push_back(n);
        first = false;
      }
    }
  } else if (sp.mode == SweepSpec::Mode::kEeWeights) {
    // harvested-power boundary of the all-harvesting mode on a fixed channel:
    // sweep the weight pair (w, 1-w) through the closed-form beamformer
    if (k != 2) throw ShapeError("ee_weights sweep needs K = 2");
    const ChannelState& st = ens.states.front();
    const std::vector<CVec> rows{st.h.row(0).transpose(), st.h.row(1).transpose()};
    for (int i = 0; i < sp.points; ++i) {
      const double w = static_cast<double>(i) / std::max(1, sp.points - 1);
      Vec mu(2);
      mu << w, 1.0 - w;
      const TwoUserEbf cf = closed_form_two_user_ebf(rows, mu, sc.system.p_max);
      RegionRow row;
      row.sweep_value = w;
      row.sum_rate = 0.0;
      const CVec r0 = rows[0], r1 = rows[1];
      row.q = {sc.system.zeta * detail::quadratic_form(r0, cf.s_e.s),
               sc.system.zeta * detail::quadratic_form(r1, cf.s_e.s)};
      out.region.rows.push_back(row);
    }
    notes["mode"] = "ee_weights";
  } else {
    // rate-energy boundary of the split-and-harvest mode on a fixed channel:
    // sweep the energy price through the scalar concave program
    if (k != 2) throw ShapeError("re_prices sweep needs K = 2");
    const ChannelState& st = ens.states.front();
    const detail::TwoUserView v = detail::make_view(st);
    for (int i = 0; i < sp.points; ++i) {
      const double f = static_cast<double>(i) / std::max(1, sp.points - 1);
      const double mu2 = sp.mu_min * std::pow(sp.mu_max / sp.mu_min, f);
      const detail::ModeCandidate c = detail::fc_id_eh(v, mu2, sc.system);
      RegionRow row;
      row.sweep_value = mu2;
      row.sum_rate = c.rate1;
      row.q = {0.0, c.q2};
      out.region.rows.push_back(row);
    }
    notes["mode"] = "re_prices";
  }

  std::filesystem::create_directories(out_dir);
  out.csv_path = (std::filesystem::path(out_dir) / (sc.name + "_region.csv")).string();
  out.sidecar_path = (std::filesystem::path(out_dir) / (sc.name + "_region.json")).string();
  write_region_csv(out.csv_path, out.region);

  nlohmann::json side;
  side["scenario"] = sc.raw;
  side["resolved"] = detail::resolved_config(sc, out.grid);
  side["columns"] = region_csv_header(out.region);
  side["version"] = kVersion;
  side["notes"] = notes;
  std::ofstream sf(out.sidecar_path, std::ios::binary);
  sf << side.dump(2) << "\n";
  return out;
}

}  // namespace swipt
