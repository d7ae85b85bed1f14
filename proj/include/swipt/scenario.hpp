#pragma once

#include "swipt/channel.hpp"
#include "swipt/types.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <string>

namespace swipt {

struct SweepSpec {
  enum class Mode { kTargets, kEeWeights, kRePrices };
  Mode mode = Mode::kTargets;
  int points = 25;
  double max_fraction = 0.95;  // of the average-energy ceiling
  bool equal_targets = true;
  std::vector<double> grid_w;  // explicit target grid overrides points/max_fraction
  double mu_min = 1e1;         // price ray for the boundary sweeps
  double mu_max = 1e7;
};

// One experiment description: system parameters, a channel source (fixed
// matrix or Rician geometry), the scheme, and either fixed targets or a sweep.
struct Scenario {
  std::string name = "scenario";
  SystemParams system;
  bool fixed_channel = false;
  CMat h_fixed;
  Geometry geometry;
  RicianParams rician;
  std::uint64_t seed = 1;
  int n_states = 10000;
  std::string scheme = "fc";  // fc | pc | nc | pairwise | eia
  std::vector<double> targets_w;
  std::optional<SweepSpec> sweep;
  double tol = 1e-6;
  bool single_beam = false;
  int randomization_draws = 200;
  nlohmann::json raw;  // verbatim input, echoed into the output sidecar

  int users() const {
    return fixed_channel ? static_cast<int>(h_fixed.rows()) : geometry.users();
  }

  ChannelEnsemble build_ensemble() const {
    if (fixed_channel) return fixed_awgn(h_fixed, system.noise_powers);
    return sample_rician(geometry, rician, system.noise_powers, seed, n_states);
  }
};

namespace detail {

inline double power_field_watt(const nlohmann::json& j, const std::string& base,
                               std::optional<double> fallback = std::nullopt) {
  if (j.contains(base + "_w")) return j.at(base + "_w").get<double>();
  if (j.contains(base + "_dbm")) return dbm_to_watt(j.at(base + "_dbm").get<double>());
  if (fallback) return *fallback;
  throw std::invalid_argument("scenario: missing " + base + "_w / " + base + "_dbm");
}

}  // namespace detail

inline Scenario parse_scenario(const nlohmann::json& j) {
  Scenario sc;
  sc.raw = j;
  sc.name = j.value("name", std::string("scenario"));

  const auto& sys = j.at("system");
  sc.system.p_max = detail::power_field_watt(sys, "p_max");
  sc.system.zeta = sys.value("zeta", 1.0);

  const auto& ch = j.at("channel");
  const std::string type = ch.at("type").get<std::string>();
  int k_users = 0;
  if (type == "fixed") {
    const auto& rows = ch.at("h");
    k_users = static_cast<int>(rows.size());
    sc.fixed_channel = true;
    sc.h_fixed.resize(k_users, k_users);
    for (int r = 0; r < k_users; ++r) {
      const auto& row = rows.at(static_cast<std::size_t>(r));
      if (static_cast<int>(row.size()) != k_users)
        throw ShapeError("scenario: fixed channel matrix must be square");
      for (int c = 0; c < k_users; ++c) {
        const auto& e = row.at(static_cast<std::size_t>(c));
        sc.h_fixed(r, c) = cd(e.at(0).get<double>(), e.at(1).get<double>());
      }
    }
    sc.n_states = 1;
  } else if (type == "rician") {
    const auto& geo = ch.at("geometry");
    for (const auto& t : geo.at("tx"))
      sc.geometry.tx.push_back({t.at(0).get<double>(), t.at(1).get<double>()});
    for (const auto& r : geo.at("rx"))
      sc.geometry.rx.push_back({r.at(0).get<double>(), r.at(1).get<double>()});
    k_users = sc.geometry.users();
    const auto& ric = ch.at("rician");
    sc.rician.rician_factor = ric.value("m", 3.0);
    if (ric.contains("c0_db"))
      sc.rician.c0 = db_to_linear(ric.at("c0_db").get<double>());
    else
      sc.rician.c0 = ric.value("c0", 0.01);
    sc.rician.r0 = ric.value("r0_m", 1.0);
    sc.rician.xi = ric.value("xi", 3.0);
    sc.rician.carrier_mhz = ric.value("carrier_mhz", 900.0);
    sc.seed = ch.value("seed", 1ULL);
    sc.n_states = ch.value("n_states", 10000);
    sc.geometry.validate();
    sc.rician.validate();
  } else {
    throw std::invalid_argument("scenario: channel.type must be 'fixed' or 'rician'");
  }

  if (sys.contains("noise_powers_w")) {
    sc.system.noise_powers = sys.at("noise_powers_w").get<std::vector<double>>();
  } else {
    const double sigma = detail::power_field_watt(sys, "noise");
    sc.system.noise_powers.assign(static_cast<std::size_t>(k_users), sigma);
  }
  sc.system.validate(k_users);

  sc.scheme = j.value("scheme", std::string("fc"));
  if (sc.scheme != "fc" && sc.scheme != "pc" && sc.scheme != "nc" && sc.scheme != "pairwise" &&
      sc.scheme != "eia")
    throw std::invalid_argument("scenario: unknown scheme '" + sc.scheme + "'");

  if (j.contains("targets_w")) {
    sc.targets_w = j.at("targets_w").get<std::vector<double>>();
    if (static_cast<int>(sc.targets_w.size()) == 1)
      sc.targets_w.assign(static_cast<std::size_t>(k_users), sc.targets_w[0]);
    if (static_cast<int>(sc.targets_w.size()) != k_users)
      throw ShapeError("scenario: targets_w size != K");
  } else {
    sc.targets_w.assign(static_cast<std::size_t>(k_users), 0.0);
  }

  if (j.contains("sweep")) {
    SweepSpec sp;
    const auto& sw = j.at("sweep");
    const std::string mode = sw.value("mode", std::string("targets"));
    if (mode == "targets")
      sp.mode = SweepSpec::Mode::kTargets;
    else if (mode == "ee_weights")
      sp.mode = SweepSpec::Mode::kEeWeights;
    else if (mode == "re_prices")
      sp.mode = SweepSpec::Mode::kRePrices;
    else
      throw std::invalid_argument("scenario: unknown sweep.mode '" + mode + "'");
    sp.points = sw.value("points", 25);
    sp.max_fraction = sw.value("max_fraction", 0.95);
    sp.equal_targets = sw.value("equal_targets", true);
    if (sw.contains("grid_w")) sp.grid_w = sw.at("grid_w").get<std::vector<double>>();
    sp.mu_min = sw.value("mu_min", 1e1);
    sp.mu_max = sw.value("mu_max", 1e7);
    if (sp.points < 1 || (sp.grid_w.empty() && sp.points < 1))
      throw std::invalid_argument("scenario: sweep grid must be nonempty");
    sc.sweep = sp;
  }

  if (j.contains("solver")) {
    const auto& so = j.at("solver");
    sc.tol = so.value("tol", 1e-6);
    sc.single_beam = so.value("single_beam", false);
    sc.randomization_draws = so.value("randomization_draws", 200);
    if (so.contains("seed_override")) sc.seed = so.at("seed_override").get<std::uint64_t>();
  }
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  nlohmann::json j;
  in >> j;
  return parse_scenario(j);
}

}  // namespace swipt
