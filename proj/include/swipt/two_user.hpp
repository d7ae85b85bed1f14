#pragma once

#include "swipt/channel.hpp"
#include "swipt/ellipsoid.hpp"
#include "swipt/energy_beamforming.hpp"
#include "swipt/model.hpp"
#include "swipt/newton.hpp"
#include "swipt/parallel.hpp"
#include "swipt/types.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <vector>

namespace swipt {

enum class TwoUserScheme { kFullCooperation, kPartialCooperation, kNoCooperation };

// Tie-break preference: earlier entries win equal scores.
enum class TwoUserMode : int { kIdId = 0, kIdEh = 1, kEhId = 2, kEhEh = 3 };

inline const char* mode_name(TwoUserMode m) {
  switch (m) {
    case TwoUserMode::kIdId: return "id_id";
    case TwoUserMode::kIdEh: return "id_eh";
    case TwoUserMode::kEhId: return "eh_id";
    default: return "eh_eh";
  }
}

struct EnergyTargets {
  std::array<double, 2> q_bar{0.0, 0.0};
};

struct SchemeResult {
  double avg_sum_rate = 0.0;
  std::vector<double> avg_energies;
  std::vector<StateDecision> per_state;
  DualPoint dual;
  bool feasible = true;
  bool dual_converged = true;
  double gap = 0.0;  // dual bound minus achieved average sum-rate [bits/s/Hz]
  std::array<double, 4> mode_fractions{};  // indexed by TwoUserMode
  std::vector<double> max_energy_bound;    // per-user average-energy ceiling
  int iterations = 0;
};

namespace detail {

struct TwoUserView {
  cd h11, h12, h21, h22;
  double n11, n12, n21, n22;  // squared magnitudes
  double s1, s2;              // noise powers
};

inline TwoUserView make_view(const ChannelState& st) {
  TwoUserView v;
  v.h11 = st.h(0, 0);
  v.h12 = st.h(0, 1);
  v.h21 = st.h(1, 0);
  v.h22 = st.h(1, 1);
  v.n11 = std::norm(v.h11);
  v.n12 = std::norm(v.h12);
  v.n21 = std::norm(v.h21);
  v.n22 = std::norm(v.h22);
  v.s1 = st.noise_powers[0];
  v.s2 = st.noise_powers[1];
  return v;
}

// A mode's optimum for the per-state dual objective f = R1 + R2 + mu1 Q1 + mu2 Q2.
struct ModeCandidate {
  TwoUserMode mode = TwoUserMode::kIdId;
  double p1 = 0.0, p2 = 0.0;  // information powers
  double f = 0.0;
  double rate1 = 0.0, rate2 = 0.0;
  double q1 = 0.0, q2 = 0.0;
  cd alpha{1.0, 0.0};  // (EH,EH) beam phase
};

// (EH,EH): no information; rank-one full-power beam from the closed form.
inline ModeCandidate fc_eh_eh(const TwoUserView& v, double mu1, double mu2,
                              const SystemParams& prm) {
  const double p = prm.p_max;
  const cd z1 = v.h11 * std::conj(v.h12);
  const cd z2 = v.h21 * std::conj(v.h22);
  const cd cross = mu1 * std::conj(z1) + mu2 * std::conj(z2);
  const double cmag = std::abs(cross);
  const cd alpha = cmag > 0.0 ? cross / cmag : cd(1.0, 0.0);
  ModeCandidate c;
  c.mode = TwoUserMode::kEhEh;
  c.alpha = alpha;
  c.q1 = prm.zeta * p * (v.n11 + v.n12 + 2.0 * std::real(z1 * alpha));
  c.q2 = prm.zeta * p * (v.n21 + v.n22 + 2.0 * std::real(z2 * alpha));
  c.f = mu1 * c.q1 + mu2 * c.q2;
  return c;
}

// Phase aligning Tx l's energy signal toward receiver k's combination
// h_k1 u1 + h_k2 u2 with u1 real: u2's phase is that of h_k1 conj(h_k2).
inline cd align_phase(const cd& ha, const cd& hb) {
  const cd z = ha * std::conj(hb);
  const double m = std::abs(z);
  return m > 0.0 ? z / m : cd(1.0, 0.0);
}

// (ID,EH): p2^I = 0, both budgets saturated, single beam sized by the
// leftover power at Tx 1; the scalar concave program in p1 goes to Newton.
inline ModeCandidate fc_id_eh(const TwoUserView& v, double mu2, const SystemParams& prm) {
  const double p = prm.p_max;
  const double a = v.n11 / v.s1;
  const double cross = std::abs(v.h21) * std::abs(v.h22);
  const double w = mu2 * prm.zeta;
  const double sqp = std::sqrt(p);

  double p1;
  if (w * cross == 0.0) {
    p1 = p;  // energy term vanishes; the rate is monotone in p1
  } else {
    const auto fprime = [&](double x) {
      return a / (M_LN2 * (1.0 + a * x)) - w * cross * sqp / std::sqrt(p - x);
    };
    const auto fsecond = [&](double x) {
      const double d = 1.0 + a * x;
      return -a * a / (M_LN2 * d * d) - 0.5 * w * cross * sqp * std::pow(p - x, -1.5);
    };
    p1 = newton_maximize_scalar(fprime, fsecond, 0.0, p);
  }

  ModeCandidate c;
  c.mode = TwoUserMode::kIdEh;
  c.p1 = p1;
  c.rate1 = log2_1p(a * p1);
  const double beam = std::abs(v.h21) * std::sqrt(p - p1) + std::abs(v.h22) * sqp;
  c.q2 = prm.zeta * (v.n21 * p1 + beam * beam);
  c.f = c.rate1 + mu2 * c.q2;
  return c;
}

inline TwoUserView swapped(const TwoUserView& v) {
  TwoUserView s;
  s.h11 = v.h22;
  s.h12 = v.h21;
  s.h21 = v.h12;
  s.h22 = v.h11;
  s.n11 = v.n22;
  s.n12 = v.n21;
  s.n21 = v.n12;
  s.n22 = v.n11;
  s.s1 = v.s2;
  s.s2 = v.s1;
  return s;
}

inline ModeCandidate fc_eh_id(const TwoUserView& v, double mu1, const SystemParams& prm) {
  ModeCandidate c = fc_id_eh(swapped(v), mu1, prm);
  c.mode = TwoUserMode::kEhId;
  std::swap(c.p1, c.p2);
  std::swap(c.rate1, c.rate2);
  std::swap(c.q1, c.q2);
  return c;
}

// (ID,ID): no energy signals; on-off power control over the three candidates.
inline ModeCandidate id_id_on_off(const TwoUserView& v, const SystemParams& prm) {
  const double p = prm.p_max;
  ModeCandidate best;
  best.f = -std::numeric_limits<double>::infinity();
  const std::array<std::array<double, 2>, 3> cands{{{0.0, p}, {p, 0.0}, {p, p}}};
  for (const auto& pc : cands) {
    const double r1 = log2_1p(v.n11 * pc[0] / (v.n12 * pc[1] + v.s1));
    const double r2 = log2_1p(v.n22 * pc[1] / (v.n21 * pc[0] + v.s2));
    if (r1 + r2 > best.f) {
      best.f = r1 + r2;
      best.p1 = pc[0];
      best.p2 = pc[1];
      best.rate1 = r1;
      best.rate2 = r2;
    }
  }
  best.mode = TwoUserMode::kIdId;
  return best;
}

inline ModeCandidate best_of_modes(const std::array<ModeCandidate, 4>& cands) {
  const ModeCandidate* best = &cands[0];
  for (const auto& c : cands)
    if (c.f > best->f) best = &c;  // strict: ties keep the preferred order
  return *best;
}

inline std::array<ModeCandidate, 4> fc_candidates(const TwoUserView& v, double mu1, double mu2,
                                                  const SystemParams& prm) {
  return {id_id_on_off(v, prm), fc_id_eh(v, mu2, prm), fc_eh_id(v, mu1, prm),
          fc_eh_eh(v, mu1, mu2, prm)};
}

// Partial cooperation: no signal splitting, S_E = 0 everywhere.
inline std::array<ModeCandidate, 4> pc_candidates(const TwoUserView& v, double mu1, double mu2,
                                                  const SystemParams& prm) {
  const double p = prm.p_max;
  std::array<ModeCandidate, 4> out;
  out[0] = id_id_on_off(v, prm);

  // (ID,EH): p1 = P; p2 is 0 or P, whichever scores higher
  {
    ModeCandidate c;
    c.mode = TwoUserMode::kIdEh;
    c.p1 = p;
    c.f = -std::numeric_limits<double>::infinity();
    for (const double p2 : {0.0, p}) {
      const double r1 = log2_1p(v.n11 * p / (v.n12 * p2 + v.s1));
      const double q2 = prm.zeta * (v.n21 * p + v.n22 * p2);
      const double f = r1 + mu2 * q2;
      if (f > c.f) {
        c.f = f;
        c.p2 = p2;
        c.rate1 = r1;
        c.q2 = q2;
      }
    }
    out[1] = c;
  }
  {
    ModeCandidate c;
    c.mode = TwoUserMode::kEhId;
    c.p2 = p;
    c.f = -std::numeric_limits<double>::infinity();
    for (const double p1 : {0.0, p}) {
      const double r2 = log2_1p(v.n22 * p / (v.n21 * p1 + v.s2));
      const double q1 = prm.zeta * (v.n11 * p1 + v.n12 * p);
      const double f = r2 + mu1 * q1;
      if (f > c.f) {
        c.f = f;
        c.p1 = p1;
        c.rate2 = r2;
        c.q1 = q1;
      }
    }
    out[2] = c;
  }
  {
    ModeCandidate c;
    c.mode = TwoUserMode::kEhEh;
    c.p1 = p;
    c.p2 = p;
    c.q1 = prm.zeta * (v.n11 + v.n12) * p;
    c.q2 = prm.zeta * (v.n21 + v.n22) * p;
    c.f = mu1 * c.q1 + mu2 * c.q2;
    out[3] = c;
  }
  return out;
}

// No cooperation: both Txs always send information at full power; each
// receiver thresholds its own rate against the priced harvest.
inline ModeCandidate nc_candidate(const TwoUserView& v, double mu1, double mu2,
                                  const SystemParams& prm) {
  const double p = prm.p_max;
  const double r1 = log2_1p(v.n11 * p / (v.n12 * p + v.s1));
  const double r2 = log2_1p(v.n22 * p / (v.n21 * p + v.s2));
  const double q1 = prm.zeta * (v.n11 + v.n12) * p;
  const double q2 = prm.zeta * (v.n21 + v.n22) * p;
  const bool id1 = r1 > mu1 * q1;
  const bool id2 = r2 > mu2 * q2;
  ModeCandidate c;
  c.p1 = p;
  c.p2 = p;
  c.rate1 = id1 ? r1 : 0.0;
  c.rate2 = id2 ? r2 : 0.0;
  c.q1 = id1 ? 0.0 : q1;
  c.q2 = id2 ? 0.0 : q2;
  c.f = c.rate1 + c.rate2 + mu1 * c.q1 + mu2 * c.q2;
  c.mode = id1 ? (id2 ? TwoUserMode::kIdId : TwoUserMode::kIdEh)
               : (id2 ? TwoUserMode::kEhId : TwoUserMode::kEhEh);
  return c;
}

inline ModeCandidate scheme_best(TwoUserScheme scheme, const TwoUserView& v, double mu1,
                                 double mu2, const SystemParams& prm) {
  switch (scheme) {
    case TwoUserScheme::kFullCooperation:
      return best_of_modes(fc_candidates(v, mu1, mu2, prm));
    case TwoUserScheme::kPartialCooperation:
      return best_of_modes(pc_candidates(v, mu1, mu2, prm));
    default:
      return nc_candidate(v, mu1, mu2, prm);
  }
}

// Covariance implied by a full-cooperation candidate: rank-one full-power
// beam for (EH,EH), residual-budget single beam in the mixed modes, zero for
// (ID,ID).
inline EnergyCovariance candidate_covariance(const ModeCandidate& c, const TwoUserView& v,
                                             const SystemParams& prm) {
  const double p = prm.p_max;
  EnergyCovariance s = EnergyCovariance::zero(2);
  if (c.mode == TwoUserMode::kEhEh) {
    s.s.resize(2, 2);
    s.s << cd(p, 0.0), p * c.alpha, p * std::conj(c.alpha), cd(p, 0.0);
  } else if (c.mode == TwoUserMode::kIdEh) {
    const cd phase = align_phase(v.h21, v.h22);
    CVec u(2);
    u << cd(std::sqrt(p - c.p1), 0.0), std::sqrt(p) * phase;
    s.s = u * u.adjoint();
  } else if (c.mode == TwoUserMode::kEhId) {
    const cd phase = align_phase(v.h12, v.h11);
    CVec u(2);
    u << std::sqrt(p) * phase, cd(std::sqrt(p - c.p2), 0.0);
    s.s = u * u.adjoint();
  }
  return s;
}

inline ModeVector mode_to_rho(TwoUserMode m) {
  ModeVector mv;
  mv.rho = {m == TwoUserMode::kIdId || m == TwoUserMode::kIdEh ? 1 : 0,
            m == TwoUserMode::kIdId || m == TwoUserMode::kEhId ? 1 : 0};
  return mv;
}

}  // namespace detail

// Solves the per-state dual subproblem for full cooperation at prices mu and
// returns the complete decision (mode, powers, covariance, realized rates and
// harvested powers).
inline StateDecision fc_subproblem(const ChannelState& state, const DualPoint& mu,
                                   const SystemParams& params) {
  if (state.users() != 2) throw ShapeError("fc_subproblem: K != 2");
  if (!(mu.mu.minCoeff() >= 0.0)) throw std::invalid_argument("fc_subproblem: mu must be >= 0");
  const detail::TwoUserView v = detail::make_view(state);
  const detail::ModeCandidate best =
      detail::best_of_modes(detail::fc_candidates(v, mu.mu(0), mu.mu(1), params));

  StateDecision d;
  d.mode = detail::mode_to_rho(best.mode);
  d.powers.p_info = {best.p1, best.p2};
  d.s_e = detail::candidate_covariance(best, v, params);
  d.rates = {achievable_rate(state, 0, d.mode, d.powers, params),
             achievable_rate(state, 1, d.mode, d.powers, params)};
  d.energies = {harvested_power(state, 0, d.mode, d.powers, d.s_e, params),
                harvested_power(state, 1, d.mode, d.powers, d.s_e, params)};
  return d;
}

// Exhaustive reference for fc_subproblem: modes x p1 x p2 x beam phase, with
// every Tx's energy budget set to its residual power and a single beam.
inline double fc_cross_check(const ChannelState& state, const DualPoint& mu,
                             const SystemParams& params, int grid_n) {
  if (state.users() != 2) throw ShapeError("fc_cross_check: K != 2");
  const detail::TwoUserView v = detail::make_view(state);
  const double p = params.p_max;
  const double mu1 = mu.mu(0), mu2 = mu.mu(1);
  const double zeta = params.zeta;

  std::vector<double> grid(static_cast<std::size_t>(grid_n));
  for (int i = 0; i < grid_n; ++i)
    grid[static_cast<std::size_t>(i)] = p * static_cast<double>(i) / static_cast<double>(grid_n - 1);
  std::vector<double> ct(static_cast<std::size_t>(grid_n)), st(static_cast<std::size_t>(grid_n));
  for (int i = 0; i < grid_n; ++i) {
    const double t = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(grid_n);
    ct[static_cast<std::size_t>(i)] = std::cos(t);
    st[static_cast<std::size_t>(i)] = std::sin(t);
  }
  const cd z1 = v.h11 * std::conj(v.h12);  // Rx1 cross term between Tx1/Tx2 signals
  const cd z2 = v.h21 * std::conj(v.h22);

  double best = -std::numeric_limits<double>::infinity();
  for (double p1 : grid) {
    const double u1 = std::sqrt(p - p1);
    for (double p2 : grid) {
      const double u2 = std::sqrt(p - p2);
      const double uu = u1 * u2;
      // beam quadratic forms: h_k1 u1 + h_k2 u2 e^{j t}
      const double b1 = v.n11 * (p - p1) + v.n12 * (p - p2);
      const double b2 = v.n21 * (p - p1) + v.n22 * (p - p2);
      const double info1 = v.n11 * p1 + v.n12 * p2;
      const double info2 = v.n21 * p1 + v.n22 * p2;

      // (ID,ID)
      {
        const double r1 = log2_1p(v.n11 * p1 / (v.n12 * p2 + v.s1));
        const double r2 = log2_1p(v.n22 * p2 / (v.n21 * p1 + v.s2));
        best = std::max(best, r1 + r2);
      }
      // (ID,EH): rate 1 with interference from p2, energy at Rx 2
      {
        const double r1 = log2_1p(v.n11 * p1 / (v.n12 * p2 + v.s1));
        const double fixed = r1 + mu2 * zeta * (info2 + b2);
        const double amp = mu2 * zeta * 2.0 * uu;
        for (int i = 0; i < grid_n; ++i) {
          const double f =
              fixed + amp * (z2.real() * ct[static_cast<std::size_t>(i)] +
                             z2.imag() * st[static_cast<std::size_t>(i)]);
          if (f > best) best = f;
        }
      }
      // (EH,ID)
      {
        const double r2 = log2_1p(v.n22 * p2 / (v.n21 * p1 + v.s2));
        const double fixed = r2 + mu1 * zeta * (info1 + b1);
        const double amp = mu1 * zeta * 2.0 * uu;
        for (int i = 0; i < grid_n; ++i) {
          const double f =
              fixed + amp * (z1.real() * ct[static_cast<std::size_t>(i)] +
                             z1.imag() * st[static_cast<std::size_t>(i)]);
          if (f > best) best = f;
        }
      }
      // (EH,EH)
      {
        const double fixed = mu1 * zeta * (info1 + b1) + mu2 * zeta * (info2 + b2);
        const double zr = mu1 * zeta * z1.real() + mu2 * zeta * z2.real();
        const double zi = mu1 * zeta * z1.imag() + mu2 * zeta * z2.imag();
        const double amp = 2.0 * uu;
        for (int i = 0; i < grid_n; ++i) {
          const double f = fixed + amp * (zr * ct[static_cast<std::size_t>(i)] +
                                          zi * st[static_cast<std::size_t>(i)]);
          if (f > best) best = f;
        }
      }
    }
  }
  return best;
}

inline StateDecision pc_subproblem(const ChannelState& state, const DualPoint& mu,
                                   const SystemParams& params) {
  if (state.users() != 2) throw ShapeError("pc_subproblem: K != 2");
  if (!(mu.mu.minCoeff() >= 0.0)) throw std::invalid_argument("pc_subproblem: mu must be >= 0");
  const detail::TwoUserView v = detail::make_view(state);
  const detail::ModeCandidate best =
      detail::best_of_modes(detail::pc_candidates(v, mu.mu(0), mu.mu(1), params));
  StateDecision d;
  d.mode = detail::mode_to_rho(best.mode);
  d.powers.p_info = {best.p1, best.p2};
  d.s_e = EnergyCovariance::zero(2);
  d.rates = {achievable_rate(state, 0, d.mode, d.powers, params),
             achievable_rate(state, 1, d.mode, d.powers, params)};
  d.energies = {harvested_power(state, 0, d.mode, d.powers, d.s_e, params),
                harvested_power(state, 1, d.mode, d.powers, d.s_e, params)};
  return d;
}

inline StateDecision nc_decide(const ChannelState& state, const DualPoint& mu,
                               const SystemParams& params) {
  if (state.users() != 2) throw ShapeError("nc_decide: K != 2");
  if (!(mu.mu.minCoeff() >= 0.0)) throw std::invalid_argument("nc_decide: mu must be >= 0");
  const detail::TwoUserView v = detail::make_view(state);
  const detail::ModeCandidate best = detail::nc_candidate(v, mu.mu(0), mu.mu(1), params);
  StateDecision d;
  d.mode = detail::mode_to_rho(best.mode);
  d.powers.p_info = {best.p1, best.p2};
  d.s_e = EnergyCovariance::zero(2);
  d.rates = {achievable_rate(state, 0, d.mode, d.powers, params),
             achievable_rate(state, 1, d.mode, d.powers, params)};
  d.energies = {harvested_power(state, 0, d.mode, d.powers, d.s_e, params),
                harvested_power(state, 1, d.mode, d.powers, d.s_e, params)};
  return d;
}

namespace detail {

inline StateDecision candidate_to_decision(TwoUserScheme scheme, const ModeCandidate& c,
                                           const TwoUserView& v, const ChannelState& state,
                                           const SystemParams& params) {
  StateDecision d;
  d.mode = mode_to_rho(c.mode);
  d.powers.p_info = {c.p1, c.p2};
  d.s_e = scheme == TwoUserScheme::kFullCooperation ? candidate_covariance(c, v, params)
                                                    : EnergyCovariance::zero(2);
  d.rates = {achievable_rate(state, 0, d.mode, d.powers, params),
             achievable_rate(state, 1, d.mode, d.powers, params)};
  d.energies = {harvested_power(state, 0, d.mode, d.powers, d.s_e, params),
                harvested_power(state, 1, d.mode, d.powers, d.s_e, params)};
  return d;
}

// (ID,EH) rate/energy as a function of Tx 1's information power, used when a
// marginal state's split is retuned to land the average-energy constraint.
inline void fc_ideh_point(const TwoUserView& v, const SystemParams& prm, double p1,
                          ModeCandidate& c) {
  const double p = prm.p_max;
  c.p1 = p1;
  c.rate1 = log2_1p(v.n11 * p1 / v.s1);
  const double beam = std::abs(v.h21) * std::sqrt(p - p1) + std::abs(v.h22) * std::sqrt(p);
  c.q2 = prm.zeta * (v.n21 * p1 + beam * beam);
}

inline void pc_ideh_point(const TwoUserView& v, const SystemParams& prm, double p2,
                          ModeCandidate& c) {
  const double p = prm.p_max;
  c.p2 = p2;
  c.rate1 = log2_1p(v.n11 * p / (v.n12 * p2 + v.s1));
  c.q2 = prm.zeta * (v.n21 * p + v.n22 * p2);
}

struct EnsembleEval {
  double sum_f = 0.0;
  double sum_rate = 0.0;
  double sum_q1 = 0.0;
  double sum_q2 = 0.0;
};

inline EnsembleEval reduce_candidates(const std::vector<ModeCandidate>& cands) {
  EnsembleEval e;
  for (const auto& c : cands) {
    e.sum_f += c.f;
    e.sum_rate += c.rate1 + c.rate2;
    e.sum_q1 += c.q1;
    e.sum_q2 += c.q2;
  }
  return e;
}

}  // namespace detail

// Ergodic solve of one cooperation scheme: dual prices on the average-energy
// targets found by the ellipsoid method, per-state subproblems in the oracle,
// then a primal repair pass that lands the constraints from the feasible side
// (marginal states are flipped along the price path; full cooperation and
// partial cooperation additionally retune one state's continuous power split,
// which costs only second-order rate). No cooperation decouples per user and
// its final decisions come from the exact threshold sweep.
inline SchemeResult solve_scheme(const ChannelEnsemble& ens, TwoUserScheme scheme,
                                 const EnergyTargets& targets, const SystemParams& params,
                                 double tol = 1e-6) {
  const int n = ens.size();
  if (n == 0) throw std::invalid_argument("solve_scheme: empty ensemble");
  if (ens.users() != 2) throw ShapeError("solve_scheme: K != 2");
  params.validate(2);
  if (!(targets.q_bar[0] >= 0.0 && targets.q_bar[1] >= 0.0))
    throw std::invalid_argument("solve_scheme: targets must be >= 0");
  const double p = params.p_max;

  std::vector<detail::TwoUserView> views(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) views[static_cast<std::size_t>(i)] = detail::make_view(ens.states[static_cast<std::size_t>(i)]);

  SchemeResult res;
  res.avg_energies.assign(2, 0.0);
  res.max_energy_bound.assign(2, 0.0);

  Eigen::Vector4d mean_pow = Eigen::Vector4d::Zero();
  double rate_scale = 0.0;
  for (const auto& v : views) {
    if (scheme == TwoUserScheme::kFullCooperation) {
      res.max_energy_bound[0] +=
          params.zeta * p * std::pow(std::abs(v.h11) + std::abs(v.h12), 2);
      res.max_energy_bound[1] +=
          params.zeta * p * std::pow(std::abs(v.h21) + std::abs(v.h22), 2);
    } else {
      res.max_energy_bound[0] += params.zeta * p * (v.n11 + v.n12);
      res.max_energy_bound[1] += params.zeta * p * (v.n21 + v.n22);
    }
    rate_scale += std::max(log2_1p(v.n11 * p / v.s1), log2_1p(v.n22 * p / v.s2));
    mean_pow += Eigen::Vector4d(v.n11, v.n12, v.n21, v.n22);
  }
  res.max_energy_bound[0] /= n;
  res.max_energy_bound[1] /= n;
  rate_scale /= n;
  mean_pow /= static_cast<double>(n);
  const double pow_floor =
      std::max(mean_pow.minCoeff(), 1e-9 * std::max(mean_pow.maxCoeff(), 1e-300));
  const double mu_max = 10.0 * std::max(rate_scale, 1e-6) / (p * pow_floor);

  std::vector<detail::ModeCandidate> cands(static_cast<std::size_t>(n));
  const auto eval_at = [&](double mu1, double mu2) {
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
      cands[i] = detail::scheme_best(scheme, views[i], mu1, mu2, params);
    });
    return detail::reduce_candidates(cands);
  };

  double dual_bound = std::numeric_limits<double>::infinity();
  const auto dual_value = [&](const detail::EnsembleEval& e, double mu1, double mu2) {
    const double g = e.sum_f / n - mu1 * targets.q_bar[0] - mu2 * targets.q_bar[1];
    dual_bound = std::min(dual_bound, g);
    return g;
  };

  const double target_floor[2] = {static_cast<double>(n) * targets.q_bar[0],
                                  static_cast<double>(n) * targets.q_bar[1]};
  // pure per-state decisions may sit one marginal flip from the exact target;
  // half of the reported slack allowance absorbs that
  const double slack_allow[2] = {
      0.5e-6 * std::max(targets.q_bar[0], p) * n,
      0.5e-6 * std::max(targets.q_bar[1], p) * n,
  };
  const auto feasible_totals = [&](const detail::EnsembleEval& e) {
    return e.sum_q1 >= target_floor[0] - slack_allow[0] &&
           e.sum_q2 >= target_floor[1] - slack_allow[1];
  };

  if (targets.q_bar[0] > res.max_energy_bound[0] || targets.q_bar[1] > res.max_energy_bound[1]) {
    // unreachable even with every state harvesting at its optimum
    eval_at(mu_max, mu_max);
    res.feasible = false;
    res.dual.mu = Vec::Constant(2, mu_max);
  } else if (targets.q_bar[0] <= 0.0 && targets.q_bar[1] <= 0.0) {
    eval_at(0.0, 0.0);
    res.dual.mu = Vec::Zero(2);
  } else {
    // outer dual search
    Vec lo = Vec::Zero(2), hi = Vec::Constant(2, mu_max);
    const auto oracle = [&](const Vec& mu) {
      const auto e = eval_at(mu(0), mu(1));
      EllipsoidCut cut;
      cut.value = dual_value(e, mu(0), mu(1));
      cut.subgrad = Vec(2);
      cut.subgrad << e.sum_q1 / n - targets.q_bar[0], e.sum_q2 / n - targets.q_bar[1];
      return cut;
    };
    EllipsoidOptions eopts;
    eopts.tol = 1e-8 * (1.0 + rate_scale);
    eopts.max_iter = 2000;
    auto [mu_star, status] = ellipsoid_minimize(oracle, lo, hi, eopts);
    res.iterations = status.iterations;
    res.dual_converged = status.converged;
    if (mu_star.maxCoeff() > 0.97 * mu_max)
      res.dual_converged = false;  // optimum suspiciously near the search box edge

    auto e_star = eval_at(mu_star(0), mu_star(1));
    dual_value(e_star, mu_star(0), mu_star(1));
    std::vector<detail::ModeCandidate> cands_star = cands;
    res.dual.mu = mu_star;

    if (!feasible_totals(e_star)) {
      // price repair: per-component bisection for the smallest own price that
      // lands each average-energy constraint, alternated a few rounds since
      // raising one price can spill the other constraint. The average energy
      // is nondecreasing in its own price, which makes each bisection valid.
      Vec mu_rep = mu_star;
      auto e_rep = e_star;
      bool repaired = false;
      for (int round = 0; round < 4 && !repaired; ++round) {
        for (int user = 0; user < 2; ++user) {
          const auto total = [&](const detail::EnsembleEval& e) {
            return user == 0 ? e.sum_q1 : e.sum_q2;
          };
          if (total(e_rep) >= target_floor[user]) continue;
          double lo_mu = mu_rep(user), hi_mu = mu_max;
          Vec probe_mu = mu_rep;
          probe_mu(user) = hi_mu;
          auto e_probe = eval_at(probe_mu(0), probe_mu(1));
          dual_value(e_probe, probe_mu(0), probe_mu(1));
          if (total(e_probe) < target_floor[user]) {
            mu_rep = probe_mu;  // even the box edge cannot lift this average
            e_rep = e_probe;
            continue;
          }
          for (int it = 0; it < 60 && hi_mu - lo_mu > 1e-12 * std::max(1.0, hi_mu); ++it) {
            const double mid = 0.5 * (lo_mu + hi_mu);
            probe_mu(user) = mid;
            e_probe = eval_at(probe_mu(0), probe_mu(1));
            dual_value(e_probe, probe_mu(0), probe_mu(1));
            if (total(e_probe) >= target_floor[user])
              hi_mu = mid;
            else
              lo_mu = mid;
          }
          probe_mu(user) = hi_mu;
          mu_rep = probe_mu;
          e_rep = eval_at(mu_rep(0), mu_rep(1));
          dual_value(e_rep, mu_rep(0), mu_rep(1));
        }
        repaired = feasible_totals(e_rep);
      }
      res.dual.mu = mu_rep;
      if (!repaired) res.feasible = false;

      if (repaired) {
        // revert whole states toward the cheaper price while both totals stay
        // above target
        auto e_cur = detail::reduce_candidates(cands);
        std::vector<int> order;
        for (int i = 0; i < n; ++i) {
          const auto& a = cands[static_cast<std::size_t>(i)];
          const auto& b = cands_star[static_cast<std::size_t>(i)];
          if (a.mode != b.mode || a.p1 != b.p1 || a.p2 != b.p2) order.push_back(i);
        }
        std::sort(order.begin(), order.end(), [&](int x, int y) {
          const double gx = (cands_star[static_cast<std::size_t>(x)].rate1 +
                             cands_star[static_cast<std::size_t>(x)].rate2) -
                            (cands[static_cast<std::size_t>(x)].rate1 +
                             cands[static_cast<std::size_t>(x)].rate2);
          const double gy = (cands_star[static_cast<std::size_t>(y)].rate1 +
                             cands_star[static_cast<std::size_t>(y)].rate2) -
                            (cands[static_cast<std::size_t>(y)].rate1 +
                             cands[static_cast<std::size_t>(y)].rate2);
          if (gx != gy) return gx > gy;
          return x < y;
        });
        for (const int i : order) {
          const auto& cur = cands[static_cast<std::size_t>(i)];
          const auto& alt = cands_star[static_cast<std::size_t>(i)];
          const double nq1 = e_cur.sum_q1 - cur.q1 + alt.q1;
          const double nq2 = e_cur.sum_q2 - cur.q2 + alt.q2;
          if (nq1 >= target_floor[0] && nq2 >= target_floor[1] &&
              alt.rate1 + alt.rate2 >= cur.rate1 + cur.rate2) {
            e_cur.sum_q1 = nq1;
            e_cur.sum_q2 = nq2;
            cands[static_cast<std::size_t>(i)] = alt;
          }
        }
      }
    }

    if (res.feasible && scheme != TwoUserScheme::kNoCooperation &&
        (targets.q_bar[0] > 0.0 || targets.q_bar[1] > 0.0)) {
        detail::EnsembleEval e_cur;
        // continuous retune of (ID,EH)/(EH,ID) splits against leftover slack:
        // raising the decoder's information power past the priced optimum both
        // gains rate and releases harvested energy, so overshoot left by the
        // discrete flips is converted back into rate. Spreading the release
        // over all such states keeps each move in the first-order regime where
        // the exchange rate equals the dual price.
        const double slack_floor = 1e-12 * n * p;
        for (int user = 0; user < 2; ++user) {
          // the harvesting side of the mixed mode is the constrained user
          const TwoUserMode want = user == 0 ? TwoUserMode::kEhId : TwoUserMode::kIdEh;
          const bool swap_view = want == TwoUserMode::kEhId;
          int n_knob = 0;
          for (const auto& c : cands)
            if (c.mode == want) ++n_knob;
          if (n_knob == 0) continue;
          for (int round = 0; round < 2; ++round) {
            e_cur = detail::reduce_candidates(cands);
            double slack = (user == 0 ? e_cur.sum_q1 - target_floor[0]
                                      : e_cur.sum_q2 - target_floor[1]) -
                           slack_floor;
            if (slack <= 0.0) break;
            const double per_state_cap =
                round == 0 ? 2.0 * slack / static_cast<double>(n_knob) : slack;
            for (int i = 0; i < n && slack > 0.0; ++i) {
              auto& c = cands[static_cast<std::size_t>(i)];
              if (c.mode != want) continue;
              detail::TwoUserView v = views[static_cast<std::size_t>(i)];
              if (swap_view) v = detail::swapped(v);
              detail::ModeCandidate work = c;
              if (swap_view) {
                std::swap(work.p1, work.p2);
                std::swap(work.rate1, work.rate2);
                std::swap(work.q1, work.q2);
              }
              const double q_before = work.q2;
              const double budget = std::min(slack, per_state_cap);
              if (scheme == TwoUserScheme::kFullCooperation) {
                const double c2 =
                    params.zeta * 2.0 * std::abs(v.h21) * std::abs(v.h22) * std::sqrt(p);
                double p1_new;
                if (c2 > 0.0) {
                  const double root = std::max(0.0, std::sqrt(p - work.p1) - budget / c2);
                  p1_new = p - root * root;
                } else {
                  p1_new = p;  // energy unaffected by the split
                }
                if (p1_new <= work.p1) continue;
                detail::fc_ideh_point(v, params, p1_new, work);
              } else {
                double p2_new;
                if (v.n22 > 0.0)
                  p2_new = std::max(0.0, work.p2 - budget / (params.zeta * v.n22));
                else
                  p2_new = 0.0;
                if (p2_new >= work.p2) continue;
                detail::pc_ideh_point(v, params, p2_new, work);
              }
              const double dq = q_before - work.q2;
              if (dq < 0.0) continue;
              slack -= dq;
              if (swap_view) {
                std::swap(work.p1, work.p2);
                std::swap(work.rate1, work.rate2);
                std::swap(work.q1, work.q2);
              }
              c = work;
            }
          }
        }
    }
  }

  if (scheme == TwoUserScheme::kNoCooperation && res.feasible) {
    // exact per-user threshold sweep: states flip to harvesting in order of
    // rate lost per watt gained until each average target is met
    Vec mu_report = Vec::Zero(2);
    for (int user = 0; user < 2; ++user) {
      std::vector<std::pair<double, int>> tau(static_cast<std::size_t>(n));
      std::vector<double> rates(static_cast<std::size_t>(n)), qs(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        const auto& v = views[static_cast<std::size_t>(i)];
        const double nd = user == 0 ? v.n11 : v.n22;
        const double nc = user == 0 ? v.n12 : v.n21;
        const double sg = user == 0 ? v.s1 : v.s2;
        const double r = log2_1p(nd * p / (nc * p + sg));
        const double q = params.zeta * (nd + nc) * p;
        rates[static_cast<std::size_t>(i)] = r;
        qs[static_cast<std::size_t>(i)] = q;
        tau[static_cast<std::size_t>(i)] = {q > 0.0 ? r / q : std::numeric_limits<double>::infinity(), i};
      }
      std::sort(tau.begin(), tau.end());
      double acc = 0.0;
      std::vector<char> harvest(static_cast<std::size_t>(n), 0);
      double marginal_price = 0.0;
      for (const auto& [price, i] : tau) {
        if (acc >= target_floor[user]) break;
        harvest[static_cast<std::size_t>(i)] = 1;
        acc += qs[static_cast<std::size_t>(i)];
        marginal_price = price;
      }
      if (acc < target_floor[user]) res.feasible = false;
      mu_report(user) = std::isfinite(marginal_price) ? marginal_price : 0.0;
      for (int i = 0; i < n; ++i) {
        auto& c = cands[static_cast<std::size_t>(i)];
        const bool id = harvest[static_cast<std::size_t>(i)] == 0;
        if (user == 0) {
          c.rate1 = id ? rates[static_cast<std::size_t>(i)] : 0.0;
          c.q1 = id ? 0.0 : qs[static_cast<std::size_t>(i)];
        } else {
          c.rate2 = id ? rates[static_cast<std::size_t>(i)] : 0.0;
          c.q2 = id ? 0.0 : qs[static_cast<std::size_t>(i)];
        }
        c.p1 = p;
        c.p2 = p;
      }
    }
    for (int i = 0; i < n; ++i) {
      auto& c = cands[static_cast<std::size_t>(i)];
      const bool id1 = c.q1 == 0.0;
      const bool id2 = c.q2 == 0.0;
      c.mode = id1 ? (id2 ? TwoUserMode::kIdId : TwoUserMode::kIdEh)
                   : (id2 ? TwoUserMode::kEhId : TwoUserMode::kEhEh);
      c.f = c.rate1 + c.rate2 + mu_report(0) * c.q1 + mu_report(1) * c.q2;
    }
    res.dual.mu = mu_report;
  }

  // finalize: authoritative re-evaluation through the model operations
  res.per_state.resize(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    res.per_state[i] = detail::candidate_to_decision(scheme, cands[i], views[i],
                                                     ens.states[i], params);
  });
  double sum_rate = 0.0, sq1 = 0.0, sq2 = 0.0;
  res.mode_fractions = {0.0, 0.0, 0.0, 0.0};
  for (const auto& d : res.per_state) {
    sum_rate += d.rates[0] + d.rates[1];
    sq1 += d.energies[0];
    sq2 += d.energies[1];
    const bool id1 = d.mode.rho[0] == 1, id2 = d.mode.rho[1] == 1;
    const TwoUserMode m = id1 ? (id2 ? TwoUserMode::kIdId : TwoUserMode::kIdEh)
                              : (id2 ? TwoUserMode::kEhId : TwoUserMode::kEhEh);
    res.mode_fractions[static_cast<std::size_t>(m)] += 1.0;
  }
  for (auto& f : res.mode_fractions) f /= n;
  res.avg_sum_rate = sum_rate / n;
  res.avg_energies = {sq1 / n, sq2 / n};
  res.gap = std::isfinite(dual_bound) ? dual_bound - res.avg_sum_rate : 0.0;

  const double slack_tol0 = 1e-6 * std::max(targets.q_bar[0], p);
  const double slack_tol1 = 1e-6 * std::max(targets.q_bar[1], p);
  if (res.feasible && (res.avg_energies[0] < targets.q_bar[0] - slack_tol0 ||
                       res.avg_energies[1] < targets.q_bar[1] - slack_tol1))
    res.feasible = false;
  return res;
}

}  // namespace swipt
