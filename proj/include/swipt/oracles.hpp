#pragma once

#include "swipt/channel.hpp"
#include "swipt/types.hpp"

#include <functional>
#include <vector>

// Brute-force references used by the validation suites and tests. Everything
// here is deliberately independent of the solver paths it checks: plain grids
// and bisections over the raw formulas.
namespace swipt::oracles {

struct ThetaGridResult {
  double best_value = 0.0;  // max over the grid of mu1 Q1' + mu2 Q2'
  double best_theta = 0.0;
  double q1 = 0.0;  // quadratic forms h_k S h_k^H at the best phase (no zeta)
  double q2 = 0.0;
};

// Grid over rank-one, full-power covariances S(theta) = p*[[1,e^{j t}],[e^{-j t},1]].
inline ThetaGridResult theta_grid_two_user(const CMat& h, const Vec& mu, double p_max,
                                           long n_grid) {
  const cd h11 = h(0, 0), h12 = h(0, 1), h21 = h(1, 0), h22 = h(1, 1);
  // h_k S(t) h_k^H = p*(|h_k1|^2 + |h_k2|^2 + 2 Re(h_k1 conj(h_k2) e^{-j t}))
  const double base1 = std::norm(h11) + std::norm(h12);
  const double base2 = std::norm(h21) + std::norm(h22);
  const cd z1 = h11 * std::conj(h12);
  const cd z2 = h21 * std::conj(h22);
  ThetaGridResult out;
  out.best_value = -std::numeric_limits<double>::infinity();
  for (long i = 0; i < n_grid; ++i) {
    const double t = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n_grid);
    const cd rot(std::cos(t), -std::sin(t));
    const double q1 = p_max * (base1 + 2.0 * std::real(z1 * rot));
    const double q2 = p_max * (base2 + 2.0 * std::real(z2 * rot));
    const double v = mu(0) * q1 + mu(1) * q2;
    if (v > out.best_value) {
      out.best_value = v;
      out.best_theta = t;
      out.q1 = q1;
      out.q2 = q2;
    }
  }
  return out;
}

// Golden-section search for a unimodal minimum on [lo, hi].
inline double golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                                      double tol) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

struct GridArgmax {
  double arg = 0.0;
  double value = 0.0;
};

inline GridArgmax grid_argmax(const std::function<double(double)>& f, double lo, double hi,
                              long n) {
  GridArgmax out{lo, -std::numeric_limits<double>::infinity()};
  for (long i = 0; i < n; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    const double v = f(x);
    if (v > out.value) {
      out.arg = x;
      out.value = v;
    }
  }
  return out;
}

// Rank-one grid lower bound for the K-beamformer: v = [m_1, m_2 e^{j p_2}, ...],
// magnitudes and phases on uniform grids, value = v^H A v.
inline double rank_one_grid_best(const CMat& a, double p_max, int n_mag, int n_phase) {
  const int k = static_cast<int>(a.rows());
  std::vector<int> idx(static_cast<std::size_t>(2 * k - 1), 0);
  const double mstep = std::sqrt(p_max) / static_cast<double>(n_mag - 1);
  double best = -std::numeric_limits<double>::infinity();
  CVec v(k);
  // odometer over k magnitude axes and k-1 phase axes
  while (true) {
    for (int i = 0; i < k; ++i) {
      const double mag = mstep * static_cast<double>(idx[static_cast<std::size_t>(i)]);
      double phase = 0.0;
      if (i > 0)
        phase = 2.0 * M_PI * static_cast<double>(idx[static_cast<std::size_t>(k + i - 1)]) /
                static_cast<double>(n_phase);
      v(i) = std::polar(mag, phase);
    }
    const double val = std::real((v.adjoint() * a * v)(0, 0));
    best = std::max(best, val);
    int pos = 0;
    for (; pos < 2 * k - 1; ++pos) {
      const int limit = pos < k ? n_mag : n_phase;
      if (++idx[static_cast<std::size_t>(pos)] < limit) break;
      idx[static_cast<std::size_t>(pos)] = 0;
    }
    if (pos == 2 * k - 1) break;
  }
  return best;
}

// Independent per-user solver for the no-cooperation scheme: bisection on the
// scalar dual price against the average-energy target.
struct NcBisectionResult {
  double mu = 0.0;
  double avg_rate = 0.0;
  double avg_energy = 0.0;
  bool feasible = true;
};

inline NcBisectionResult nc_user_bisection(const ChannelEnsemble& ens, int k, double q_bar,
                                           double p_max, double zeta, int iters = 80) {
  const int kbar = 1 - k;  // two-user cross index
  const auto stats = [&](double mu) {
    double rate = 0.0, energy = 0.0;
    for (const auto& st : ens.states) {
      const double hd = std::norm(st.h(k, k));
      const double hc = std::norm(st.h(k, kbar));
      const double r = log2_1p(hd * p_max / (hc * p_max + st.noise_powers[static_cast<std::size_t>(k)]));
      const double q = zeta * (hd + hc) * p_max;
      if (r > mu * q)
        rate += r;
      else
        energy += q;
    }
    const double n = static_cast<double>(ens.size());
    return std::pair<double, double>(rate / n, energy / n);
  };
  NcBisectionResult out;
  if (q_bar <= 0.0) {
    auto [r, e] = stats(0.0);
    out.avg_rate = r;
    out.avg_energy = e;
    return out;
  }
  double lo = 0.0, hi = 1.0;
  while (stats(hi).second < q_bar && hi < 1e18) hi *= 2.0;
  if (stats(hi).second < q_bar) {
    out.feasible = false;
    out.mu = hi;
    auto [r, e] = stats(hi);
    out.avg_rate = r;
    out.avg_energy = e;
    return out;
  }
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (stats(mid).second >= q_bar)
      hi = mid;
    else
      lo = mid;
  }
  out.mu = hi;
  auto [r, e] = stats(hi);
  out.avg_rate = r;
  out.avg_energy = e;
  return out;
}

}  // namespace swipt::oracles
