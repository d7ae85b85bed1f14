#pragma once

#include "swipt/channel.hpp"
#include "swipt/types.hpp"

#include <vector>

namespace swipt {

// Per-receiver time-switching indicator: 1 = information decoding, 0 = energy
// harvesting. The two are mutually exclusive within a block.
struct ModeVector {
  std::vector<int> rho;

  int users() const { return static_cast<int>(rho.size()); }
  bool id_active(int k) const { return rho.at(static_cast<std::size_t>(k)) == 1; }

  void validate() const {
    for (int r : rho)
      if (r != 0 && r != 1) throw std::invalid_argument("ModeVector: entries must be 0 or 1");
  }
};

struct PowerAllocation {
  std::vector<double> p_info;  // p_k^I [W]; the energy side lives on diag(S_E)

  int users() const { return static_cast<int>(p_info.size()); }
  double operator[](int k) const { return p_info.at(static_cast<std::size_t>(k)); }
};

// Hermitian PSD covariance of the energy signals; diagonal entries are the
// per-Tx energy powers. rank() counts eigenvalues above kRankTol * max.
struct EnergyCovariance {
  CMat s;

  static EnergyCovariance zero(int k) { return EnergyCovariance{CMat::Zero(k, k)}; }

  int users() const { return static_cast<int>(s.rows()); }
  double diag(int k) const { return s(k, k).real(); }

  Eigen::VectorXd eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<CMat> es(s, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }

  int rank() const {
    const Eigen::VectorXd ev = eigenvalues();
    const double top = ev.size() ? ev(ev.size() - 1) : 0.0;
    if (!(top > 0.0)) return 0;
    int r = 0;
    for (int i = 0; i < ev.size(); ++i)
      if (ev(i) > kRankTol * top) ++r;
    return r;
  }

  void validate(double p_max_cap = -1.0) const {
    if (s.rows() != s.cols()) throw ShapeError("EnergyCovariance: matrix must be square");
    const double scale = std::max(1e-300, s.cwiseAbs().maxCoeff());
    if (!((s - s.adjoint()).cwiseAbs().maxCoeff() <= 1e-10 * scale))
      throw FeasibilityError("EnergyCovariance: matrix not Hermitian");
    const double tol_psd = kPsdTolScale * std::max(s.real().trace(), 1e-300);
    for (int k = 0; k < s.rows(); ++k) {
      if (std::abs(s(k, k).imag()) > tol_psd)
        throw FeasibilityError("EnergyCovariance: diagonal not real");
      if (s(k, k).real() < -tol_psd)
        throw FeasibilityError("EnergyCovariance: negative diagonal power");
      if (p_max_cap > 0.0 && s(k, k).real() > p_max_cap * (1.0 + 1e-9))
        throw FeasibilityError("EnergyCovariance: diagonal exceeds power budget");
    }
    const Eigen::VectorXd ev = eigenvalues();
    if (ev.size() && ev(0) < -tol_psd)
      throw FeasibilityError("EnergyCovariance: matrix not PSD");
  }
};

// One fading state's full solution.
struct StateDecision {
  ModeVector mode;
  PowerAllocation powers;
  EnergyCovariance s_e;
  std::vector<double> rates;     // bits/s/Hz
  std::vector<double> energies;  // W
};

namespace detail {

inline void check_power_feasible(const PowerAllocation& powers, const EnergyCovariance& s_e,
                                 const SystemParams& params) {
  const double slack = 1e-9 * params.p_max;
  const int k = powers.users();
  if (s_e.users() != k) throw ShapeError("power/covariance dimension mismatch");
  for (int i = 0; i < k; ++i) {
    const double pi = powers[i];
    const double pe = s_e.diag(i);
    if (pi < -slack) throw FeasibilityError("negative information power");
    if (pe < -slack) throw FeasibilityError("negative energy power");
    if (pi + pe > params.p_max + slack)
      throw FeasibilityError("per-Tx power budget exceeded");
  }
}

// h S h^H for a channel row h (passed as the column vector of its entries)
inline double quadratic_form(const CVec& h_row, const CMat& s) {
  const cd v = (h_row.transpose() * s * h_row.conjugate())(0, 0);
  return v.real();
}

}  // namespace detail

// zeta * (1-rho_k) * (sum_l |h_kl|^2 p_l^I + h_k S_E h_k^H). Receiver noise is
// negligible at harvesting scale and is excluded.
inline double harvested_power(const ChannelState& state, int k, const ModeVector& mode,
                              const PowerAllocation& powers, const EnergyCovariance& s_e,
                              const SystemParams& params) {
  detail::check_power_feasible(powers, s_e, params);
  if (mode.id_active(k)) return 0.0;
  const int n = state.users();
  double acc = 0.0;
  for (int l = 0; l < n; ++l) acc += std::norm(state.h(k, l)) * powers[l];
  const CVec row = state.h.row(k).transpose();
  acc += detail::quadratic_form(row, s_e.s);
  return params.zeta * acc;
}

// rho_k * log2(1 + |h_kk|^2 p_k^I / (sum_{l != k} |h_kl|^2 p_l^I + sigma_k^2)).
// Energy-signal interference is pre-cancelled and does not appear.
inline double achievable_rate(const ChannelState& state, int k, const ModeVector& mode,
                              const PowerAllocation& powers, const SystemParams& params) {
  const double slack = 1e-9 * params.p_max;
  for (int i = 0; i < powers.users(); ++i)
    if (powers[i] < -slack) throw FeasibilityError("negative information power");
  if (!mode.id_active(k)) return 0.0;
  const int n = state.users();
  double interference = 0.0;
  for (int l = 0; l < n; ++l)
    if (l != k) interference += std::norm(state.h(k, l)) * powers[l];
  const double sigma = state.noise_powers.at(static_cast<std::size_t>(k));
  const double snr = std::norm(state.h(k, k)) * powers[k] / (interference + sigma);
  return log2_1p(snr);
}

// Joint-mode rate: half the interference-free rate at doubled receive SNR.
inline double eia_rate(const ChannelState& state, int k, int rho_ia, const SystemParams& params) {
  if (rho_ia != 0 && rho_ia != 1) throw std::invalid_argument("eia_rate: rho must be 0 or 1");
  if (rho_ia == 0) return 0.0;
  const double sigma = state.noise_powers.at(static_cast<std::size_t>(k));
  return 0.5 * log2_1p(2.0 * std::norm(state.h(k, k)) * params.p_max / sigma);
}

inline double eia_energy(const ChannelState& state, int k, int rho_ia, const EnergyCovariance& s_e,
                         const SystemParams& params) {
  if (rho_ia != 0 && rho_ia != 1) throw std::invalid_argument("eia_energy: rho must be 0 or 1");
  s_e.validate(params.p_max);
  if (rho_ia == 1) return 0.0;
  const CVec row = state.h.row(k).transpose();
  return params.zeta * detail::quadratic_form(row, s_e.s);
}

}  // namespace swipt
