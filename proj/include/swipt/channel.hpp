#pragma once

#include "swipt/rng.hpp"
#include "swipt/types.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace swipt {

struct Geometry {
  std::vector<std::array<double, 2>> tx;  // positions [m]
  std::vector<std::array<double, 2>> rx;

  int users() const { return static_cast<int>(tx.size()); }

  double distance(int rx_k, int tx_l) const {
    const auto& a = rx.at(static_cast<std::size_t>(rx_k));
    const auto& b = tx.at(static_cast<std::size_t>(tx_l));
    return std::hypot(a[0] - b[0], a[1] - b[1]);
  }

  void validate() const {
    if (tx.size() != rx.size()) throw ShapeError("Geometry: tx/rx counts differ");
    if (tx.size() < 2) throw std::invalid_argument("Geometry: need K >= 2 users");
    const int k = users();
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        if (!(distance(i, j) > 0.0))
          throw std::invalid_argument("Geometry: coincident Tx/Rx positions");
  }
};

struct RicianParams {
  double rician_factor = 3.0;  // M >= 0, LoS-to-scatter power ratio
  double c0 = 0.01;            // linear pathloss at the reference distance
  double r0 = 1.0;             // reference distance [m]
  double xi = 3.0;             // pathloss exponent
  double carrier_mhz = 900.0;  // recorded in scenario metadata, not used numerically

  void validate() const {
    if (!(rician_factor >= 0.0)) throw std::invalid_argument("RicianParams: M must be >= 0");
    if (!(c0 > 0.0)) throw std::invalid_argument("RicianParams: c0 must be > 0");
    if (!(r0 > 0.0)) throw std::invalid_argument("RicianParams: r0 must be > 0");
    if (!(xi >= 0.0)) throw std::invalid_argument("RicianParams: xi must be >= 0");
  }
};

// One fading realization: h(k,l) is the amplitude gain Tx l -> Rx k.
struct ChannelState {
  CMat h;
  std::vector<double> noise_powers;  // sigma_k^2 [W]

  int users() const { return static_cast<int>(h.rows()); }
};

struct ChannelEnsemble {
  std::vector<ChannelState> states;  // uniformly weighted (sample average)
  std::uint64_t seed = 0;

  int users() const { return states.empty() ? 0 : states.front().users(); }
  int size() const { return static_cast<int>(states.size()); }
};

inline double pathloss(double distance, const RicianParams& p) {
  if (!(distance > 0.0)) throw std::domain_error("pathloss: distance must be > 0");
  return p.c0 * std::pow(distance / p.r0, -p.xi);
}

// LoS component fixed to 1+0j (unit power); scattered part CN(0,1). Draws are
// emitted in (state, rx, tx) order so the ensemble regenerates bit-identically
// from (geometry, params, seed, n_states).
inline ChannelEnsemble sample_rician(const Geometry& geo, const RicianParams& params,
                                     const std::vector<double>& noise_powers,
                                     std::uint64_t seed, int n_states) {
  geo.validate();
  params.validate();
  if (n_states < 1) throw std::invalid_argument("sample_rician: n_states must be >= 1");
  const int k = geo.users();
  if (static_cast<int>(noise_powers.size()) != k)
    throw ShapeError("sample_rician: noise_powers size != K");

  const double m = params.rician_factor;
  const double los_amp = std::sqrt(m / (m + 1.0));
  const double nlos_amp = std::sqrt(1.0 / (m + 1.0));

  CMat gain_sqrt(k, k);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) gain_sqrt(r, c) = std::sqrt(pathloss(geo.distance(r, c), params));

  ChannelEnsemble out;
  out.seed = seed;
  out.states.reserve(static_cast<std::size_t>(n_states));
  Cscg rng(seed);
  for (int s = 0; s < n_states; ++s) {
    ChannelState st;
    st.h.resize(k, k);
    st.noise_powers = noise_powers;
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < k; ++c)
        st.h(r, c) = (los_amp + nlos_amp * rng.standard_complex()) * gain_sqrt(r, c);
    out.states.push_back(std::move(st));
  }
  return out;
}

inline ChannelEnsemble fixed_awgn(const CMat& channels, const std::vector<double>& noise_powers) {
  if (channels.rows() != channels.cols()) throw ShapeError("fixed_awgn: matrix must be square");
  if (static_cast<int>(noise_powers.size()) != channels.rows())
    throw ShapeError("fixed_awgn: noise_powers size != K");
  for (double s : noise_powers)
    if (!(s > 0.0)) throw std::invalid_argument("fixed_awgn: noise powers must be > 0");
  ChannelEnsemble out;
  out.states.push_back(ChannelState{channels, noise_powers});
  return out;
}

// Mean |h_kl|^2 over the ensemble, used by the grouping rule and scenario bounds.
inline Eigen::MatrixXd mean_channel_power(const ChannelEnsemble& ens) {
  const int k = ens.users();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(k, k);
  for (const auto& st : ens.states) acc += st.h.cwiseAbs2();
  return acc / static_cast<double>(ens.size());
}

}  // namespace swipt
