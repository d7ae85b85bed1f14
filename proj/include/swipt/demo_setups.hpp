#pragma once

#include "swipt/channel.hpp"
#include "swipt/types.hpp"

// Canonical setups used by the bundled scenario files, the validation suites
// and the tests: a fixed two-user AWGN channel set with ~30 dB attenuation,
// two receiver placements in a 5 m x 5 m field, and a clustered four-user
// layout whose natural pairing is {0,1} / {2,3}.
namespace swipt::demo {

inline CMat awgn_two_user_channels() {
  CMat h(2, 2);
  h << std::polar(0.0307, 1.7683), std::polar(0.0241, -2.6973), std::polar(0.0349, -1.4011),
      std::polar(0.0258, 2.8246);
  return h;
}

// Case 1: both receivers at the field center, direct and cross links equally
// strong. Case 2: each receiver pulled toward its own transmitter.
inline Geometry two_user_geometry(int case_id) {
  Geometry g;
  g.tx = {{0.0, 0.0}, {5.0, 5.0}};
  if (case_id == 1)
    g.rx = {{2.5, 2.5}, {2.5, 2.5}};
  else
    g.rx = {{1.25, 1.25}, {3.75, 3.75}};
  return g;
}

// Two tight clusters in opposite corners: cross links inside a cluster are
// stronger than the direct links, links across clusters are ~20 dB weaker.
inline Geometry four_user_cluster_geometry() {
  Geometry g;
  g.tx = {{0.0, 0.0}, {1.0, 0.0}, {4.0, 4.0}, {5.0, 4.0}};
  g.rx = {{1.0, 1.0}, {0.0, 1.0}, {5.0, 5.0}, {4.0, 5.0}};
  return g;
}

inline SystemParams default_system(int k_users) {
  SystemParams p;
  p.p_max = 0.1;   // 20 dBm
  p.zeta = 0.7;
  p.noise_powers.assign(static_cast<std::size_t>(k_users), 1e-8);  // -50 dBm
  return p;
}

}  // namespace swipt::demo
