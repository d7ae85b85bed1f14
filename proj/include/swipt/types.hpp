#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace swipt {

using cd = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

struct FeasibilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Powers are carried in watts everywhere; dBm only appears at the file-format
// boundary.
inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

// PSD slack is measured against the trace, rank against the top eigenvalue.
inline constexpr double kPsdTolScale = 1e-9;
inline constexpr double kRankTol = 1e-8;

struct SystemParams {
  double p_max = 0.1;                // peak per-Tx power [W]
  double zeta = 1.0;                 // harvesting efficiency, (0,1]
  std::vector<double> noise_powers;  // sigma_k^2 [W], one per receiver

  double noise(int k) const { return noise_powers.at(static_cast<std::size_t>(k)); }

  void validate(int k_users) const {
    if (!(p_max > 0.0)) throw std::invalid_argument("SystemParams: p_max must be > 0");
    if (!(zeta > 0.0 && zeta <= 1.0))
      throw std::invalid_argument("SystemParams: zeta must be in (0,1]");
    if (static_cast<int>(noise_powers.size()) != k_users)
      throw ShapeError("SystemParams: noise_powers size != K");
    for (double s : noise_powers)
      if (!(s > 0.0)) throw std::invalid_argument("SystemParams: noise powers must be > 0");
  }
};

inline double log2_1p(double x) { return std::log2(1.0 + x); }

}  // namespace swipt
