#pragma once

#include "swipt/types.hpp"

#include <cstdint>
#include <random>

namespace swipt {

// Deterministic CSCG sampler. std::normal_distribution is implementation
// defined, so the Gaussian draws are produced explicitly (polar Box-Muller
// over mt19937_64) to keep ensembles bit-reproducible for a given seed.
class Cscg {
 public:
  explicit Cscg(std::uint64_t seed) : gen_(seed) {}

  // uniform in (0, 1]
  double uniform() { return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53; }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // CN(0,1): independent real/imaginary parts, variance 1/2 each
  cd standard_complex() {
    const double re = normal();
    const double im = normal();
    return cd(re * M_SQRT1_2, im * M_SQRT1_2);
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace swipt
