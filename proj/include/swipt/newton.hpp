#pragma once

#include "swipt/types.hpp"

#include <functional>
#include <limits>

namespace swipt {

struct NewtonOptions {
  double grad_tol = 0.0;  // |projected gradient| target; 0 => argument-width driven
  int max_iter = 100;
};

// Maximizes a concave f on [lo, hi] given analytic f' and f''. Safeguarded
// Newton on f': iterates outside the current sign bracket, or any f'' >= 0
// (loss of concavity at the evaluation point), fall back to bisection on f'.
// Derivatives are evaluated at points clamped 1e-12*(hi-lo) inside the upper
// end, where callers may have a square-root slope singularity; the returned
// argmax still reaches the exact endpoints.
inline double newton_maximize_scalar(const std::function<double(double)>& fprime,
                                     const std::function<double(double)>& fsecond, double lo,
                                     double hi, NewtonOptions opts = {}) {
  if (!(hi > lo)) throw std::invalid_argument("newton_maximize_scalar: empty interval");
  const double width = hi - lo;
  const double margin = 1e-12 * width;
  const auto eval_point = [&](double p) { return std::min(std::max(p, lo), hi - margin); };

  const double g_lo = fprime(eval_point(lo));
  if (!std::isfinite(g_lo)) throw NumericError("newton_maximize_scalar: non-finite derivative");
  if (g_lo <= 0.0) return lo;  // concave => f' nonincreasing, max at left end
  const double g_hi = fprime(eval_point(hi));
  if (!std::isfinite(g_hi)) throw NumericError("newton_maximize_scalar: non-finite derivative");
  if (g_hi >= 0.0) return hi;

  double a = lo, b = hi;  // f'(a) > 0 > f'(b)
  double p = 0.5 * (a + b);
  double best_p = p;
  double best_grad = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iter; ++it) {
    const double pc = eval_point(p);
    const double d1 = fprime(pc);
    if (!std::isfinite(d1)) throw NumericError("newton_maximize_scalar: non-finite derivative");
    if (std::abs(d1) < best_grad) {
      best_grad = std::abs(d1);
      best_p = pc;
    }
    if (d1 == 0.0 || (opts.grad_tol > 0.0 && std::abs(d1) <= opts.grad_tol)) return pc;
    if (d1 > 0.0)
      a = pc;
    else
      b = pc;
    if (b - a <= 2.0 * margin) break;

    const double d2 = fsecond(pc);
    double next;
    if (std::isfinite(d2) && d2 < 0.0)
      next = pc - d1 / d2;
    else
      next = 0.5 * (a + b);            // concavity violated numerically: bisect
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (std::abs(next - p) <= margin) break;
    p = next;
  }
  // prefer the flattest iterate over the bracket midpoint when Newton stalled
  const double mid = eval_point(0.5 * (a + b));
  return (b - a <= 4.0 * margin) ? mid : best_p;
}

}  // namespace swipt
