#pragma once

#include "swipt/types.hpp"

#include <functional>
#include <limits>
#include <utility>

namespace swipt {

// One oracle answer. For an objective cut, value/subgrad describe the convex
// objective at the query point. A feasibility cut reports a violated convex
// constraint g(x) <= 0: value = g(x) > 0 and subgrad a subgradient of g; such
// iterations keep the cut but do not update the incumbent.
struct EllipsoidCut {
  double value = 0.0;
  Vec subgrad;
  bool feasibility_cut = false;
};

struct EllipsoidStatus {
  Vec center;
  Eigen::MatrixXd shape;  // PSD; ellipsoid is {y : (y-c)^T shape^{-1} (y-c) <= 1}
  int iterations = 0;
  bool converged = false;
  double best_gap = std::numeric_limits<double>::infinity();
};

struct EllipsoidOptions {
  double tol = 1e-9;  // absolute certified objective gap
  int max_iter = 0;   // 0 => 500 * m^2
  // optional external convergence probe, polled every check_every objective
  // cuts; returning true ends the search (e.g. a primal recovery certified
  // the incumbent before the volume-based criterion fires)
  int check_every = 0;
  std::function<bool()> stop_check;
};

// Minimizes a convex function over the box {lo <= x <= hi} by the central-cut
// ellipsoid method. The certified gap at a feasible query x with subgradient g
// is sqrt(g^T P g) >= f(x) - min f, which drives convergence. Returns the best
// feasible point seen. The 1-D case degenerates to subgradient bisection.
inline std::pair<Vec, EllipsoidStatus> ellipsoid_minimize(
    const std::function<EllipsoidCut(const Vec&)>& oracle, const Vec& lo, const Vec& hi,
    EllipsoidOptions opts = {}) {
  const int m = static_cast<int>(lo.size());
  if (hi.size() != m || m < 1) throw ShapeError("ellipsoid_minimize: bad box");
  for (int i = 0; i < m; ++i)
    if (!(hi(i) > lo(i))) throw std::invalid_argument("ellipsoid_minimize: empty box");
  const int max_iter = opts.max_iter > 0 ? opts.max_iter : 500 * m * m;

  Vec x = 0.5 * (lo + hi);
  Vec best_x = x;
  double best_f = std::numeric_limits<double>::infinity();
  bool have_best = false;
  EllipsoidStatus status;

  if (m == 1) {
    double a = lo(0), b = hi(0);
    for (int it = 0; it < max_iter; ++it) {
      status.iterations = it + 1;
      x(0) = 0.5 * (a + b);
      const EllipsoidCut cut = oracle(x);
      if (!std::isfinite(cut.value) || !cut.subgrad.allFinite())
        throw NumericError("ellipsoid_minimize: non-finite oracle output");
      const double g = cut.subgrad(0);
      if (!cut.feasibility_cut) {
        if (!have_best || cut.value < best_f) {
          best_f = cut.value;
          best_x = x;
          have_best = true;
        }
        const double gap = std::abs(g) * 0.5 * (b - a);
        status.best_gap = std::min(status.best_gap, gap);
        if (gap <= opts.tol) {
          status.converged = true;
          break;
        }
      }
      if (g > 0.0)
        b = x(0);
      else
        a = x(0);
      if (!(b - a > 0.0)) break;
    }
    status.center = x;
    status.shape = Eigen::MatrixXd::Constant(1, 1, std::pow(0.5 * (b - a), 2));
    if (!have_best) best_x = x;
    return {best_x, status};
  }

  // Ball covering the box corners: P = m * Diag(((hi-lo)/2)^2)
  Eigen::MatrixXd shape = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) shape(i, i) = static_cast<double>(m) * std::pow(0.5 * (hi(i) - lo(i)), 2);

  const double mm = static_cast<double>(m);
  const double scale_back = mm * mm / (mm * mm - 1.0);
  long objective_cuts = 0;
  // stop before the shape matrix degenerates past double precision, where the
  // gap certificate would no longer be trustworthy
  const double trace_floor = 1e-26 * shape.trace();

  for (int it = 0; it < max_iter; ++it) {
    if (shape.trace() <= trace_floor || shape.diagonal().minCoeff() < 0.0) break;
    status.iterations = it + 1;

    Vec g;
    bool counts_objective = false;
    double fval = 0.0;
    int box_violation = -1;
    for (int i = 0; i < m; ++i) {
      if (x(i) < lo(i)) {
        box_violation = i;
        g = Vec::Zero(m);
        g(i) = -1.0;
        break;
      }
      if (x(i) > hi(i)) {
        box_violation = i;
        g = Vec::Zero(m);
        g(i) = 1.0;
        break;
      }
    }
    if (box_violation < 0) {
      const EllipsoidCut cut = oracle(x);
      if (!std::isfinite(cut.value) || !cut.subgrad.allFinite())
        throw NumericError("ellipsoid_minimize: non-finite oracle output");
      g = cut.subgrad;
      counts_objective = !cut.feasibility_cut;
      fval = cut.value;
    }

    const double gnorm2 = (g.transpose() * shape * g)(0);
    if (!(gnorm2 > 0.0) || !std::isfinite(gnorm2)) break;  // degenerate ellipsoid
    const double denom = std::sqrt(gnorm2);

    if (counts_objective) {
      if (!have_best || fval < best_f) {
        best_f = fval;
        best_x = x;
        have_best = true;
      }
      status.best_gap = std::min(status.best_gap, denom);
      if (denom <= opts.tol) {
        status.converged = true;
        break;
      }
      ++objective_cuts;
      if (opts.check_every > 0 && opts.stop_check && objective_cuts % opts.check_every == 0 &&
          opts.stop_check()) {
        status.converged = true;
        break;
      }
    }

    const Vec pg = shape * g;
    x -= pg / (denom * (mm + 1.0));
    shape = scale_back * (shape - (2.0 / (mm + 1.0)) * (pg * pg.transpose()) / gnorm2);
    shape = 0.5 * (shape + shape.transpose());
    if (!shape.allFinite()) break;
  }

  status.center = x;
  status.shape = shape;
  if (!have_best) best_x = x.cwiseMax(lo).cwiseMin(hi);
  return {best_x, status};
}

}  // namespace swipt
