#pragma once

#include "swipt/ellipsoid.hpp"
#include "swipt/model.hpp"
#include "swipt/rng.hpp"
#include "swipt/types.hpp"

#include <algorithm>
#include <optional>
#include <vector>

namespace swipt {

// Nonnegative dual multipliers (1/W against power constraints).
struct DualPoint {
  Vec mu;
};

struct SdpSolution {
  EnergyCovariance s_e;
  Vec lambda;           // duals of the per-Tx diagonal caps
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;     // relative: (dual - primal) / max(dual, tiny)
  int iterations = 0;
  bool converged = false;
};

struct SdpNonConvergence : NumericError {
  SdpSolution best;
  explicit SdpNonConvergence(SdpSolution b)
      : NumericError("energy beamforming solver did not certify the requested gap"),
        best(std::move(b)) {}
};

struct EbfOptions {
  double tol = 1e-6;      // relative duality-gap target
  int max_iter = 0;       // ellipsoid cap, 0 => 500*K^2
  bool throw_on_fail = true;
  std::optional<Vec> warm_lambda;  // optional search-box center from a previous solve
  double warm_radius = 0.0;        // box half-width around warm_lambda (same units as A)
};

namespace detail {

inline CMat weight_matrix(const std::vector<CVec>& h_rows, const Vec& mu) {
  const int k = static_cast<int>(h_rows.size());
  CMat a = CMat::Zero(k, k);
  for (int u = 0; u < k; ++u) {
    if (mu(u) == 0.0) continue;
    // h^H h for row h: entry (i,j) = conj(h_i) h_j
    a += mu(u) * (h_rows[static_cast<std::size_t>(u)].conjugate() *
                  h_rows[static_cast<std::size_t>(u)].transpose());
  }
  return 0.5 * (a + CMat(a.adjoint()));
}

inline double trace_product(const CMat& a, const CMat& s) {
  return std::real((a * s).trace());
}

}  // namespace detail

// Closed form for the two-Tx case: the optimum is the rank-one, full-power
// covariance P*[[1,alpha],[conj(alpha),1]] with alpha the phase of
// ht1^H ht2, ht_k = [sqrt(mu1) h_1k, sqrt(mu2) h_2k]^T. A vanishing cross
// term makes every phase optimal; alpha = 1 is returned for determinism.
struct TwoUserEbf {
  EnergyCovariance s_e;
  cd alpha{1.0, 0.0};
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double value = 0.0;  // sum_k mu_k h_k S h_k^H = p_max (lambda1 + lambda2)
};

inline TwoUserEbf closed_form_two_user_ebf(const std::vector<CVec>& h_rows, const Vec& mu,
                                           double p_max) {
  if (h_rows.size() != 2 || mu.size() != 2) throw ShapeError("closed_form_two_user_ebf: K != 2");
  if (!(mu.minCoeff() >= 0.0)) throw std::invalid_argument("weights must be >= 0");
  const CVec& h1 = h_rows[0];
  const CVec& h2 = h_rows[1];
  // ht_k entries indexed by receiver: ht_k = [sqrt(mu1) h1(k), sqrt(mu2) h2(k)]
  const double s1 = std::sqrt(mu(0)), s2 = std::sqrt(mu(1));
  const cd ht1[2] = {s1 * h1(0), s2 * h2(0)};
  const cd ht2[2] = {s1 * h1(1), s2 * h2(1)};
  const cd cross = std::conj(ht1[0]) * ht2[0] + std::conj(ht1[1]) * ht2[1];
  const double n1 = std::norm(ht1[0]) + std::norm(ht1[1]);
  const double n2 = std::norm(ht2[0]) + std::norm(ht2[1]);
  const double cmag = std::abs(cross);
  const cd alpha = cmag > 0.0 ? cross / cmag : cd(1.0, 0.0);

  TwoUserEbf out;
  out.alpha = alpha;
  out.s_e.s.resize(2, 2);
  out.s_e.s << cd(p_max, 0.0), p_max * alpha, p_max * std::conj(alpha), cd(p_max, 0.0);
  out.lambda1 = n1 + cmag;
  out.lambda2 = n2 + cmag;
  out.value = p_max * (out.lambda1 + out.lambda2);
  return out;
}

namespace detail {

// Least-squares primal recovery: S = B C B^H with B spanning the near-null
// space of Diag(lambda) - A and C Hermitian PSD chosen so active diagonals hit
// p_max. C is solved in its r^2 real coordinates, then eigenvalue-clipped.
inline CMat recover_primal(const CMat& a, const CMat& basis, double p_max,
                           const std::vector<int>& active) {
  const int k = static_cast<int>(a.rows());
  const int r = static_cast<int>(basis.cols());
  const int nparam = r * r;
  Eigen::MatrixXd mat(static_cast<int>(active.size()), nparam);
  Eigen::VectorXd rhs = Eigen::VectorXd::Constant(static_cast<int>(active.size()), p_max);
  for (std::size_t row = 0; row < active.size(); ++row) {
    const CVec b = basis.row(active[row]).transpose();  // length r
    int col = 0;
    for (int i = 0; i < r; ++i) mat(static_cast<int>(row), col++) = std::norm(b(i));
    for (int i = 0; i < r; ++i)
      for (int j = i + 1; j < r; ++j) {
        const cd prod = b(i) * std::conj(b(j));
        mat(static_cast<int>(row), col++) = 2.0 * prod.real();
        mat(static_cast<int>(row), col++) = -2.0 * prod.imag();
      }
  }
  const Eigen::VectorXd c = mat.completeOrthogonalDecomposition().solve(rhs);
  CMat cmat = CMat::Zero(r, r);
  int col = 0;
  for (int i = 0; i < r; ++i) cmat(i, i) = c(col++);
  for (int i = 0; i < r; ++i)
    for (int j = i + 1; j < r; ++j) {
      const double re = c(col++);
      const double im = c(col++);
      cmat(i, j) = cd(re, im);
      cmat(j, i) = cd(re, -im);
    }
  // project C to the PSD cone
  Eigen::SelfAdjointEigenSolver<CMat> es(cmat);
  CMat cpsd = CMat::Zero(r, r);
  for (int i = 0; i < r; ++i) {
    const double ev = std::max(0.0, es.eigenvalues()(i));
    if (ev > 0.0) cpsd += ev * (es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint());
  }
  CMat s = basis * cpsd * basis.adjoint();
  s = 0.5 * (s + CMat(s.adjoint()));
  // enforce the diagonal caps exactly
  double worst = 0.0;
  for (int i = 0; i < k; ++i) worst = std::max(worst, s(i, i).real() / p_max);
  if (worst > 1.0) s /= worst;
  return s;
}

// Cutting-plane oracle for the dual min p_max*sum(lambda) s.t. Diag(lambda)
// is dominated by A: an infeasible center yields a minimum-eigenvalue cut,
// a feasible one slides onto the constraint boundary (subtracting the slack
// eigenvalue keeps feasibility exactly) before the objective cut.
inline std::function<EllipsoidCut(const Vec&)> make_dual_cut_oracle(const CMat& a, double p_max,
                                                                    Vec& best_feasible,
                                                                    double& best_dual) {
  const int k = static_cast<int>(a.rows());
  return [&a, p_max, k, &best_feasible, &best_dual](const Vec& lambda) {
    CMat e = -a;
    for (int i = 0; i < k; ++i) e(i, i) += lambda(i);
    Eigen::SelfAdjointEigenSolver<CMat> es(e);
    const double mineig = es.eigenvalues()(0);
    EllipsoidCut cut;
    if (mineig < 0.0) {
      const CVec v = es.eigenvectors().col(0);
      cut.feasibility_cut = true;
      cut.value = -mineig;
      cut.subgrad = Vec(k);
      for (int i = 0; i < k; ++i) cut.subgrad(i) = -std::norm(v(i));
      return cut;
    }
    Vec slid = lambda.array() - mineig;
    const double val = p_max * slid.sum();
    if (val < best_dual) {
      best_dual = val;
      best_feasible = slid;
    }
    cut.value = p_max * lambda.sum();
    cut.subgrad = Vec::Constant(k, p_max);
    return cut;
  };
}

// Projected gradient ascent on S = F F^H with per-row norm caps sqrt(p_max);
// tightens a recovered primal toward the SDP optimum.
inline CMat polish_primal(const CMat& a, CMat s, double p_max, int iters) {
  const int k = static_cast<int>(a.rows());
  Eigen::SelfAdjointEigenSolver<CMat> es(s);
  const int r = std::max(1, static_cast<int>((es.eigenvalues().array() >
                                              kRankTol * std::max(1e-300, es.eigenvalues().maxCoeff()))
                                                 .count()));
  CMat f(k, r);
  for (int i = 0; i < r; ++i) {
    const int idx = k - 1 - i;
    f.col(i) = es.eigenvectors().col(idx) * std::sqrt(std::max(0.0, es.eigenvalues()(idx)));
  }
  Eigen::SelfAdjointEigenSolver<CMat> ea(a, Eigen::EigenvaluesOnly);
  const double lmax = std::max(ea.eigenvalues().maxCoeff(), 1e-300);
  const double step = 0.45 / lmax;
  CMat best_f = f;
  double best_val = trace_product(a, f * f.adjoint());
  int stall = 0;
  for (int it = 0; it < iters && stall < 60; ++it) {
    f += step * 2.0 * (a * f);
    for (int row = 0; row < k; ++row) {
      const double n2 = f.row(row).squaredNorm();
      if (n2 > p_max) f.row(row) *= std::sqrt(p_max / n2);
    }
    const double val = trace_product(a, f * f.adjoint());
    if (val > best_val * (1.0 + 1e-14)) {
      best_val = val;
      best_f = f;
      stall = 0;
    } else {
      ++stall;
    }
  }
  CMat out = best_f * best_f.adjoint();
  return 0.5 * (out + CMat(out.adjoint()));
}

}  // namespace detail

// Standalone ellipsoid solve of the dual; exposed so the closed-form duals of
// the two-Tx case can be cross-checked against the iterative path.
struct DualSolve {
  Vec lambda;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline DualSolve dual_lambda_ellipsoid(const CMat& a, double p_max, double tol = 1e-9,
                                       int max_iter = 0) {
  const int k = static_cast<int>(a.rows());
  const double anorm = a.cwiseAbs().maxCoeff();
  DualSolve out;
  if (!(anorm > 0.0)) {
    out.lambda = Vec::Zero(k);
    out.converged = true;
    return out;
  }
  double offdiag_sum = 0.0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (i != j) offdiag_sum += std::abs(a(i, j));
  Vec lo(k), hi(k);
  for (int i = 0; i < k; ++i) {
    lo(i) = a(i, i).real();
    hi(i) = a(i, i).real() + offdiag_sum + 1e-12 * anorm;
  }
  Vec best_feasible;
  double best_dual = std::numeric_limits<double>::infinity();
  EllipsoidOptions eopts;
  eopts.max_iter = max_iter > 0 ? max_iter : 500 * k * k;
  eopts.tol = tol * p_max * anorm;
  const auto result = ellipsoid_minimize(detail::make_dual_cut_oracle(a, p_max, best_feasible, best_dual),
                                         lo, hi, eopts);
  out.iterations = result.second.iterations;
  out.converged = result.second.converged;
  if (best_feasible.size() == 0) {
    best_feasible = hi;
    best_dual = p_max * hi.sum();
    out.converged = false;
  }
  out.lambda = best_feasible;
  out.value = best_dual;
  return out;
}


// Maximizes sum_k mu_k h_k S h_k^H = Tr(A S), A = sum_k mu_k h_k^H h_k, over
// {S PSD, S_kk <= p_max}. K = 2 uses the closed form above. Larger K solves
// the dual min p_max * sum(lambda) s.t. Diag(lambda) >= A by ellipsoid with
// minimum-eigenvalue feasibility cuts, slides every feasible iterate onto the
// constraint boundary, then recovers a primal matrix from the null space of
// Diag(lambda*) - A. The reported dual value comes from an exactly feasible
// lambda, so the certified relative gap is trustworthy regardless of how the
// search box was chosen.
inline SdpSolution weighted_energy_beamforming(const std::vector<CVec>& h_rows, const Vec& mu,
                                               double p_max, EbfOptions opts = {}) {
  const int k = static_cast<int>(h_rows.size());
  if (k < 2) throw ShapeError("weighted_energy_beamforming: need K >= 2");
  if (mu.size() != k) throw ShapeError("weighted_energy_beamforming: |mu| != K");
  if (!(mu.minCoeff() >= 0.0)) throw std::invalid_argument("weights must be >= 0");
  if (!(p_max > 0.0)) throw std::invalid_argument("p_max must be > 0");

  SdpSolution sol;
  if (k == 2) {
    const TwoUserEbf cf = closed_form_two_user_ebf(h_rows, mu, p_max);
    sol.s_e = cf.s_e;
    sol.lambda = Vec(2);
    sol.lambda << cf.lambda1, cf.lambda2;
    sol.primal_value = cf.value;
    sol.dual_value = cf.value;
    sol.gap = 0.0;
    sol.converged = true;
    return sol;
  }

  const CMat a = detail::weight_matrix(h_rows, mu);
  const double anorm = a.cwiseAbs().maxCoeff();
  if (!(anorm > 0.0)) {  // zero objective: any feasible point is optimal
    sol.s_e.s = p_max * CMat::Identity(k, k);
    sol.lambda = Vec::Zero(k);
    sol.converged = true;
    return sol;
  }

  // lambda* lies in [A_kk, A_kk + sum of all off-diagonal magnitudes]
  double offdiag_sum = 0.0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (i != j) offdiag_sum += std::abs(a(i, j));
  Vec safe_lo(k), safe_hi(k);
  for (int i = 0; i < k; ++i) {
    safe_lo(i) = a(i, i).real();
    safe_hi(i) = a(i, i).real() + offdiag_sum + 1e-12 * anorm;
  }

  Vec best_feasible;
  double best_dual = std::numeric_limits<double>::infinity();
  const auto oracle = detail::make_dual_cut_oracle(a, p_max, best_feasible, best_dual);

  EllipsoidOptions eopts;
  eopts.max_iter = opts.max_iter > 0 ? opts.max_iter : 500 * k * k;
  eopts.tol = 0.05 * opts.tol * p_max * std::max(anorm, 1e-300);

  // primal recovery with an adaptive null-space dimension; updates sol from
  // the incumbent dual point and reports whether the gap target is met
  CMat best_s;
  double best_primal = -std::numeric_limits<double>::infinity();
  const auto recover = [&]() {
    sol.lambda = best_feasible;
    sol.dual_value = best_dual;
    CMat e = -a;
    for (int i = 0; i < k; ++i) e(i, i) += sol.lambda(i);
    Eigen::SelfAdjointEigenSolver<CMat> es(e);
    std::vector<int> active;
    const double act_tol = 1e-10 * std::max(anorm, sol.lambda.maxCoeff());
    for (int i = 0; i < k; ++i)
      if (sol.lambda(i) > act_tol) active.push_back(i);
    if (active.empty())
      for (int i = 0; i < k; ++i) active.push_back(i);

    const double span = std::max(es.eigenvalues().maxCoeff(), anorm);
    int r_guess = 0;
    for (int i = 0; i < k; ++i)
      if (es.eigenvalues()(i) <= 1e-7 * span) ++r_guess;
    r_guess = std::max(1, r_guess);

    const auto consider = [&](const CMat& s) {
      const double val = detail::trace_product(a, s);
      if (val > best_primal) {
        best_primal = val;
        best_s = s;
      }
      return best_dual - best_primal <= opts.tol * std::abs(best_dual);
    };
    for (int r = r_guess; r <= k; ++r) {
      const CMat basis = es.eigenvectors().leftCols(r);
      if (consider(detail::recover_primal(a, basis, p_max, active))) return true;
      if (consider(detail::polish_primal(a, best_s, p_max, 400))) return true;
    }
    return false;
  };

  bool certified = false;
  // a primal recovery can certify the incumbent dual point long before the
  // volume criterion fires, so poll it periodically during the search
  eopts.check_every = 3 * k * k;
  eopts.stop_check = [&]() {
    if (best_feasible.size() == 0) return false;
    certified = recover();
    return certified;
  };
  for (int round = 0; round < 2 && !certified; ++round) {
    Vec lo = safe_lo, hi = safe_hi;
    if (round == 0) {
      if (opts.warm_lambda && opts.warm_radius > 0.0 && opts.warm_lambda->size() == k) {
        bool ok = true;
        for (int i = 0; i < k; ++i) {
          lo(i) = std::max(lo(i), (*opts.warm_lambda)(i) - opts.warm_radius);
          hi(i) = std::min(hi(i), (*opts.warm_lambda)(i) + opts.warm_radius);
          ok = ok && hi(i) > lo(i);
        }
        if (!ok) continue;  // degenerate warm box, go straight to the safe one
      } else {
        ++round;  // no warm start: single safe-box round
      }
    }
    const auto result = ellipsoid_minimize(oracle, lo, hi, eopts);
    sol.iterations += result.second.iterations;
    if (certified || best_feasible.size() == 0) continue;
    // the dual point is exactly feasible (slid onto the boundary), so a passing
    // gap here is a valid certificate even if the warm box missed the optimum
    certified = recover();
  }
  if (best_feasible.size() == 0) {
    // never saw a feasible center: certify from the diagonally-dominant corner
    best_feasible = safe_hi;
    best_dual = p_max * safe_hi.sum();
    certified = recover();
  }

  sol.s_e.s = best_s;
  sol.primal_value = best_primal;
  sol.gap = (sol.dual_value - sol.primal_value) / std::max(std::abs(sol.dual_value), 1e-300);
  sol.converged = certified;
  if (!sol.converged && opts.throw_on_fail) throw SdpNonConvergence(sol);
  return sol;
}

// Gaussian randomization toward a rank-one covariance: draws v ~ CN(0, s_opt),
// rescales so the largest diagonal of v v^H hits p_max, and keeps the draw
// with the best Tr(A v v^H). The dominant eigenvector of s_opt is always
// included, so a rank-one input reproduces itself.
inline EnergyCovariance randomize_rank_one(const EnergyCovariance& s_opt, const CMat& a,
                                           double p_max, int n_draws,
                                           std::uint64_t seed = 0x5eedULL) {
  const int k = s_opt.users();
  Eigen::SelfAdjointEigenSolver<CMat> es(s_opt.s);
  if (!(es.eigenvalues().maxCoeff() > 0.0)) return EnergyCovariance::zero(k);
  CMat half = CMat::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    const double ev = std::max(0.0, es.eigenvalues()(i));
    half.col(i) = es.eigenvectors().col(i) * std::sqrt(ev);
  }

  const auto score = [&](const CVec& v, CVec& scaled) -> double {
    double dmax = 0.0;
    for (int i = 0; i < k; ++i) dmax = std::max(dmax, std::norm(v(i)));
    if (!(dmax > 0.0)) return -1.0;
    scaled = v * std::sqrt(p_max / dmax);
    return std::real((scaled.adjoint() * a * scaled)(0, 0));
  };

  CVec best = es.eigenvectors().col(k - 1);
  CVec scaled;
  double best_val = score(best, scaled);
  CVec best_scaled = scaled;

  Cscg rng(seed);
  CVec z(k);
  for (int d = 0; d < n_draws; ++d) {
    for (int i = 0; i < k; ++i) z(i) = rng.standard_complex();
    const CVec v = half * z;
    const double val = score(v, scaled);
    if (val > best_val) {
      best_val = val;
      best_scaled = scaled;
    }
  }
  EnergyCovariance out;
  out.s = best_scaled * best_scaled.adjoint();
  out.s = 0.5 * (out.s + CMat(out.s.adjoint()));
  return out;
}

}  // namespace swipt
