#pragma once

// Critical values for the MD test: BN1 (chi-square-1 with the d = 2
// eligibility conditions), BN2 (two-step simulated), projection, plus the
// naive Wald test and naive parametric bootstrap comparators. The AM
// comparator slot is declared but not implemented.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "mdci/estimate.hpp"
#include "mdci/gfunc.hpp"
#include "mdci/mdstat.hpp"
#include "mdci/prob.hpp"
#include "mdci/rng.hpp"
#include "mdci/types.hpp"

namespace mdci {

struct Bn1Eligibility {
  bool condition_p2 = false;  // curvature small enough
  bool condition_p1 = false;  // rho in [0, 1 - eta]
  bool eligible = false;
  double curvature_lhs = 0.0;
  double eta = 0.0;
  double rho_p = 0.0;
  bool rho_defined = false;
  Vec lambda;
};

// Evaluates the two sufficient conditions for the chi-square-1 critical
// value at the null value tau (g(theta_P) is known under H0). At
// tau = g(theta_star) the curvature condition divides by zero and is false;
// only the rho condition can grant eligibility there.
inline Bn1Eligibility bn1_check(const GFunction& g, const EstimateInput& input, double tau,
                                double alpha, double eta) {
  if (input.d() != 2) throw std::domain_error("bn1_check: d = 2 only");
  const DegeneracyDiagnostics diag = diagnostics(g, input, tau);
  Bn1Eligibility out;
  out.eta = eta;
  out.lambda = diag.lambda;
  out.rho_defined = diag.rho_defined;
  if (!diag.rho_defined) return out;  // coinciding eigenvalues: ineligible
  out.rho_p = diag.rho_p;
  const double c = std::sqrt(chi2_quantile(1, 1.0 - alpha));
  const double gap = std::fabs(tau - g.eval(g.theta_star));
  const double lam_gap = std::fabs(diag.lambda[0] - diag.lambda[1]);
  if (gap > 0.0 && 1.0 + out.rho_p > 0.0) {
    out.curvature_lhs = (1.0 - out.rho_p) * std::sqrt(lam_gap) /
                        (2.0 * input.r_n * std::sqrt(gap * (1.0 + out.rho_p)));
    out.condition_p2 =
        out.curvature_lhs <= 1.0 / c && out.rho_p >= eta - 1.0 && out.rho_p <= 1.0 - eta;
  }
  out.condition_p1 = out.rho_p >= 0.0 && out.rho_p <= 1.0 - eta;
  out.eligible = out.condition_p2 || out.condition_p1;
  return out;
}

struct Bn2Config {
  double alpha = 0.05;
  double eta = 0.005;  // first-step level, alpha/10 by default
  int b_draws = 2000;
  int n_radii = 15;    // polar grid in the z-ball (d = 2)
  int n_angles = 24;
  RngStream seed{20240817, 0};

  static Bn2Config with_alpha(double a, RngStream s, int b = 2000) {
    Bn2Config c;
    c.alpha = a;
    c.eta = a / 10.0;
    c.b_draws = b;
    c.seed = s;
    return c;
  }
};

struct Bn2Diagnostics {
  Vec argmax_h;
  int grid_size = 0;
  int flagged_draws = 0;   // draws where the inner solve fell back to a bound
  double hz_radius_sq = 0.0;
  double quantile_level = 0.0;
};

struct CriticalValue {
  double value = 0.0;
  Method method = Method::Projection;
  std::optional<Bn1Eligibility> eligibility;
  std::optional<Bn2Diagnostics> bn2;
};

inline CriticalValue projection_critical_value(int d, double alpha) {
  CriticalValue cv;
  cv.value = chi2_quantile(d, 1.0 - alpha);
  cv.method = Method::Projection;
  return cv;
}

inline CriticalValue bn1_critical_value(const GFunction& g, const EstimateInput& input, double tau,
                                        double alpha, double eta) {
  CriticalValue cv;
  cv.value = chi2_quantile(1, 1.0 - alpha);
  cv.method = Method::BN1;
  cv.eligibility = bn1_check(g, input, tau, alpha, eta);
  return cv;
}

namespace detail {

// Draw B standard normal vectors conditional on the chi-square ball by
// rejection; acceptance probability is 1 - eta by construction.
inline std::vector<Vec> conditional_ball_draws(int d, double radius_sq, int b, RngStream rng) {
  std::vector<Vec> out;
  out.reserve(b);
  long attempts = 0;
  while (static_cast<int>(out.size()) < b) {
    Vec z = rng.normal_vec(d);
    ++attempts;
    if (dot(z, z) <= radius_sq) out.push_back(std::move(z));
    if (attempts > 1000L * b)
      throw std::runtime_error("bn2: rejection sampling acceptance below 1e-3");
  }
  return out;
}

// z-ball grid: center, then n_radii rings up to and including the boundary.
inline std::vector<Vec> ball_grid(int d, double radius, int n_radii, int n_angles) {
  std::vector<Vec> grid;
  grid.push_back(Vec(d, 0.0));
  if (d == 2) {
    for (int i = 1; i <= n_radii; ++i) {
      const double r = radius * i / n_radii;
      for (int j = 0; j < n_angles; ++j) {
        const double a = 2.0 * 3.14159265358979323846 * j / n_angles;
        grid.push_back(Vec{r * std::cos(a), r * std::sin(a)});
      }
    }
    return grid;
  }
  // d > 2: product grid filtered to the ball, plus the axis boundary points
  const int m = std::max(3, n_radii | 1);
  std::vector<int> idx(d, 0);
  Vec z(d);
  while (true) {
    for (int i = 0; i < d; ++i) z[i] = -radius + 2.0 * radius * idx[i] / (m - 1);
    if (dot(z, z) <= radius * radius && dot(z, z) > 0.0) grid.push_back(z);
    int k = 0;
    while (k < d && ++idx[k] == m) idx[k++] = 0;
    if (k == d) break;
  }
  for (int i = 0; i < d; ++i) {
    Vec e(d, 0.0);
    e[i] = radius;
    grid.push_back(e);
    e[i] = -radius;
    grid.push_back(e);
  }
  return grid;
}

struct Bn2Workspace {
  Vec lambda;          // eigenvalues of S H S
  Mat rot;             // its eigenvectors
  Mat sqrt_sigma;      // S
  Mat inv_sqrt_sigma;  // S^{-1}
  std::vector<Vec> z_rot;  // V' Z_b, shared across all grid h
};

// Conditional quantile of T*(h) over the shared draws. T*(h) reduces to the
// squared distance from V'(Z + S^{-1} h) to {w : sum lam_i w_i^2 = h'Hh}.
inline double bn2_quantile_at_h(const Bn2Workspace& ws, const Mat& hess, const Vec& h,
                                double level, std::vector<double>* work, int* flagged) {
  const double kappa = quad_form(h, hess);
  const Vec vh = matvec(transpose(ws.rot), matvec(ws.inv_sqrt_sigma, h));
  const std::size_t b = ws.z_rot.size();
  const int d = static_cast<int>(vh.size());
  work->resize(b);
  double y[32];
  for (std::size_t i = 0; i < b; ++i) {
    const Vec& z = ws.z_rot[i];
    for (int k = 0; k < d; ++k) y[k] = z[k] + vh[k];
    bool converged = true;
    double t = conic_dist2(ws.lambda.data(), y, d, kappa, &converged);
    if (!converged) {
      // feasible upper bound at t = h, i.e. |Z|^2
      double zz = 0.0;
      for (int k = 0; k < d; ++k) zz += z[k] * z[k];
      t = std::min(t, zz);
      ++(*flagged);
    }
    (*work)[i] = t;
  }
  return empirical_quantile(*work, level);
}

}  // namespace detail

// Two-step simulated critical value: a (1 - eta) confidence set for the
// local parameter h, then the sup over it of the conditional
// (1-alpha)/(1-eta) quantile of the approximated statistic T*(h). The same
// conditional draws are reused across the grid (common random numbers) so
// the sup is not noise-inflated and is reproducible.
inline CriticalValue bn2_critical_value(const GFunction& g, const EstimateInput& input,
                                        const Bn2Config& cfg) {
  const int d = input.d();
  if (!(cfg.eta > 0.0 && cfg.eta < cfg.alpha && cfg.alpha < 1.0))
    throw std::domain_error("bn2: need 0 < eta < alpha < 1");
  if (cfg.b_draws < 500) throw std::domain_error("bn2: b_draws must be at least 500");
  const Mat hess = g.hess(g.theta_star);
  {
    const SymEig eh = sym_eig(hess);
    double hmax = 0.0;
    for (double v : eh.values) hmax = std::max(hmax, std::fabs(v));
    for (double v : eh.values)
      if (std::fabs(v) < 1e-12 * hmax)
        throw std::domain_error("bn2: hess(theta_star) must have full rank");
  }

  detail::Bn2Workspace ws;
  ws.sqrt_sigma = matrix_sqrt_spd(input.sigma_hat);
  ws.inv_sqrt_sigma = spd_inverse_sqrt(input.sigma_hat);
  const Mat m = matmul(ws.sqrt_sigma, matmul(hess, ws.sqrt_sigma));
  SymEig em = sym_eig(m);
  ws.lambda = em.values;
  ws.rot = em.vectors;

  const double hz_radius_sq = chi2_quantile(d, 1.0 - cfg.eta);
  const std::vector<Vec> z = detail::conditional_ball_draws(d, hz_radius_sq, cfg.b_draws, cfg.seed);
  ws.z_rot.reserve(z.size());
  const Mat rot_t = transpose(ws.rot);
  for (const auto& zi : z) ws.z_rot.push_back(matvec(rot_t, zi));

  const std::vector<Vec> zgrid =
      detail::ball_grid(d, std::sqrt(hz_radius_sq), cfg.n_radii, cfg.n_angles);
  const Vec hn = input.r_n * (input.theta_hat - g.theta_star);
  const double level = (1.0 - cfg.alpha) / (1.0 - cfg.eta);

  CriticalValue cv;
  cv.method = Method::BN2;
  cv.value = -1.0;
  Bn2Diagnostics diag;
  diag.grid_size = static_cast<int>(zgrid.size());
  diag.hz_radius_sq = hz_radius_sq;
  diag.quantile_level = level;
  std::vector<double> work;
  for (const auto& zg : zgrid) {
    const Vec h = hn - matvec(ws.sqrt_sigma, zg);
    const double q = detail::bn2_quantile_at_h(ws, hess, h, level, &work, &diag.flagged_draws);
    if (q > cv.value) {
      cv.value = q;
      diag.argmax_h = h;
    }
  }
  cv.bn2 = diag;
  return cv;
}

// Naive delta-method Wald test; degenerate gradient at theta_hat is reported
// and the decision defaults to no-reject with the flag set.
inline TestDecision wald_test(const GFunction& g, const EstimateInput& input, double tau,
                              double alpha) {
  TestDecision td;
  td.method = Method::Wald;
  td.critical_value = chi2_quantile(1, 1.0 - alpha);
  const Vec gr = g.grad(input.theta_hat);
  const double var = quad_form(gr, input.sigma_hat);
  if (norm2(gr) < 1e-12) {
    td.degenerate_gradient = true;
    td.reject = false;
    td.note = "gradient at theta_hat is numerically zero; Wald statistic undefined";
    return td;
  }
  const double diff = g.eval(input.theta_hat) - tau;
  td.statistic = input.r_n * input.r_n * diff * diff / var;
  td.reject = td.statistic > td.critical_value;
  return td;
}

// Percentile bootstrap from the estimated sampling law of theta_hat.
inline ConfidenceInterval naive_bootstrap_interval(const GFunction& g, const EstimateInput& input,
                                                   double alpha, int b, RngStream rng) {
  if (b < 500) throw std::domain_error("naive_bootstrap_interval: b must be at least 500");
  const Mat l = cholesky(input.sigma_hat);
  const int d = input.d();
  std::vector<double> gs(b);
  Vec theta(d);
  for (int i = 0; i < b; ++i) {
    const Vec z = rng.normal_vec(d);
    const Vec lz = matvec(l, z);
    for (int k = 0; k < d; ++k) theta[k] = input.theta_hat[k] + lz[k] / input.r_n;
    gs[i] = g.eval(theta);
  }
  ConfidenceInterval ci;
  ci.method = Method::NaiveBoot;
  ci.level = 1.0 - alpha;
  ci.point_estimate = g.eval(input.theta_hat);
  ci.lower = empirical_quantile(gs, alpha / 2.0);
  ci.upper = empirical_quantile(gs, 1.0 - alpha / 2.0);
  return ci;
}

inline CriticalValue am_critical_value(const GFunction&, const EstimateInput&, double) {
  throw not_implemented_error(
      "AM comparator: external algorithm not implemented; use Projection as the conservative "
      "stand-in");
}

}  // namespace mdci
