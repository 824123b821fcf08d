#pragma once

// Minimum-distance statistic T_n(tau) = inf over {g(theta) = tau} of
// r_n^2 (theta_hat - theta)' Sigma^{-1} (theta_hat - theta).
//
// Three solver routes:
//   * quadratic g (theta' Q theta, theta_star = 0): whiten, diagonalize and
//     project exactly onto the level set (conic.hpp);
//   * d = 1: enumerate the roots of g(theta) = tau;
//   * generic g: KKT system solved by damped Newton from multistart seeds
//     placed along the eigenvectors of the standardized Hessian.
// A brute-force grid oracle (d = 2) upper-bounds the infimum for testing.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "mdci/conic.hpp"
#include "mdci/errors.hpp"
#include "mdci/estimate.hpp"
#include "mdci/gfunc.hpp"
#include "mdci/linalg.hpp"

namespace mdci {

struct SolverOptions {
  double constraint_tol = 1e-9;    // scaled by (1 + |tau|)
  double statistic_rel_tol = 1e-8;
  int multistart_seeds = 8;
  double search_half_width_sigmas = 8.0;
  int max_newton_iter = 100;
  bool detect_ties = true;  // off in hot loops where only the value matters
};

struct MdResult {
  double statistic = 0.0;
  Vec minimizer;
  bool converged = true;
  bool branch_tie = false;
  Vec minimizer_alt;  // populated when branch_tie
  double constraint_residual = 0.0;
};

namespace detail {

struct WhitenedQuad {
  Mat sqrt_sigma;      // Sigma^{1/2}
  Mat inv_sqrt_sigma;  // Sigma^{-1/2}
  Vec lambda;          // eigenvalues of Sigma^{1/2} Q Sigma^{1/2}
  Mat rot;             // eigenvectors (columns)
};

inline WhitenedQuad whiten_quadratic(const Mat& q, const Mat& sigma) {
  WhitenedQuad w;
  w.sqrt_sigma = matrix_sqrt_spd(sigma);
  w.inv_sqrt_sigma = spd_inverse_sqrt(sigma);
  const Mat m = matmul(w.sqrt_sigma, matmul(q, w.sqrt_sigma));
  SymEig e = sym_eig(m);
  w.lambda = e.values;
  w.rot = e.vectors;
  return w;
}

inline Vec to_rotated(const WhitenedQuad& w, const Vec& theta) {
  return matvec(transpose(w.rot), matvec(w.inv_sqrt_sigma, theta));
}

inline Vec from_rotated(const WhitenedQuad& w, const Vec& u) {
  return matvec(w.sqrt_sigma, matvec(w.rot, u));
}

inline MdResult md_quadratic(const GFunction& g, const EstimateInput& input, double tau,
                             const SolverOptions& opts) {
  const WhitenedQuad w = whiten_quadratic(*g.quad, input.sigma_hat);
  const Vec y = to_rotated(w, input.theta_hat);
  MdResult out;
  if (opts.detect_ties) {
    auto cands = conic_stationary_candidates(w.lambda, y, tau);
    const ConicProjection* best = &cands.front();
    for (const auto& c : cands)
      if (c.dist2 < best->dist2) best = &c;
    out.statistic = input.r_n * input.r_n * best->dist2;
    out.minimizer = from_rotated(w, best->u);
    out.converged = best->converged;
    if (best->tie) {
      out.branch_tie = true;
      out.minimizer_alt = from_rotated(w, best->u_alt);
    } else {
      for (const auto& c : cands) {
        if (&c == best) continue;
        const double gap = input.r_n * input.r_n * (c.dist2 - best->dist2);
        Vec loc = c.u - best->u;
        if (gap < 1e-7 && norm2(loc) > 1e-3) {
          out.branch_tie = true;
          out.minimizer_alt = from_rotated(w, c.u);
          break;
        }
      }
    }
  } else {
    const ConicProjection p = conic_nearest(w.lambda, y, tau);
    out.statistic = input.r_n * input.r_n * p.dist2;
    out.minimizer = from_rotated(w, p.u);
    out.converged = p.converged;
    out.branch_tie = p.tie;
    if (p.tie) out.minimizer_alt = from_rotated(w, p.u_alt);
  }
  out.constraint_residual = g.eval(out.minimizer) - tau;
  return out;
}

inline MdResult md_scalar(const GFunction& g, const EstimateInput& input, double tau,
                          const SolverOptions& opts) {
  const double sigma = std::sqrt(input.sigma_hat(0, 0));
  const double width = opts.search_half_width_sigmas * sigma / input.r_n;
  const double lo = std::min(input.theta_hat[0], g.theta_star[0]) - width;
  const double hi = std::max(input.theta_hat[0], g.theta_star[0]) + width;
  const int n = 4001;
  auto f = [&](double t) { return g.eval(Vec{t}) - tau; };
  std::vector<double> roots;
  double prev = f(lo);
  if (prev == 0.0) roots.push_back(lo);
  for (int i = 1; i < n; ++i) {
    const double x = lo + (hi - lo) * i / (n - 1);
    const double fx = f(x);
    if (fx == 0.0) {
      roots.push_back(x);
    } else if ((prev < 0.0) != (fx < 0.0)) {
      double a = lo + (hi - lo) * (i - 1) / (n - 1), b = x;
      double fa = prev;
      for (int it = 0; it < 120; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if ((fa < 0.0) == (fm < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    prev = fx;
  }
  if (roots.empty())
    throw infeasible_error("md_statistic: no point with g = tau in the search region");
  MdResult out;
  out.statistic = std::numeric_limits<double>::infinity();
  double second = std::numeric_limits<double>::infinity();
  double second_loc = 0.0;
  for (double rt : roots) {
    const double d = input.theta_hat[0] - rt;
    const double s = input.r_n * input.r_n * d * d / input.sigma_hat(0, 0);
    if (s < out.statistic) {
      second = out.statistic;
      second_loc = out.minimizer.empty() ? 0.0 : out.minimizer[0];
      out.statistic = s;
      out.minimizer = Vec{rt};
    } else if (s < second) {
      second = s;
      second_loc = rt;
    }
  }
  if (opts.detect_ties && second - out.statistic < 1e-7 &&
      std::fabs(second_loc - out.minimizer[0]) > 1e-3) {
    out.branch_tie = true;
    out.minimizer_alt = Vec{second_loc};
  }
  out.constraint_residual = g.eval(out.minimizer) - tau;
  return out;
}

// Move theta along direction dir until g(theta) = tau; bounded bisection
// after a coarse sign-change scan.
inline bool project_to_level(const GFunction& g, double tau, const Vec& start, const Vec& dir,
                             double t_max, Vec* out) {
  auto phi = [&](double t) {
    Vec p = start + t * dir;
    return g.eval(p) - tau;
  };
  const int n = 65;
  double prev = phi(0.0);
  for (int i = 1; i < n; ++i) {
    const double t = t_max * i / (n - 1);
    const double ft = phi(t);
    if ((prev < 0.0) != (ft < 0.0) || ft == 0.0) {
      double a = t_max * (i - 1) / (n - 1), b = t, fa = prev;
      for (int it = 0; it < 100; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = phi(m);
        if ((fa < 0.0) == (fm < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      *out = start + (0.5 * (a + b)) * dir;
      return true;
    }
    prev = ft;
  }
  return false;
}

struct KktPoint {
  Vec theta;
  double objective;
  bool converged;
};

inline bool kkt_newton(const GFunction& g, const EstimateInput& input, double tau,
                       const Mat& sigma_inv, const SolverOptions& opts, Vec theta,
                       KktPoint* out) {
  const int d = input.d();
  const double rn2 = input.r_n * input.r_n;
  auto objective = [&](const Vec& t) {
    Vec diff = input.theta_hat - t;
    return rn2 * quad_form(diff, sigma_inv);
  };
  // initial multiplier from least squares on the stationarity equation
  Vec gr = g.grad(theta);
  Vec diff = theta - input.theta_hat;
  Vec od = 2.0 * rn2 * matvec(sigma_inv, diff);
  double mu = dot(gr, gr) > 1e-30 ? -dot(od, gr) / dot(gr, gr) : 0.0;

  auto residual = [&](const Vec& t, double m, Vec* r) {
    Vec grt = g.grad(t);
    Vec df = t - input.theta_hat;
    Vec station = 2.0 * rn2 * matvec(sigma_inv, df) + m * grt;
    r->assign(d + 1, 0.0);
    for (int i = 0; i < d; ++i) (*r)[i] = station[i];
    (*r)[d] = g.eval(t) - tau;
  };

  Vec r;
  residual(theta, mu, &r);
  double rnorm = norm2(r);
  const double rscale = 1.0 + rn2 * max_abs(sigma_inv) * (1.0 + norm2(input.theta_hat));
  bool converged = false;
  for (int it = 0; it < opts.max_newton_iter; ++it) {
    if (rnorm <= 1e-11 * rscale) {
      converged = true;
      break;
    }
    // Jacobian of the KKT system
    Mat jac(d + 1, d + 1);
    const Mat he = g.hess(theta);
    Vec grt = g.grad(theta);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) jac(i, j) = 2.0 * rn2 * sigma_inv(i, j) + mu * he(i, j);
      jac(i, d) = grt[i];
      jac(d, i) = grt[i];
    }
    jac(d, d) = 0.0;
    // solve jac * delta = -r by Gaussian elimination with partial pivoting
    Mat a = jac;
    Vec b(d + 1);
    for (int i = 0; i <= d; ++i) b[i] = -r[i];
    bool singular = false;
    for (int col = 0; col <= d; ++col) {
      int piv = col;
      for (int i = col + 1; i <= d; ++i)
        if (std::fabs(a(i, col)) > std::fabs(a(piv, col))) piv = i;
      if (std::fabs(a(piv, col)) < 1e-14 * (1.0 + max_abs(jac))) {
        singular = true;
        break;
      }
      if (piv != col) {
        for (int j = 0; j <= d; ++j) std::swap(a(col, j), a(piv, j));
        std::swap(b[col], b[piv]);
      }
      for (int i = col + 1; i <= d; ++i) {
        const double f = a(i, col) / a(col, col);
        for (int j = col; j <= d; ++j) a(i, j) -= f * a(col, j);
        b[i] -= f * b[col];
      }
    }
    if (singular) break;
    Vec delta(d + 1);
    for (int i = d; i >= 0; --i) {
      double s = b[i];
      for (int j = i + 1; j <= d; ++j) s -= a(i, j) * delta[j];
      delta[i] = s / a(i, i);
    }
    // backtracking on the residual norm
    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 30; ++bt) {
      Vec tn(d);
      for (int i = 0; i < d; ++i) tn[i] = theta[i] + alpha * delta[i];
      const double mn = mu + alpha * delta[d];
      Vec rn;
      residual(tn, mn, &rn);
      const double nn = norm2(rn);
      if (nn < rnorm * (1.0 - 1e-4 * alpha)) {
        theta = tn;
        mu = mn;
        r = rn;
        rnorm = nn;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }
  const double feas_tol = opts.constraint_tol * (1.0 + std::fabs(tau));
  if (std::fabs(g.eval(theta) - tau) > 1e3 * feas_tol && !converged) return false;
  out->theta = theta;
  out->objective = objective(theta);
  out->converged = converged && std::fabs(g.eval(theta) - tau) <= feas_tol;
  return true;
}

inline MdResult md_generic(const GFunction& g, const EstimateInput& input, double tau,
                           const SolverOptions& opts) {
  const int d = input.d();
  const Mat sigma_inv = spd_inverse(input.sigma_hat);
  const SymEig esig = sym_eig(input.sigma_hat);
  const double sigma_scale = std::sqrt(esig.values.front());
  const double box = opts.search_half_width_sigmas * sigma_scale / input.r_n;

  // seeds along the eigenvectors of the standardized Hessian, both signs
  const WhitenedQuad w = whiten_quadratic(g.hess(g.theta_star), input.sigma_hat);
  std::vector<Vec> starts;
  starts.push_back(input.theta_hat);
  starts.push_back(g.theta_star);
  for (int k = 0; k < d && static_cast<int>(starts.size()) < opts.multistart_seeds; ++k) {
    Vec dir(d);
    for (int i = 0; i < d; ++i) dir[i] = w.rot(i, k);
    Vec dtheta = matvec(w.sqrt_sigma, dir);
    const double nd = norm2(dtheta);
    if (nd < 1e-14) continue;
    dtheta = (1.0 / nd) * dtheta;
    for (double s : {1.0, -1.0}) {
      Vec seed = input.theta_hat + (0.35 * box * s) * dtheta;
      starts.push_back(seed);
      if (static_cast<int>(starts.size()) >= opts.multistart_seeds) break;
    }
  }

  std::vector<KktPoint> found;
  for (const auto& s0 : starts) {
    Vec dir = g.grad(s0);
    if (norm2(dir) < 1e-12) {
      dir.assign(d, 0.0);
      dir[0] = 1.0;
    } else {
      dir = (1.0 / norm2(dir)) * dir;
    }
    Vec feas;
    bool have = false;
    for (double sgn : {1.0, -1.0}) {
      Vec sd = sgn * dir;
      if (project_to_level(g, tau, s0, sd, 2.0 * box, &feas)) {
        have = true;
        break;
      }
    }
    if (!have) continue;
    KktPoint kp;
    if (kkt_newton(g, input, tau, sigma_inv, opts, feas, &kp)) found.push_back(kp);
  }
  if (found.empty())
    throw infeasible_error("md_statistic: no point with g = tau found in the search region");

  const KktPoint* best = &found.front();
  for (const auto& k : found)
    if (k.objective < best->objective) best = &k;
  MdResult out;
  out.statistic = best->objective;
  out.minimizer = best->theta;
  out.converged = best->converged;
  out.constraint_residual = g.eval(best->theta) - tau;
  if (opts.detect_ties) {
    for (const auto& k : found) {
      if (&k == best) continue;
      Vec loc = k.theta - best->theta;
      if (k.objective - best->objective < 1e-7 && norm2(loc) > 1e-3) {
        out.branch_tie = true;
        out.minimizer_alt = k.theta;
        break;
      }
    }
  }
  return out;
}

}  // namespace detail

inline MdResult md_statistic(const GFunction& g, const EstimateInput& input, double tau,
                             const SolverOptions& opts = {}) {
  if (g.dim() != input.d())
    throw std::domain_error("md_statistic: dimension mismatch between g and input");
  if (g.quad && norm2(g.theta_star) == 0.0) return detail::md_quadratic(g, input, tau, opts);
  if (input.d() == 1) return detail::md_scalar(g, input, tau, opts);
  return detail::md_generic(g, input, tau, opts);
}

struct GridSpec {
  double half_width_sigmas = 6.0;
  int n_per_axis = 2001;
  double band = 0.0;  // 0: choose from the sampled gradient scale
};

// d = 2 only. Minimum over feasible-band grid points polished onto the null
// by a 1-d Newton along the steeper coordinate; upper-bounds the true inf.
inline double md_statistic_grid_oracle(const GFunction& g, const EstimateInput& input, double tau,
                                       const GridSpec& spec = {}) {
  if (input.d() != 2 || g.dim() != 2)
    throw std::domain_error("md_statistic_grid_oracle: d = 2 only");
  const SymEig esig = sym_eig(input.sigma_hat);
  const double half = spec.half_width_sigmas * std::sqrt(esig.values.front()) / input.r_n;
  const int n = spec.n_per_axis;
  const double cell = 2.0 * half / (n - 1);
  const Mat sigma_inv = spd_inverse(input.sigma_hat);
  const double rn2 = input.r_n * input.r_n;

  auto objective = [&](const Vec& t) {
    Vec diff = input.theta_hat - t;
    return rn2 * quad_form(diff, sigma_inv);
  };

  double grad_scale = 0.0;
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j) {
      Vec p{input.theta_hat[0] - half + 2.0 * half * i / 31.0,
            input.theta_hat[1] - half + 2.0 * half * j / 31.0};
      grad_scale = std::max(grad_scale, norm2(g.grad(p)));
    }
  const double band = spec.band > 0.0 ? spec.band
                                      : 2.0 * std::max(grad_scale, 1e-8) * cell * std::sqrt(2.0);

  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  Vec p(2);
  for (int i = 0; i < n; ++i) {
    p[0] = input.theta_hat[0] - half + 2.0 * half * i / (n - 1);
    for (int j = 0; j < n; ++j) {
      p[1] = input.theta_hat[1] - half + 2.0 * half * j / (n - 1);
      const double gv = g.eval(p);
      if (std::fabs(gv - tau) > band) continue;
      // polish along the steeper coordinate so the candidate is feasible
      Vec q = p;
      bool feasible = false;
      for (int attempt = 0; attempt < 2 && !feasible; ++attempt) {
        Vec gr = g.grad(q);
        int axis = std::fabs(gr[0]) >= std::fabs(gr[1]) ? 0 : 1;
        if (attempt == 1) axis = 1 - axis;
        Vec t = p;
        for (int it = 0; it < 60; ++it) {
          const double f = g.eval(t) - tau;
          if (std::fabs(f) <= 1e-13 * (1.0 + std::fabs(tau))) {
            feasible = true;
            break;
          }
          const double der = g.grad(t)[axis];
          if (std::fabs(der) < 1e-14) break;
          t[axis] -= f / der;
          if (std::fabs(t[axis] - p[axis]) > 4.0 * band / std::max(grad_scale, 1e-8) + 2.0 * cell)
            break;
        }
        if (feasible) q = t;
      }
      if (!feasible) continue;
      any = true;
      best = std::min(best, objective(q));
    }
  }
  if (!any)
    throw infeasible_error("md_statistic_grid_oracle: no feasible point within the grid band");
  return best;
}

// Remark-style closed form for g(theta) = theta1*theta2 with diagonal Sigma.
// tau = 0 reduces to the smaller squared t-statistic; tau != 0 profiles over
// theta1 with the quartic first-order condition solved per branch.
inline MdResult mediation_closed_form(const Vec& theta_hat, const Mat& sigma, double r_n,
                                      double tau) {
  if (sigma.rows() != 2 || sigma.cols() != 2 || theta_hat.size() != 2)
    throw std::domain_error("mediation_closed_form: 2-dimensional inputs required");
  if (std::fabs(sigma(0, 1)) > 1e-14 * std::max(1.0, max_abs(sigma)) ||
      std::fabs(sigma(1, 0)) > 1e-14 * std::max(1.0, max_abs(sigma)))
    throw std::domain_error("mediation_closed_form: sigma must be diagonal");
  if (sigma(0, 0) <= 0.0 || sigma(1, 1) <= 0.0)
    throw std::domain_error("mediation_closed_form: sigma diagonal must be positive");
  const double s1 = sigma(0, 0), s2 = sigma(1, 1);
  const double rn2 = r_n * r_n;
  const double t1 = theta_hat[0], t2 = theta_hat[1];
  MdResult out;
  if (tau == 0.0) {
    const double a = t1 * t1 / s1, b = t2 * t2 / s2;
    if (a <= b) {
      out.statistic = rn2 * a;
      out.minimizer = {0.0, t2};
      if (rn2 * std::fabs(b - a) < 1e-7 && (std::fabs(t1) > 1e-3 || std::fabs(t2) > 1e-3)) {
        out.branch_tie = true;
        out.minimizer_alt = {t1, 0.0};
      }
    } else {
      out.statistic = rn2 * b;
      out.minimizer = {t1, 0.0};
    }
    return out;
  }
  auto value = [&](double x) {
    const double y = tau / x;
    return rn2 * ((t1 - x) * (t1 - x) / s1 + (t2 - y) * (t2 - y) / s2);
  };
  auto foc = [&](double x) {  // d(value)/dx up to the factor 2 rn2
    const double y = tau / x;
    return (x - t1) / s1 + (t2 - y) * tau / (x * x * s2);
  };
  const double xref = std::max({std::sqrt(std::fabs(tau)), std::fabs(t1), 1e-3});
  double best = std::numeric_limits<double>::infinity(), best_x = 0.0;
  double second = std::numeric_limits<double>::infinity(), second_x = 0.0;
  for (double sgn : {1.0, -1.0}) {
    // bracket the branch minimum on a log scale, then safeguarded Newton on
    // the first-order condition
    const int m = 241;
    double bx = 0.0, bv = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      const double x = sgn * xref * std::pow(10.0, -6.0 + 9.0 * i / (m - 1));
      const double v = value(x);
      if (v < bv) {
        bv = v;
        bx = x;
      }
    }
    double a = bx * std::pow(10.0, -9.0 / (m - 1)), b = bx * std::pow(10.0, 9.0 / (m - 1));
    if (sgn < 0.0) std::swap(a, b);
    double x = bx;
    for (int it = 0; it < 80; ++it) {
      const double f = foc(x);
      const double h = 1e-6 * (std::fabs(x) + 1e-12);
      const double fp = (foc(x + h) - foc(x - h)) / (2.0 * h);
      double xn = fp != 0.0 ? x - f / fp : 0.5 * (a + b);
      if (!(xn > std::min(a, b) && xn < std::max(a, b))) xn = 0.5 * (a + b);
      if (foc(a) * foc(xn) <= 0.0)
        b = xn;
      else
        a = xn;
      if (std::fabs(xn - x) <= 1e-15 * (1.0 + std::fabs(x))) {
        x = xn;
        break;
      }
      x = xn;
    }
    const double v = value(x);
    if (v < best) {
      second = best;
      second_x = best_x;
      best = v;
      best_x = x;
    } else if (v < second) {
      second = v;
      second_x = x;
    }
  }
  out.statistic = best;
  out.minimizer = {best_x, tau / best_x};
  if (second - best < 1e-7 && std::fabs(second_x - best_x) > 1e-3) {
    out.branch_tie = true;
    out.minimizer_alt = {second_x, tau / second_x};
  }
  return out;
}

}  // namespace mdci
