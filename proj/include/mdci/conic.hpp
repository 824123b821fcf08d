#pragma once

// Nearest point on the quadric {u : sum_i lam_i u_i^2 = kappa} to a point y.
//
// Stationary points satisfy u = (I + mu*Lam)^{-1} y with the secular equation
// f(mu) = sum_i lam_i y_i^2 / (1 + mu lam_i)^2 = kappa. On the interval where
// I + mu*Lam is positive semidefinite, f is strictly decreasing from +inf to
// -inf (indefinite Lam), so it has exactly one root there, and a KKT point
// with I + mu*Lam >= 0 is a global minimizer: for any feasible u,
//   |y-u|^2 - |y-u*|^2 = (u-u*)'(I+mu*Lam)(u-u*) >= 0.
// When the y-component at the binding eigenvalue vanishes the root escapes to
// the pole (hard case); the solution then carries free mass on that
// eigenspace, which is where symmetric ties come from.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mdci/errors.hpp"
#include "mdci/linalg.hpp"

namespace mdci {

struct ConicProjection {
  double dist2 = 0.0;
  Vec u;
  bool tie = false;
  Vec u_alt;        // second global minimizer when tie
  bool converged = true;
  bool hard_case = false;
  double mu = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline double conic_f(const Vec& lam, const Vec& y, double kappa, double mu) {
  double s = 0.0;
  for (std::size_t i = 0; i < lam.size(); ++i) {
    const double den = 1.0 + mu * lam[i];
    s += lam[i] * y[i] * y[i] / (den * den);
  }
  return s - kappa;
}

inline double conic_fprime(const Vec& lam, const Vec& y, double mu) {
  double s = 0.0;
  for (std::size_t i = 0; i < lam.size(); ++i) {
    const double den = 1.0 + mu * lam[i];
    s += -2.0 * lam[i] * lam[i] * y[i] * y[i] / (den * den * den);
  }
  return s;
}

inline ConicProjection conic_from_mu(const Vec& lam, const Vec& y, double mu) {
  ConicProjection p;
  p.mu = mu;
  p.u.resize(y.size());
  p.dist2 = 0.0;
  for (std::size_t i = 0; i < lam.size(); ++i) {
    p.u[i] = y[i] / (1.0 + mu * lam[i]);
    const double d = y[i] - p.u[i];
    p.dist2 += d * d;
  }
  return p;
}

// Solution pinned at the pole mu = -1/lam_star: components off the binding
// eigenspace follow the secular formula, the remaining constraint mass sits
// on the binding eigenspace aligned with y there. A markedly negative mass
// budget means this pole is not the binding one; the candidate is reported
// unusable (dist2 infinite) so the caller keeps the other end.
inline ConicProjection conic_hard_case(const Vec& lam, const Vec& y, double kappa,
                                       double lam_star) {
  const std::size_t n = lam.size();
  const double p = -1.0 / lam_star;
  ConicProjection out;
  out.hard_case = true;
  out.mu = p;
  out.u.assign(n, 0.0);
  std::vector<bool> binding(n, false);
  double resid = kappa, ynorm_bind2 = 0.0;
  std::size_t istar = 0;
  double ymax = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::fabs(lam[i] - lam_star) <= 1e-12 * std::fabs(lam_star)) {
      binding[i] = true;
      ynorm_bind2 += y[i] * y[i];
      if (std::fabs(y[i]) > ymax) {
        ymax = std::fabs(y[i]);
        istar = i;
      }
    } else {
      out.u[i] = y[i] / (1.0 + p * lam[i]);
      resid -= lam[i] * out.u[i] * out.u[i];
    }
  }
  double s2 = resid / lam_star;
  if (s2 < -1e-10 * (std::fabs(kappa) + 1.0)) {
    out.dist2 = std::numeric_limits<double>::infinity();
    return out;
  }
  if (s2 < 0.0) s2 = 0.0;
  const double s = std::sqrt(s2);
  const double ybind = std::sqrt(ynorm_bind2);
  out.dist2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (binding[i]) continue;
    const double d = y[i] - out.u[i];
    out.dist2 += d * d;
  }
  if (ybind > 0.0) {
    // spread the mass along y within the binding eigenspace
    for (std::size_t i = 0; i < n; ++i)
      if (binding[i]) out.u[i] = s * y[i] / ybind;
    out.dist2 += (ybind - s) * (ybind - s);
  } else {
    out.u[istar] = s;
    out.dist2 += s2;
  }
  // Mirrored copy is equally good when y carries (numerically) no signal on
  // the binding eigenspace; thresholds mirror the branch-tie definition.
  if (s > 5e-4 && 4.0 * ybind * s < 1e-7) {
    out.tie = true;
    out.u_alt = out.u;
    for (std::size_t i = 0; i < n; ++i)
      if (binding[i]) out.u_alt[i] = -out.u_alt[i];
  }
  return out;
}

// Value-only variant for hot loops: no minimizer, no heap allocation.
// Same cases as conic_nearest; d is capped at 32.
inline double conic_dist2(const double* lam_in, const double* y, int d, double kappa,
                          bool* converged_out = nullptr) {
  double lam_buf[32];
  double lmax = lam_in[0], lmin = lam_in[0], labs = 0.0;
  for (int i = 0; i < d; ++i) {
    lam_buf[i] = lam_in[i];
    lmax = std::max(lmax, lam_in[i]);
    lmin = std::min(lmin, lam_in[i]);
    labs = std::max(labs, std::fabs(lam_in[i]));
  }
  if (converged_out) *converged_out = true;
  if (lmax < 0.0) {
    for (int i = 0; i < d; ++i) lam_buf[i] = -lam_buf[i];
    kappa = -kappa;
    const double t = lmax;
    lmax = -lmin;
    lmin = -t;
  }
  const double* lam = lam_buf;

  auto f = [&](double mu) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
      const double den = 1.0 + mu * lam[i];
      s += lam[i] * y[i] * y[i] / (den * den);
    }
    return s - kappa;
  };
  auto fp = [&](double mu) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
      const double den = 1.0 + mu * lam[i];
      s += -2.0 * lam[i] * lam[i] * y[i] * y[i] / (den * den * den);
    }
    return s;
  };
  auto hard_case = [&](double lam_star) {
    const double p = -1.0 / lam_star;
    double resid = kappa, ybind2 = 0.0, dist2 = 0.0;
    for (int i = 0; i < d; ++i) {
      if (std::fabs(lam[i] - lam_star) <= 1e-12 * std::fabs(lam_star)) {
        ybind2 += y[i] * y[i];
      } else {
        const double u = y[i] / (1.0 + p * lam[i]);
        resid -= lam[i] * u * u;
        const double dd = y[i] - u;
        dist2 += dd * dd;
      }
    }
    double s2 = resid / lam_star;
    if (s2 < -1e-10 * (std::fabs(kappa) + 1.0))  // not the binding pole
      return std::numeric_limits<double>::infinity();
    if (s2 < 0.0) s2 = 0.0;
    const double diff = std::sqrt(ybind2) - std::sqrt(s2);
    return dist2 + diff * diff;
  };

  if (lmax - lmin <= 1e-14 * labs) {  // sphere
    const double ratio = kappa / lmax;
    if (ratio < 0.0) throw infeasible_error("conic_dist2: empty level set (sphere)");
    double ny2 = 0.0;
    for (int i = 0; i < d; ++i) ny2 += y[i] * y[i];
    const double diff = std::sqrt(ny2) - std::sqrt(ratio);
    return diff * diff;
  }
  if (lmin > 0.0) {
    if (kappa < 0.0) throw infeasible_error("conic_dist2: empty level set (definite form)");
    if (kappa == 0.0) {
      double s = 0.0;
      for (int i = 0; i < d; ++i) s += y[i] * y[i];
      return s;
    }
  }

  const double p_lo = -1.0 / lmax;
  const bool hi_finite = lmin < 0.0;
  const double p_hi = hi_finite ? -1.0 / lmin : 0.0;

  double lo, hi;
  {
    double delta = 0.25 * (hi_finite ? (p_hi - p_lo) : std::max(1.0, std::fabs(p_lo)));
    while (f(p_lo + delta) < 0.0) {
      delta *= 0.01;
      if (delta < 1e-13 * (1.0 + std::fabs(p_lo))) {
        double best = hard_case(lmax);
        if (hi_finite) best = std::min(best, hard_case(lmin));
        return best;
      }
    }
    lo = p_lo + delta;
  }
  if (hi_finite) {
    double delta = 0.25 * (p_hi - p_lo);
    while (f(p_hi - delta) > 0.0) {
      delta *= 0.01;
      if (delta < 1e-13 * (1.0 + std::fabs(p_hi))) return hard_case(lmin);
    }
    hi = p_hi - delta;
  } else {
    hi = std::max(1.0, 2.0 * std::fabs(p_lo));
    while (f(hi) > 0.0 && hi < 1e100) hi *= 4.0;
  }

  double mu = 0.5 * (lo + hi);
  const double fscale = std::fabs(kappa) + std::fabs(f(mu) + kappa) + 1e-300;
  bool converged = false;
  for (int it = 0; it < 200; ++it) {
    const double fv = f(mu);
    if (std::fabs(fv) <= 1e-13 * fscale) {
      converged = true;
      break;
    }
    if (fv > 0.0)
      lo = mu;
    else
      hi = mu;
    const double d1 = fp(mu);
    double next = (d1 < 0.0) ? mu - fv / d1 : std::numeric_limits<double>::quiet_NaN();
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - mu) <= 1e-16 * (1.0 + std::fabs(mu))) {
      mu = next;
      converged = true;
      break;
    }
    mu = next;
  }
  if (converged_out) *converged_out = converged;
  double dist2 = 0.0;
  for (int i = 0; i < d; ++i) {
    const double u = y[i] / (1.0 + mu * lam[i]);
    const double dd = y[i] - u;
    dist2 += dd * dd;
  }
  return dist2;
}

}  // namespace detail

inline ConicProjection conic_nearest(const Vec& lam_in, const Vec& y_in, double kappa_in) {
  Vec lam = lam_in;
  Vec y = y_in;
  double kappa = kappa_in;
  const std::size_t n = lam.size();
  double lmax = lam[0], lmin = lam[0], labs = 0.0;
  for (double l : lam) {
    lmax = std::max(lmax, l);
    lmin = std::min(lmin, l);
    labs = std::max(labs, std::fabs(l));
  }
  if (labs == 0.0) throw std::domain_error("conic_nearest: zero quadratic form");
  for (double l : lam)
    if (std::fabs(l) < 1e-13 * labs)
      throw std::domain_error("conic_nearest: quadratic form numerically singular");
  if (lmax < 0.0) {
    for (auto& l : lam) l = -l;
    kappa = -kappa;
    std::swap(lmax, lmin);
    lmax = -lmax;
    lmin = -lmin;
  }

  // sphere: all eigenvalues equal
  if (lmax - lmin <= 1e-14 * labs) {
    const double ratio = kappa / lmax;
    if (ratio < 0.0) throw infeasible_error("conic_nearest: empty level set (sphere)");
    const double radius = std::sqrt(ratio);
    const double ny = norm2(y);
    ConicProjection p;
    if (ny > 1e-300) {
      p.u = (radius / ny) * y;
      p.dist2 = (ny - radius) * (ny - radius);
    } else {
      p.u.assign(n, 0.0);
      p.u[0] = radius;
      p.dist2 = radius * radius;
      if (radius > 5e-4) {
        p.tie = true;
        p.u_alt = p.u;
        p.u_alt[0] = -radius;
      }
    }
    return p;
  }

  if (lmin > 0.0) {  // ellipsoid family
    if (kappa < 0.0) throw infeasible_error("conic_nearest: empty level set (definite form)");
    if (kappa == 0.0) {
      ConicProjection p;
      p.u.assign(n, 0.0);
      p.dist2 = dot(y, y);
      p.mu = 0.0;
      return p;
    }
  }

  const double p_lo = -1.0 / lmax;
  const bool hi_finite = lmin < 0.0;
  const double p_hi = hi_finite ? -1.0 / lmin : std::numeric_limits<double>::infinity();
  const double span = std::max({1.0, std::fabs(p_lo), hi_finite ? std::fabs(p_hi) : 0.0});

  // bracket with f(lo) >= 0 >= f(hi); failure to blow up at a pole is the hard case
  double lo = 0.0, hi = 0.0;
  bool hard_lo = false, hard_hi = false;
  {
    double delta = 0.25 * (hi_finite ? (p_hi - p_lo) : span);
    while (detail::conic_f(lam, y, kappa, p_lo + delta) < 0.0) {
      delta *= 0.01;
      if (delta < 1e-13 * (1.0 + std::fabs(p_lo))) {
        hard_lo = true;
        break;
      }
    }
    lo = p_lo + delta;
  }
  if (hi_finite) {
    double delta = 0.25 * (p_hi - p_lo);
    while (detail::conic_f(lam, y, kappa, p_hi - delta) > 0.0) {
      delta *= 0.01;
      if (delta < 1e-13 * (1.0 + std::fabs(p_hi))) {
        hard_hi = true;
        break;
      }
    }
    hi = p_hi - delta;
  } else {
    hi = std::max(1.0, 2.0 * std::fabs(p_lo));
    while (detail::conic_f(lam, y, kappa, hi) > 0.0 && hi < 1e100) hi *= 4.0;
    if (detail::conic_f(lam, y, kappa, hi) > 0.0) hard_hi = true;  // cannot happen for kappa > 0
  }

  if (hard_lo || hard_hi) {
    ConicProjection best;
    bool have = false;
    if (hard_lo) {
      best = detail::conic_hard_case(lam, y, kappa, lmax);
      have = true;
    }
    if (hard_hi && hi_finite) {
      ConicProjection c = detail::conic_hard_case(lam, y, kappa, lmin);
      if (!have || c.dist2 < best.dist2) best = c;
    }
    return best;
  }

  // safeguarded Newton on the bracket
  double flo = detail::conic_f(lam, y, kappa, lo);
  double fhi = detail::conic_f(lam, y, kappa, hi);
  if (flo < 0.0 || fhi > 0.0) {
    // bracket construction failed numerically; fall back to pure bisection on
    // a widened bracket
    lo = p_lo + 1e-13 * (1.0 + std::fabs(p_lo));
    hi = hi_finite ? p_hi - 1e-13 * (1.0 + std::fabs(p_hi)) : hi;
  }
  double mu = 0.5 * (lo + hi);
  if (!(mu > lo && mu < hi)) mu = lo;
  const double fscale = std::fabs(kappa) + std::fabs(detail::conic_f(lam, y, 0.0, mu)) + 1e-300;
  bool converged = false;
  for (int it = 0; it < 200; ++it) {
    const double f = detail::conic_f(lam, y, kappa, mu);
    if (std::fabs(f) <= 1e-13 * fscale) {
      converged = true;
      break;
    }
    if (f > 0.0)
      lo = mu;
    else
      hi = mu;
    const double fp = detail::conic_fprime(lam, y, mu);
    double next = (fp < 0.0) ? mu - f / fp : std::numeric_limits<double>::quiet_NaN();
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - mu) <= 1e-16 * (1.0 + std::fabs(mu))) {
      mu = next;
      converged = true;
      break;
    }
    mu = next;
  }
  ConicProjection p = detail::conic_from_mu(lam, y, mu);
  p.converged = converged;
  return p;
}

// All stationary candidates: the global minimizer plus roots of the secular
// equation on the other pole segments (other-branch local minima and
// saddles). Used for branch-tie detection; not needed when only the value
// matters.
inline std::vector<ConicProjection> conic_stationary_candidates(const Vec& lam, const Vec& y,
                                                                double kappa) {
  std::vector<ConicProjection> out;
  out.push_back(conic_nearest(lam, y, kappa));

  std::vector<double> poles;
  for (double l : lam)
    if (l != 0.0) poles.push_back(-1.0 / l);
  std::sort(poles.begin(), poles.end());
  poles.erase(std::unique(poles.begin(), poles.end(),
                          [](double a, double b) { return std::fabs(a - b) <= 1e-14 * (std::fabs(a) + 1.0); }),
              poles.end());
  double span = 1.0;
  for (double p : poles) span = std::max(span, std::fabs(p));

  auto scan_interval = [&](double a, double b) {
    const int kProbes = 48;
    double prev_mu = 0.0, prev_f = 0.0;
    for (int k = 0; k < kProbes; ++k) {
      const double mu = a + (b - a) * (static_cast<double>(k) + 0.5) / kProbes;
      const double f = detail::conic_f(lam, y, kappa, mu);
      if (k > 0 && (prev_f > 0.0) != (f > 0.0)) {
        double lo = prev_mu, hi = mu, flo = prev_f;
        for (int it = 0; it < 120; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double fm = detail::conic_f(lam, y, kappa, mid);
          if ((flo > 0.0) == (fm > 0.0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        out.push_back(detail::conic_from_mu(lam, y, 0.5 * (lo + hi)));
      }
      prev_mu = mu;
      prev_f = f;
    }
  };

  const double eps = 1e-9;
  if (!poles.empty()) {
    scan_interval(poles.front() - 64.0 * span, poles.front() - eps * span);
    for (std::size_t k = 0; k + 1 < poles.size(); ++k) {
      const double w = poles[k + 1] - poles[k];
      scan_interval(poles[k] + eps * w, poles[k + 1] - eps * w);
    }
    scan_interval(poles.back() + eps * span, poles.back() + 64.0 * span);
  }
  return out;
}

}  // namespace mdci
