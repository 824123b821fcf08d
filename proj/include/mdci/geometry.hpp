#pragma once

// d = 2 hyperbola geometry for the null (1+rho) x2^2 - (1-rho) x1^2 = tau
// with |rho| < 1, tau >= 0: the two null branches, the c-enlargement
// boundaries traced a distance c along the normal, the kink of the upper
// boundary in the high-curvature regime, and a Monte Carlo / polar-quadrature
// coverage oracle. Membership in the acceptance region is metric
// (dist_to_null <= c), which stays robust at the kink.

#include <array>
#include <atomic>
#include <cmath>
#include <functional>
#include <thread>
#include <vector>

#include "mdci/conic.hpp"
#include "mdci/linalg.hpp"
#include "mdci/rng.hpp"

namespace mdci {

struct HyperbolaGeometry {
  double rho;
  double tau;
  double c;

  HyperbolaGeometry(double rho_, double tau_, double c_) : rho(rho_), tau(tau_), c(c_) {
    if (!(std::fabs(rho) < 1.0)) throw std::domain_error("HyperbolaGeometry: |rho| < 1 required");
    if (!(tau >= 0.0)) throw std::domain_error("HyperbolaGeometry: tau >= 0 required");
    if (!(c > 0.0)) throw std::domain_error("HyperbolaGeometry: c > 0 required");
  }

  double kink_threshold() const { return c * c * (1.0 - rho) * (1.0 - rho) / (1.0 + rho); }
  bool kinked() const { return tau <= kink_threshold(); }

  double x1_star() const {
    if (!kinked()) return 0.0;
    return std::sqrt(c * c * (1.0 - rho) * (1.0 - rho) - (1.0 + rho) * tau) /
           (std::sqrt(2.0) * std::sqrt(1.0 - rho));
  }

  std::array<double, 2> kink() const {
    if (!kinked()) throw std::domain_error("HyperbolaGeometry: kink undefined for this tau");
    return {0.0, std::sqrt(2.0) * std::sqrt(c * c * (1.0 - rho) + tau) /
                     std::sqrt(1.0 - rho * rho)};
  }

  // Prop-1 sufficient conditions: small maximal curvature or rho >= 0.
  bool curvature_condition() const {
    if (tau <= 0.0) return false;
    return (1.0 - rho) / std::sqrt(tau * (1.0 + rho)) <= 1.0 / c;
  }
  bool rho_condition() const { return rho >= 0.0; }
  bool prop1_condition() const { return curvature_condition() || rho_condition(); }

  bool on_null(const std::array<double, 2>& p, double tol = 1e-9) const {
    const double v = (1.0 + rho) * p[1] * p[1] - (1.0 - rho) * p[0] * p[0];
    return std::fabs(v - tau) <= tol * (1.0 + std::fabs(tau));
  }
};

inline double x2_branch(const HyperbolaGeometry& g, double x1) {
  return std::sqrt((g.tau + (1.0 - g.rho) * x1 * x1) / (1.0 + g.rho));
}

namespace detail {

inline std::array<double, 2> boundary_point(const HyperbolaGeometry& g, double x1, double su,
                                            double sv) {
  const double x2 = x2_branch(g, x1);
  const double a = (1.0 + g.rho) * x2, b = (1.0 - g.rho) * x1;
  const double den = std::sqrt(a * a + b * b);
  return {x1 + su * g.c * (1.0 - g.rho) * x1 / den, x2 + sv * g.c * (1.0 + g.rho) * x2 / den};
}

}  // namespace detail

// Upper boundary of the enlarged plus-branch: excluded on (-x1*, x1*) where
// the traced point falls in the interior and the kink takes over.
inline std::array<double, 2> boundary_upper(const HyperbolaGeometry& g, double x1) {
  if (std::fabs(x1) < g.x1_star())
    throw std::domain_error("boundary_upper: |x1| below x1_star (interior point)");
  return detail::boundary_point(g, x1, -1.0, +1.0);
}

inline std::array<double, 2> boundary_lower(const HyperbolaGeometry& g, double x1) {
  if (std::fabs(x1) < g.x1_star())
    throw std::domain_error("boundary_lower: |x1| below x1_star (interior point)");
  return detail::boundary_point(g, x1, +1.0, -1.0);
}

enum class Branch { plus, minus };

struct NullDistance {
  double distance = 0.0;
  std::array<double, 2> nearest{0.0, 0.0};
  Branch branch = Branch::plus;
  bool tie = false;
};

namespace detail {

// 1-d minimization of the distance to one branch: coarse scan, then golden
// section around every local minimum.
inline void branch_min(const HyperbolaGeometry& g, const std::array<double, 2>& p, double bsign,
                       double* best_d2, double* best_x1) {
  auto d2 = [&](double x1) {
    const double dx = p[0] - x1;
    const double dy = p[1] - bsign * x2_branch(g, x1);
    return dx * dx + dy * dy;
  };
  const double reach =
      std::fabs(p[0]) + std::fabs(p[1]) + 10.0 * (g.c + 1.0) +
      10.0 * std::sqrt((g.tau + 1.0) / (1.0 - g.rho));
  const int n = 257;
  std::vector<double> xs(n), vs(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = -reach + 2.0 * reach * i / (n - 1);
    vs[i] = d2(xs[i]);
  }
  *best_d2 = std::numeric_limits<double>::infinity();
  *best_x1 = 0.0;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int i = 0; i < n; ++i) {
    const bool local_min = (i == 0 || vs[i] <= vs[i - 1]) && (i == n - 1 || vs[i] <= vs[i + 1]);
    if (!local_min) continue;
    double a = xs[std::max(0, i - 1)], b = xs[std::min(n - 1, i + 1)];
    double x1g = b - phi * (b - a), x2g = a + phi * (b - a);
    double f1 = d2(x1g), f2 = d2(x2g);
    for (int it = 0; it < 90 && (b - a) > 1e-13 * (1.0 + std::fabs(a) + std::fabs(b)); ++it) {
      if (f1 < f2) {
        b = x2g;
        x2g = x1g;
        f2 = f1;
        x1g = b - phi * (b - a);
        f1 = d2(x1g);
      } else {
        a = x1g;
        x1g = x2g;
        f1 = f2;
        x2g = a + phi * (b - a);
        f2 = d2(x2g);
      }
    }
    const double xm = 0.5 * (a + b), vm = d2(xm);
    if (vm < *best_d2) {
      *best_d2 = vm;
      *best_x1 = xm;
    }
  }
}

// Exact membership primitive: the null set is the diagonal conic
// -(1-rho) x1^2 + (1+rho) x2^2 = tau in the original coordinates.
inline double dist2_to_null_fast(const HyperbolaGeometry& g, double x1, double x2) {
  const double lam[2] = {-(1.0 - g.rho), 1.0 + g.rho};
  const double y[2] = {x1, x2};
  return conic_dist2(lam, y, 2, g.tau);
}

}  // namespace detail

inline NullDistance dist_to_null(const HyperbolaGeometry& g, const std::array<double, 2>& p) {
  double dp, xp, dm, xm;
  detail::branch_min(g, p, +1.0, &dp, &xp);
  detail::branch_min(g, p, -1.0, &dm, &xm);
  NullDistance out;
  const double gap = std::fabs(dp - dm);
  if (dp <= dm || gap <= 1e-12 * (1.0 + dp)) {
    out.distance = std::sqrt(dp);
    out.nearest = {xp, x2_branch(g, xp)};
    out.branch = Branch::plus;  // ties break toward plus
    out.tie = gap <= 1e-12 * (1.0 + dp);
  } else {
    out.distance = std::sqrt(dm);
    out.nearest = {xm, -x2_branch(g, xm)};
    out.branch = Branch::minus;
  }
  return out;
}

struct CoverageEstimate {
  double estimate = 0.0;
  double mc_se = 0.0;
  std::uint64_t draws = 0;
};

// Monte Carlo oracle for P(theta + N(0, I2) within distance c of the null).
inline CoverageEstimate coverage_probability(const HyperbolaGeometry& g,
                                             const std::array<double, 2>& theta_on_null,
                                             std::uint64_t n_draws, RngStream seed,
                                             int n_threads = 1) {
  if (!g.on_null(theta_on_null))
    throw std::domain_error("coverage_probability: center not on the null set");
  const double c2 = g.c * g.c;
  const std::uint64_t block = 65536;
  const std::uint64_t n_blocks = (n_draws + block - 1) / block;
  std::vector<std::uint64_t> hits(n_blocks, 0);
  auto run_block = [&](std::uint64_t bi) {
    RngStream rng = seed.substream(bi);
    const std::uint64_t lo = bi * block;
    const std::uint64_t hi = std::min(n_draws, lo + block);
    std::uint64_t h = 0;
    for (std::uint64_t k = lo; k < hi; ++k) {
      const double x1 = theta_on_null[0] + rng.normal();
      const double x2 = theta_on_null[1] + rng.normal();
      if (detail::dist2_to_null_fast(g, x1, x2) <= c2) ++h;
    }
    hits[bi] = h;
  };
  if (n_threads <= 1) {
    for (std::uint64_t bi = 0; bi < n_blocks; ++bi) run_block(bi);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::uint64_t> next{0};
    for (int t = 0; t < n_threads; ++t)
      pool.emplace_back([&]() {
        for (;;) {
          const std::uint64_t bi = next.fetch_add(1);
          if (bi >= n_blocks) return;
          run_block(bi);
        }
      });
    for (auto& th : pool) th.join();
  }
  std::uint64_t total = 0;
  for (auto h : hits) total += h;
  CoverageEstimate est;
  est.draws = n_draws;
  est.estimate = static_cast<double>(total) / static_cast<double>(n_draws);
  est.mc_se = std::sqrt(est.estimate * (1.0 - est.estimate) / static_cast<double>(n_draws));
  return est;
}

struct QuadratureSpec {
  int n_nodes = 200;    // Gauss-Legendre nodes on the radial tail
  double r_max = 8.0;   // truncation in standardized units
  int n_angles = 720;   // initial angular scan
  double angle_tol = 1e-8;
};

namespace detail {

inline void gauss_legendre(int n, double a, double b, std::vector<double>* x,
                           std::vector<double>* w) {
  x->resize(n);
  w->resize(n);
  const double m = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p0 / pp;
      if (std::fabs(z - z1) < 1e-15) break;
    }
    (*x)[n - 1 - i] = mid + m * z;
    (*w)[n - 1 - i] = 2.0 * m / ((1.0 - z * z) * pp * pp);
  }
}

// Fraction of the circle of radius r around theta covered by the membership
// predicate; crossing angles refined by bisection.
inline double arc_fraction_impl(const std::function<bool(double, double)>& member,
                                const std::array<double, 2>& theta, double r,
                                const QuadratureSpec& spec) {
  const int n = spec.n_angles;
  const double two_pi = 2.0 * 3.14159265358979323846;
  std::vector<char> in(n);
  int count = 0;
  for (int i = 0; i < n; ++i) {
    const double a = two_pi * i / n;
    in[i] = member(theta[0] + r * std::cos(a), theta[1] + r * std::sin(a)) ? 1 : 0;
    count += in[i];
  }
  if (count == n) return 1.0;
  if (count == 0) return 0.0;
  auto refine = [&](double a_in, double a_out) {
    while (std::fabs(a_out - a_in) > spec.angle_tol) {
      const double m = 0.5 * (a_in + a_out);
      if (member(theta[0] + r * std::cos(m), theta[1] + r * std::sin(m)))
        a_in = m;
      else
        a_out = m;
    }
    return 0.5 * (a_in + a_out);
  };
  double covered = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!in[i]) continue;
    const double a = two_pi * i / n;
    double lo = a, hi = a;
    const int prev = (i + n - 1) % n, next = (i + 1) % n;
    const double ap = two_pi * (i - 1) / n, an = two_pi * (i + 1) / n;
    if (!in[prev]) lo = refine(a, ap);
    else lo = a - 0.5 * two_pi / n;
    if (!in[next]) hi = refine(a, an);
    else hi = a + 0.5 * two_pi / n;
    covered += hi - lo;
  }
  return std::min(1.0, covered / two_pi);
}

inline double polar_integral_impl(const std::function<bool(double, double)>& member,
                                  const std::array<double, 2>& theta, double head_radius,
                                  const QuadratureSpec& spec) {
  double total = 1.0 - std::exp(-0.5 * head_radius * head_radius);
  std::vector<double> x, w;
  gauss_legendre(spec.n_nodes, head_radius, spec.r_max, &x, &w);
  for (int i = 0; i < spec.n_nodes; ++i) {
    const double r = x[i];
    const double frac = arc_fraction_impl(member, theta, r, spec);
    total += w[i] * frac * std::exp(-0.5 * r * r) * r;
  }
  return total;
}

}  // namespace detail

inline double arc_fraction(const HyperbolaGeometry& g, const std::array<double, 2>& theta,
                           double r, const QuadratureSpec& spec = {}) {
  const double c2 = g.c * g.c;
  return detail::arc_fraction_impl(
      [&](double x, double y) { return detail::dist2_to_null_fast(g, x, y) <= c2; }, theta, r,
      spec);
}

// Deterministic counterpart of coverage_probability: exact head disk plus a
// Gauss-Legendre radial tail of refined arc fractions.
inline double polar_coverage_integral(const HyperbolaGeometry& g,
                                      const std::array<double, 2>& theta_on_null,
                                      const QuadratureSpec& spec = {}) {
  if (!g.on_null(theta_on_null))
    throw std::domain_error("polar_coverage_integral: center not on the null set");
  const double c2 = g.c * g.c;
  return detail::polar_integral_impl(
      [&](double x, double y) { return detail::dist2_to_null_fast(g, x, y) <= c2; },
      theta_on_null, g.c, spec);
}

// Same quadrature with the horizontal-band acceptance set; equals
// 2*Phi(c) - 1 exactly, which pins the quadrature error.
inline double polar_band_integral(const HyperbolaGeometry& g,
                                  const std::array<double, 2>& theta,
                                  const QuadratureSpec& spec = {}) {
  return detail::polar_integral_impl(
      [&](double, double y) { return std::fabs(y - theta[1]) <= g.c; }, theta, g.c, spec);
}

}  // namespace mdci
