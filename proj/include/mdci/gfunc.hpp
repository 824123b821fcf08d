#pragma once

// The transformation g with analytic derivatives, plus the degeneracy
// diagnostics: H = hess(theta_star), eigenvalues of the sign-adjusted
// standardized Hessian, rho, and the cone {h : h'Hh = 0}.

#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include "mdci/estimate.hpp"
#include "mdci/linalg.hpp"
#include "mdci/rng.hpp"

namespace mdci {

struct GFunction {
  std::function<double(const Vec&)> eval;
  std::function<Vec(const Vec&)> grad;
  std::function<Mat(const Vec&)> hess;
  Vec theta_star;
  std::string name;

  // Set when g(theta) = theta' Q theta with theta_star = 0; enables the exact
  // diagonalized solver in mdstat.
  std::optional<Mat> quad;

  int dim() const { return static_cast<int>(theta_star.size()); }
};

namespace detail {

inline void audit_derivatives(const GFunction& g, bool require_hessian = true) {
  const int d = g.dim();
  const Vec grad_star = g.grad(g.theta_star);
  if (norm2(grad_star) > 1e-8)
    throw std::domain_error("GFunction '" + g.name + "': grad(theta_star) is not zero");
  if (require_hessian && max_abs(g.hess(g.theta_star)) == 0.0)
    throw std::domain_error("GFunction '" + g.name + "': hess(theta_star) vanishes");
  RngStream rng(0x6d646369u, 0xa0d17);  // fixed audit stream
  for (int pt = 0; pt < 20; ++pt) {
    Vec theta(d);
    for (int i = 0; i < d; ++i) theta[i] = g.theta_star[i] + 2.0 * rng.uniform01() - 1.0;
    const Vec gr = g.grad(theta);
    const Mat he = g.hess(theta);
    double err_g = 0.0, err_h = 0.0;
    for (int i = 0; i < d; ++i) {
      const double h = 6e-6 * (1.0 + std::fabs(theta[i]));
      Vec tp = theta, tm = theta;
      tp[i] += h;
      tm[i] -= h;
      err_g = std::max(err_g, std::fabs((g.eval(tp) - g.eval(tm)) / (2.0 * h) - gr[i]));
      const Vec gp = g.grad(tp), gm = g.grad(tm);
      for (int j = 0; j < d; ++j)
        err_h = std::max(err_h, std::fabs((gp[j] - gm[j]) / (2.0 * h) - he(i, j)));
    }
    if (err_g > 1e-5 * (1.0 + norm2(gr)))
      throw std::domain_error("GFunction '" + g.name + "': grad disagrees with finite differences");
    if (err_h > 1e-4 * (1.0 + max_abs(he)))
      throw std::domain_error("GFunction '" + g.name + "': hess disagrees with finite differences");
  }
}

}  // namespace detail

inline GFunction make_gfunction(std::function<double(const Vec&)> eval,
                                std::function<Vec(const Vec&)> grad,
                                std::function<Mat(const Vec&)> hess, Vec theta_star,
                                std::string name) {
  GFunction g{std::move(eval), std::move(grad), std::move(hess), std::move(theta_star),
              std::move(name), std::nullopt};
  detail::audit_derivatives(g);
  return g;
}

inline GFunction builtin_product() {
  GFunction g;
  g.eval = [](const Vec& t) { return t[0] * t[1]; };
  g.grad = [](const Vec& t) { return Vec{t[1], t[0]}; };
  g.hess = [](const Vec&) { return Mat{{0.0, 1.0}, {1.0, 0.0}}; };
  g.theta_star = {0.0, 0.0};
  g.name = "product";
  g.quad = Mat{{0.0, 0.5}, {0.5, 0.0}};
  detail::audit_derivatives(g);
  return g;
}

// d = 1; consumed only by the modules that accept scalar parameters.
inline GFunction builtin_monomial(int power) {
  if (power < 2) throw std::domain_error("builtin_monomial: power must be >= 2");
  const double p = static_cast<double>(power);
  GFunction g;
  g.eval = [power](const Vec& t) { return std::pow(t[0], power); };
  g.grad = [power, p](const Vec& t) { return Vec{p * std::pow(t[0], power - 1)}; };
  g.hess = [power, p](const Vec& t) {
    Mat h(1, 1);
    h(0, 0) = p * (p - 1.0) * std::pow(t[0], power - 2);
    return h;
  };
  g.theta_star = {0.0};
  g.name = "monomial_" + std::to_string(power);
  if (power == 2) g.quad = Mat{{1.0}};
  // powers above two are higher-order degenerate: hess(0) = 0 by design, so
  // only the gradient audit applies; modules needing a full-rank Hessian
  // reject these inputs themselves
  detail::audit_derivatives(g, power == 2);
  return g;
}

inline GFunction builtin_quadratic_form(const Mat& a) {
  if (!is_symmetric(a, 1e-10))
    throw std::domain_error("builtin_quadratic_form: matrix must be symmetric");
  const int d = a.rows();
  GFunction g;
  g.eval = [a](const Vec& t) { return quad_form(t, a); };
  g.grad = [a](const Vec& t) { return 2.0 * matvec(a, t); };
  g.hess = [a](const Vec& t) {
    (void)t;
    Mat h = a;
    for (int i = 0; i < h.rows(); ++i)
      for (int j = 0; j < h.cols(); ++j) h(i, j) *= 2.0;
    return h;
  };
  g.theta_star = Vec(d, 0.0);
  g.name = "quadratic_form";
  g.quad = a;
  detail::audit_derivatives(g);
  return g;
}

enum class Definiteness { positive, negative, indefinite, singular };

struct DegeneracyDiagnostics {
  Mat H;            // hess(theta_star)
  Vec lambda;       // eigenvalues of sign(tau - g(theta_star)) * S H S, descending
  double rho_p;     // (l1 + l2)/|l1 - l2|, d = 2 only; +inf sentinel when l1 = l2
  bool rho_defined; // false when d != 2 or eigenvalues coincide
  Definiteness definiteness;
};

// tau plays the role of g(theta_P), known under H0. sign(0) := +1: at the
// degenerate value only the rho branch can grant BN1 eligibility, where sign
// merely relabels the eigenvalue order.
inline DegeneracyDiagnostics diagnostics(const GFunction& g, const EstimateInput& input,
                                         double tau) {
  DegeneracyDiagnostics out;
  out.H = g.hess(g.theta_star);
  const int d = input.d();
  const Mat s = matrix_sqrt_spd(input.sigma_hat);
  const Mat m = matmul(s, matmul(out.H, s));
  const double sign = (tau - g.eval(g.theta_star)) < 0.0 ? -1.0 : 1.0;
  SymEig e = sym_eig(m);
  out.lambda.resize(d);
  for (int i = 0; i < d; ++i) out.lambda[i] = sign * e.values[i];
  std::sort(out.lambda.begin(), out.lambda.end(), std::greater<double>());

  const SymEig eh = sym_eig(out.H);
  const double hmax = std::max(std::fabs(eh.values.front()), std::fabs(eh.values.back()));
  if (eh.values.back() > 1e-12 * hmax)
    out.definiteness = Definiteness::positive;
  else if (eh.values.front() < -1e-12 * hmax)
    out.definiteness = Definiteness::negative;
  else if (eh.values.front() > 1e-12 * hmax && eh.values.back() < -1e-12 * hmax)
    out.definiteness = Definiteness::indefinite;
  else if (std::fabs(eh.values.front()) <= 1e-12 * hmax ||
           std::fabs(eh.values.back()) <= 1e-12 * hmax)
    out.definiteness = Definiteness::singular;
  else
    out.definiteness = Definiteness::indefinite;

  out.rho_defined = false;
  out.rho_p = std::numeric_limits<double>::infinity();
  if (d == 2) {
    const double den = std::fabs(out.lambda[0] - out.lambda[1]);
    const double scale = std::max(std::fabs(out.lambda[0]), std::fabs(out.lambda[1]));
    if (den > 1e-14 * std::max(1.0, scale)) {
      out.rho_p = (out.lambda[0] + out.lambda[1]) / den;
      out.rho_defined = true;
    }
  }
  return out;
}

inline bool hstar_contains(const GFunction& g, const Vec& h, double tol = 1e-9) {
  const Mat hm = g.hess(g.theta_star);
  const double q = quad_form(h, hm);
  return std::fabs(q) <= tol * (1.0 + dot(h, h)) * spectral_norm_sym(hm);
}

}  // namespace mdci
