#pragma once

// Gaussian-shift limit experiment demos: the h-dependence of the plug-in
// limit law (non-regularity) and the flat local power of similar tests along
// the cone {h : h'Hh = 0}.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "mdci/gfunc.hpp"
#include "mdci/linalg.hpp"
#include "mdci/rng.hpp"

namespace mdci {

struct ShiftExperiment {
  Mat gamma_inv;  // covariance of the single observation Z
  GFunction g;    // only hess(theta_star) enters
  Vec h;          // shift

  ShiftExperiment(Mat gamma_inv_, GFunction g_, Vec h_)
      : gamma_inv(std::move(gamma_inv_)), g(std::move(g_)), h(std::move(h_)) {
    const SymEig e = sym_eig(gamma_inv);
    if (e.values.back() < 1e-10)
      throw std::domain_error("ShiftExperiment: gamma_inv must be positive definite");
  }
};

// Samples of h'H W + W'H W / 2 with W ~ N(0, gamma_inv): the limiting law of
// the centered, r_n^2-scaled plug-in estimator.
inline std::vector<double> plug_in_limit_sample(const ShiftExperiment& exp, int n_draws,
                                                RngStream rng) {
  const Mat hess = exp.g.hess(exp.g.theta_star);
  const Mat l = cholesky(exp.gamma_inv);
  const Vec hH = matvec(hess, exp.h);
  const int d = hess.rows();
  std::vector<double> out(n_draws);
  for (int i = 0; i < n_draws; ++i) {
    const Vec w = matvec(l, rng.normal_vec(d));
    out[i] = dot(hH, w) + 0.5 * quad_form(w, hess);
  }
  return out;
}

struct PowerPoint {
  Vec h;
  double power = 0.0;
  double se = 0.0;
};

// Rejection probability of a deterministic test fed the shifted draw h + W.
inline std::vector<PowerPoint> power_curve(const std::function<bool(const Vec&)>& test,
                                           const Mat& gamma_inv, const std::vector<Vec>& h_list,
                                           int n_draws, RngStream rng) {
  const Mat l = cholesky(gamma_inv);
  const int d = gamma_inv.rows();
  std::vector<PowerPoint> out;
  out.reserve(h_list.size());
  for (std::size_t k = 0; k < h_list.size(); ++k) {
    RngStream sub = rng.substream(k);
    int rejects = 0;
    Vec x(d);
    for (int i = 0; i < n_draws; ++i) {
      const Vec w = matvec(l, sub.normal_vec(d));
      for (int j = 0; j < d; ++j) x[j] = h_list[k][j] + w[j];
      if (test(x)) ++rejects;
    }
    PowerPoint p;
    p.h = h_list[k];
    p.power = static_cast<double>(rejects) / n_draws;
    p.se = std::sqrt(p.power * (1.0 - p.power) / n_draws);
    out.push_back(std::move(p));
  }
  return out;
}

// Two-sample Kolmogorov-Smirnov distance.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;  // consume ties in both samples
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs(i / na - j / nb));
  }
  return d;
}

}  // namespace mdci
