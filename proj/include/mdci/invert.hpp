#pragma once

// Confidence intervals for g(theta) by test inversion over tau: scan a
// bracket around the plug-in value, then bisect every accept/reject boundary
// crossing. Non-interval acceptance regions are reported as a hull plus the
// list of interior gaps, never silently hulled.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "mdci/critval.hpp"
#include "mdci/errors.hpp"
#include "mdci/mdstat.hpp"
#include "mdci/types.hpp"

namespace mdci {

struct InvertConfig {
  int scan_points = 400;          // tau grid resolution (plus the center point)
  double endpoint_tol_rel = 1e-4; // endpoint tolerance, scaled by 1 + |g(theta_hat)|
  double bracket_mult = 6.0;      // bracket = Wald interval width x this
  int max_expansions = 6;
  std::optional<Bn2Config> bn2;   // defaults derived from alpha when absent
  SolverOptions solver;
};

inline double ci_median_length(const std::vector<ConfidenceInterval>& cis) {
  if (cis.empty()) throw std::domain_error("ci_median_length: empty list");
  std::vector<double> lengths;
  lengths.reserve(cis.size());
  for (const auto& ci : cis) lengths.push_back(ci.length());
  std::sort(lengths.begin(), lengths.end());
  // lower-median convention for even counts
  return lengths[(lengths.size() - 1) / 2];
}

namespace detail {

// Scan the acceptance predicate over [center - half, center + half], expand
// while an end stays accepted, and bisect every boundary crossing. Returns
// the refined accepted segments in increasing order.
inline std::vector<std::pair<double, double>> scan_accepted_segments(
    const std::function<bool(double)>& accepts, double center, double half, int m,
    int max_expansions, double endpoint_tol) {
  std::vector<double> taus;
  std::vector<char> acc;
  auto scan = [&]() {
    taus.clear();
    acc.clear();
    taus.reserve(m + 1);
    for (int k = 0; k <= m; ++k) taus.push_back(center + half * (2.0 * k / m - 1.0));
    taus[m / 2] = center;  // exact center always present
    acc.resize(taus.size());
    for (std::size_t i = 0; i < taus.size(); ++i) acc[i] = accepts(taus[i]) ? 1 : 0;
  };
  scan();
  for (int e = 0; e < max_expansions && (acc.front() || acc.back()); ++e) {
    half *= 2.0;
    scan();
  }
  if (std::find(acc.begin(), acc.end(), char(1)) == acc.end()) return {};

  auto bisect_edge = [&](double t_acc, double t_rej) {
    while (std::fabs(t_rej - t_acc) > endpoint_tol) {
      const double mid = 0.5 * (t_acc + t_rej);
      if (accepts(mid))
        t_acc = mid;
      else
        t_rej = mid;
    }
    return 0.5 * (t_acc + t_rej);
  };

  std::vector<std::pair<double, double>> segments;
  std::size_t i = 0;
  while (i < taus.size()) {
    if (!acc[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < taus.size() && acc[j + 1]) ++j;
    double lo = taus[i];
    double hi = taus[j];
    if (i > 0) lo = bisect_edge(taus[i], taus[i - 1]);
    if (j + 1 < taus.size()) hi = bisect_edge(taus[j], taus[j + 1]);
    segments.emplace_back(lo, hi);
    i = j + 1;
  }
  return segments;
}

}  // namespace detail

inline ConfidenceInterval invert_test(const GFunction& g, const EstimateInput& input,
                                      Method method, double alpha,
                                      const InvertConfig& cfg = {}) {
  const double ghat = g.eval(input.theta_hat);
  ConfidenceInterval ci;
  ci.method = method;
  ci.level = 1.0 - alpha;
  ci.point_estimate = ghat;
  ci.scan_points = cfg.scan_points;
  ci.endpoint_tol = cfg.endpoint_tol_rel * (1.0 + std::fabs(ghat));

  // fixed critical values and per-method acceptance predicate
  double md_cv = 0.0;
  std::optional<Bn2Config> bn2cfg;
  switch (method) {
    case Method::BN1:
      md_cv = chi2_quantile(1, 1.0 - alpha);
      break;
    case Method::Projection:
      md_cv = chi2_quantile(input.d(), 1.0 - alpha);
      break;
    case Method::BN2: {
      bn2cfg = cfg.bn2 ? *cfg.bn2 : Bn2Config::with_alpha(alpha, RngStream(20240817, 0));
      bn2cfg->alpha = alpha;
      const CriticalValue cv = bn2_critical_value(g, input, *bn2cfg);
      md_cv = cv.value;  // free of tau; computed once per inversion
      ci.bn2_critical_value = md_cv;
      break;
    }
    case Method::Wald:
      break;
    case Method::NaiveBoot:
    case Method::AM:
      throw std::domain_error("invert_test: method must be one of BN1, BN2, Projection, Wald");
  }
  const double eta_default = alpha / 10.0;

  SolverOptions solver = cfg.solver;
  solver.detect_ties = false;
  std::map<double, bool> holes_seen;
  auto accepts = [&](double tau) -> bool {
    if (method == Method::Wald) return !wald_test(g, input, tau, alpha).reject;
    double stat;
    try {
      stat = md_statistic(g, input, tau, solver).statistic;
    } catch (const infeasible_error&) {
      return false;  // empty null set in the search region: reject
    }
    if (method == Method::BN1 && input.d() == 2) {
      const Bn1Eligibility el = bn1_check(g, input, tau, alpha, eta_default);
      if (!el.eligible) holes_seen[tau] = true;
    }
    return stat <= md_cv;
  };

  // Wald at a degenerate gradient accepts everything; report the bracket
  // hull with the flag instead of scanning blindly.
  const Vec gr = g.grad(input.theta_hat);
  const double grad_var = quad_form(gr, input.sigma_hat);
  const bool degenerate = norm2(gr) < 1e-12;
  if (method == Method::Wald && degenerate) ci.degenerate_gradient = true;

  const double se = degenerate ? 0.0 : std::sqrt(grad_var) / input.r_n;
  const double z = normal_quantile(1.0 - alpha / 2.0);
  const double wald_width = 2.0 * z * se;
  const double floor_width =
      8.0 * spectral_norm_sym(input.sigma_hat) / (input.r_n * input.r_n);
  double half = std::max(0.5 * cfg.bracket_mult * wald_width, 0.5 * floor_width);

  const std::vector<std::pair<double, double>> segments = detail::scan_accepted_segments(
      accepts, ghat, half, cfg.scan_points, cfg.max_expansions, ci.endpoint_tol);
  if (segments.empty())
    throw std::runtime_error(
        "invert_test: every scanned tau rejected, including g(theta_hat); internal inconsistency");
  ci.lower = segments.front().first;
  ci.upper = segments.back().second;
  for (std::size_t k = 0; k + 1 < segments.size(); ++k)
    ci.acceptance_gaps.emplace_back(segments[k].second, segments[k + 1].first);
  for (const auto& kv : holes_seen) ci.eligibility_holes.push_back(kv.first);
  return ci;
}

}  // namespace mdci
