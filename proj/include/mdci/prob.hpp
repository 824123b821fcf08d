#pragma once

// Normal and chi-square distribution routines plus the ceil-convention
// empirical quantile. Self-contained: the chi-square quantile inverts the
// regularized incomplete gamma by Newton with a bisection fallback.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace mdci {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
}

// Rational approximation (Acklam) refined by one Halley step.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p outside (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= phigh) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

namespace detail {

// Lower regularized incomplete gamma P(a, x): series for x < a+1, continued
// fraction for the complement otherwise.
inline double gammap(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::domain_error("gammap: bad arguments");
  if (x == 0.0) return 0.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 500; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - gln);
  }
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - gln) * h;
}

}  // namespace detail

inline double chi2_cdf(int df, double x) {
  if (df < 1) throw std::domain_error("chi2_cdf: df must be positive");
  if (x <= 0.0) return 0.0;
  return detail::gammap(0.5 * df, 0.5 * x);
}

inline double chi2_pdf(int df, double x) {
  if (x <= 0.0) return 0.0;
  const double k = 0.5 * df;
  return std::exp((k - 1.0) * std::log(x) - 0.5 * x - std::lgamma(k) - k * std::log(2.0));
}

inline double chi2_quantile(int df, double p) {
  if (df < 1) throw std::domain_error("chi2_quantile: df must be positive");
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("chi2_quantile: p outside (0,1)");
  // Wilson-Hilferty start, then Newton; fall back to bisection if Newton strays.
  const double z = normal_quantile(p);
  const double n = static_cast<double>(df);
  double x = n * std::pow(1.0 - 2.0 / (9.0 * n) + z * std::sqrt(2.0 / (9.0 * n)), 3);
  if (!(x > 0.0)) x = 0.5;
  bool ok = false;
  for (int it = 0; it < 60; ++it) {
    const double f = chi2_cdf(df, x) - p;
    const double fp = chi2_pdf(df, x);
    if (fp <= 0.0) break;
    const double step = f / fp;
    double xn = x - step;
    if (xn <= 0.0) xn = 0.5 * x;
    if (std::fabs(xn - x) <= 1e-14 * (1.0 + x)) {
      x = xn;
      ok = true;
      break;
    }
    x = xn;
  }
  if (!ok || std::fabs(chi2_cdf(df, x) - p) > 1e-10) {
    double lo = 0.0, hi = std::max(2.0 * x, 1.0);
    while (chi2_cdf(df, hi) < p) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (chi2_cdf(df, mid) < p)
        lo = mid;
      else
        hi = mid;
    }
    x = 0.5 * (lo + hi);
  }
  return x;
}

// Order statistic at index ceil(p*B), 1-based.
inline double empirical_quantile(std::vector<double> samples, double p) {
  if (samples.empty()) throw std::domain_error("empirical_quantile: empty sample");
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("empirical_quantile: p outside (0,1)");
  const double bn = static_cast<double>(samples.size());
  std::size_t idx = static_cast<std::size_t>(std::ceil(p * bn));
  if (idx < 1) idx = 1;
  if (idx > samples.size()) idx = samples.size();
  std::nth_element(samples.begin(), samples.begin() + (idx - 1), samples.end());
  return samples[idx - 1];
}

}  // namespace mdci
