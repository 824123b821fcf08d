#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mdci/errors.hpp"

namespace mdci {

enum class Method { BN1, BN2, Projection, Wald, NaiveBoot, AM };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::BN1: return "BN1";
    case Method::BN2: return "BN2";
    case Method::Projection: return "Projection";
    case Method::Wald: return "Wald";
    case Method::NaiveBoot: return "NaiveBoot";
    case Method::AM: return "AM";
  }
  return "?";
}

inline Method method_from_name(const std::string& s) {
  for (Method m : {Method::BN1, Method::BN2, Method::Projection, Method::Wald, Method::NaiveBoot,
                   Method::AM})
    if (s == method_name(m)) return m;
  throw config_error("unknown method '" + s + "'");
}

struct TestDecision {
  bool reject = false;
  double statistic = 0.0;
  double critical_value = 0.0;
  Method method = Method::Wald;
  bool degenerate_gradient = false;
  std::string note;
};

struct ConfidenceInterval {
  Method method = Method::BN1;
  double level = 0.95;
  double lower = 0.0;
  double upper = 0.0;
  double point_estimate = 0.0;
  // excluded sub-intervals strictly inside [lower, upper]; nonempty means the
  // acceptance region was not an interval and [lower, upper] is its hull
  std::vector<std::pair<double, double>> acceptance_gaps;
  // tau values where the BN1 eligibility conditions failed during inversion
  std::vector<double> eligibility_holes;
  std::optional<double> bn2_critical_value;
  bool degenerate_gradient = false;
  int scan_points = 0;
  double endpoint_tol = 0.0;
  double length() const { return upper - lower; }
};

}  // namespace mdci
