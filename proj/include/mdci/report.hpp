#pragma once

// The ci-command workhorse, kept in the library so the round-trip contract
// (written table re-parses to the in-memory values exactly) is testable
// without spawning the binary.

#include <cstdio>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "mdci/config.hpp"
#include "mdci/csv.hpp"
#include "mdci/invert.hpp"

namespace mdci {

struct CiRow {
  Method method;
  double estimate, lower, upper, length;
  std::string flags;
};

inline GFunction make_g_from_config(const AnalysisConfig& ac) {
  if (ac.g_name == "product") return builtin_product();
  if (ac.g_name == "monomial") return builtin_monomial(ac.monomial_power);
  if (ac.g_name == "quadratic_form") {
    if (!ac.quad_matrix) throw config_error("quadratic_form requires g.a");
    return builtin_quadratic_form(*ac.quad_matrix);
  }
  throw config_error("unknown g.name '" + ac.g_name + "'");
}

inline std::vector<CiRow> compute_ci_table(const AnalysisConfig& ac) {
  const GFunction g = make_g_from_config(ac);
  const EstimateInput input(ac.theta_hat, ac.sigma_hat, ac.r_n, ac.theta_star);
  std::vector<CiRow> rows;
  for (Method m : ac.methods) {
    CiRow row;
    row.method = m;
    row.estimate = g.eval(ac.theta_hat);
    if (m == Method::NaiveBoot) {
      const ConfidenceInterval ci =
          naive_bootstrap_interval(g, input, ac.alpha, ac.bn2_draws, RngStream(ac.seed, 7));
      row.lower = ci.lower;
      row.upper = ci.upper;
      row.flags = "percentile";
    } else if (m == Method::AM) {
      am_critical_value(g, input, 0.0);  // throws not_implemented_error
      continue;
    } else {
      InvertConfig cfg;
      if (m == Method::BN2) {
        Bn2Config b2 = Bn2Config::with_alpha(ac.alpha, RngStream(ac.seed, 11), ac.bn2_draws);
        b2.eta = ac.eta;
        cfg.bn2 = b2;
      }
      const ConfidenceInterval ci = invert_test(g, input, m, ac.alpha, cfg);
      row.lower = ci.lower;
      row.upper = ci.upper;
      std::string flags;
      if (!ci.eligibility_holes.empty()) flags = "eligibility-hole";
      if (!ci.acceptance_gaps.empty())
        flags += (flags.empty() ? "" : ";") + std::string("gaps=") +
                 std::to_string(ci.acceptance_gaps.size());
      if (ci.degenerate_gradient)
        flags += (flags.empty() ? "" : ";") + std::string("degenerate-gradient");
      row.flags = flags;
    }
    row.length = row.upper - row.lower;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_ci_csv(const std::vector<CiRow>& rows, const std::string& path) {
  CsvWriter csv(path);
  csv.row({"method", "estimate", "lower", "upper", "length", "flags"});
  for (const auto& r : rows)
    csv.row({method_name(r.method), csv_double(r.estimate), csv_double(r.lower),
             csv_double(r.upper), csv_double(r.length), r.flags});
  csv.close();
}

inline std::vector<CiRow> read_ci_csv(const std::string& path) {
  const auto rows = read_csv(path);
  std::vector<CiRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    CiRow r;
    r.method = method_from_name(f.at(0));
    r.estimate = std::strtod(f.at(1).c_str(), nullptr);
    r.lower = std::strtod(f.at(2).c_str(), nullptr);
    r.upper = std::strtod(f.at(3).c_str(), nullptr);
    r.length = std::strtod(f.at(4).c_str(), nullptr);
    r.flags = f.size() > 5 ? f.at(5) : "";
    out.push_back(std::move(r));
  }
  return out;
}

// 4-decimal console table; the CSV carries full precision.
inline void print_ci_table(std::ostream& os, const std::vector<CiRow>& rows) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-11s %10s %10s %10s %10s  %s", "method", "estimate", "lower",
                "upper", "length", "flags");
  os << buf << '\n';
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-11s %10.4f %10.4f %10.4f %10.4f  %s",
                  method_name(r.method), r.estimate, r.lower, r.upper, r.length,
                  r.flags.c_str());
    os << buf << '\n';
  }
}

inline std::string run_ci_command(const AnalysisConfig& ac, std::ostream& os) {
  const std::vector<CiRow> rows = compute_ci_table(ac);
  print_ci_table(os, rows);
  std::filesystem::create_directories(ac.out_dir);
  const std::string path = ac.out_dir + "/ci.csv";
  write_ci_csv(rows, path);
  return path;
}

}  // namespace mdci
