#pragma once

// Monte Carlo harness for the mediation design: rejection at the true value,
// rejection at zero, and median interval length per design cell and method.
// Replications are parallelized with counter-split substreams keyed by
// (design, point, replication), so results are independent of thread count.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdci/csv.hpp"
#include "mdci/gfunc.hpp"
#include "mdci/invert.hpp"
#include "mdci/parallel.hpp"
#include "mdci/svg.hpp"
#include "mdci/types.hpp"

namespace mdci {

struct MCDesign {
  int design_id = 0;
  double theta2 = 2.0;
  std::vector<double> theta1_ratio_grid = {-1.0, -0.8, -0.6, -0.4, -0.2, 0.0,
                                           0.2,  0.4,  0.6,  0.8,  1.0};
  double r = 0.0;  // correlation of the estimator noise
  double alpha = 0.05;
  double eta = 0.005;
  int S = 2000;
  std::vector<Method> methods = {Method::BN1, Method::BN2, Method::Projection, Method::Wald,
                                 Method::NaiveBoot};
  std::uint64_t seed = 20240817;
  int bn2_draws = 2000;
  int boot_draws = 1000;  // reduced vs the 2000 standalone default, noted in flags
  int n_threads = 1;
  int scan_points = 400;
};

struct MCCell {
  int design_id = 0;
  double theta1 = 0.0, theta2 = 0.0, r = 0.0;
  Method method = Method::BN1;
  double reject_truth = 0.0, reject_zero = 0.0;
  double median_len = 0.0;
  double mc_se_truth = 0.0, mc_se_zero = 0.0;
  int S = 0;
  std::uint64_t seed = 0;
  std::string flags;
  double runtime_sec = 0.0;
};

inline bool ci_covers(const ConfidenceInterval& ci, double x) {
  if (x < ci.lower || x > ci.upper) return false;
  for (const auto& gap : ci.acceptance_gaps)
    if (x > gap.first && x < gap.second) return false;
  return true;
}

namespace detail {

struct RepRecord {
  bool ok = false;
  bool covers_truth = false;
  bool covers_zero = false;
  double length = 0.0;
};

}  // namespace detail

inline std::vector<MCCell> run_design(const MCDesign& design) {
  if (!(std::fabs(design.r) < 1.0)) throw std::domain_error("run_design: |r| < 1 required");
  if (design.S < 100) throw std::domain_error("run_design: S >= 100 required");
  const GFunction g = builtin_product();
  const Mat sigma{{1.0, design.r}, {design.r, 1.0}};
  const Mat chol_l = cholesky(sigma);
  const RngStream root(design.seed, 0);
  const int n_methods = static_cast<int>(design.methods.size());

  std::vector<MCCell> cells;
  for (std::size_t pi = 0; pi < design.theta1_ratio_grid.size(); ++pi) {
    const double theta1 = design.theta1_ratio_grid[pi] * design.theta2;
    const Vec theta{theta1, design.theta2};
    const double truth = theta1 * design.theta2;
    const auto t_start = std::chrono::steady_clock::now();

    std::vector<detail::RepRecord> recs(static_cast<std::size_t>(design.S) * n_methods);
    parallel_for(design.n_threads, design.S, [&](std::size_t s) {
      RngStream rep = root.substream(design.design_id).substream(pi).substream(s);
      Vec z = rep.normal_vec(2);
      const Vec noise = matvec(chol_l, z);
      const Vec theta_hat = theta + noise;
      const EstimateInput input(theta_hat, sigma, 1.0, g.theta_star);
      for (int mi = 0; mi < n_methods; ++mi) {
        detail::RepRecord& rec = recs[s * n_methods + mi];
        const Method method = design.methods[mi];
        try {
          ConfidenceInterval ci;
          if (method == Method::NaiveBoot) {
            ci = naive_bootstrap_interval(g, input, design.alpha, design.boot_draws,
                                          rep.substream(1000 + mi));
          } else {
            InvertConfig cfg;
            cfg.scan_points = design.scan_points;
            if (method == Method::BN2) {
              Bn2Config b2 = Bn2Config::with_alpha(design.alpha, rep.substream(1000 + mi),
                                                   design.bn2_draws);
              b2.eta = design.eta;
              cfg.bn2 = b2;
            }
            ci = invert_test(g, input, method, design.alpha, cfg);
          }
          rec.ok = true;
          rec.covers_truth = ci_covers(ci, truth);
          rec.covers_zero = ci_covers(ci, 0.0);
          rec.length = ci.length();
        } catch (const std::exception&) {
          rec.ok = false;
        }
      }
    });

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    for (int mi = 0; mi < n_methods; ++mi) {
      MCCell cell;
      cell.design_id = design.design_id;
      cell.theta1 = theta1;
      cell.theta2 = design.theta2;
      cell.r = design.r;
      cell.method = design.methods[mi];
      cell.S = design.S;
      cell.seed = design.seed;
      cell.runtime_sec = elapsed;
      int ok = 0, rej_t = 0, rej_z = 0;
      std::vector<double> lengths;
      lengths.reserve(design.S);
      for (int s = 0; s < design.S; ++s) {
        const detail::RepRecord& rec = recs[static_cast<std::size_t>(s) * n_methods + mi];
        if (!rec.ok) continue;
        ++ok;
        rej_t += rec.covers_truth ? 0 : 1;
        rej_z += rec.covers_zero ? 0 : 1;
        lengths.push_back(rec.length);
      }
      const int failed = design.S - ok;
      if (failed > 0 && failed * 200 >= design.S)  // 0.5% budget
        throw std::runtime_error("run_design: method " +
                                 std::string(method_name(cell.method)) +
                                 " failed in more than 0.5% of replications");
      cell.reject_truth = static_cast<double>(rej_t) / ok;
      cell.reject_zero = static_cast<double>(rej_z) / ok;
      std::sort(lengths.begin(), lengths.end());
      cell.median_len = lengths[(lengths.size() - 1) / 2];
      cell.mc_se_truth =
          std::sqrt(cell.reject_truth * (1.0 - cell.reject_truth) / ok);
      cell.mc_se_zero = std::sqrt(cell.reject_zero * (1.0 - cell.reject_zero) / ok);
      std::string flags;
      if (cell.method == Method::NaiveBoot)
        flags = "percentile;B=" + std::to_string(design.boot_draws);
      if (failed > 0) flags += (flags.empty() ? "" : ";") + std::string("fail=") +
                               std::to_string(failed);
      cell.flags = flags;
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

inline void write_results_csv(const std::vector<MCCell>& cells, const std::string& path) {
  CsvWriter csv(path);
  csv.row({"design_id", "theta1", "theta2", "r", "method", "reject_truth", "reject_zero",
           "median_len", "mc_se_truth", "mc_se_zero", "S", "seed", "flags"});
  for (const auto& c : cells)
    csv.row({std::to_string(c.design_id), csv_double(c.theta1), csv_double(c.theta2),
             csv_double(c.r), method_name(c.method), csv_double(c.reject_truth),
             csv_double(c.reject_zero), csv_double(c.median_len), csv_double(c.mc_se_truth),
             csv_double(c.mc_se_zero), std::to_string(c.S), std::to_string(c.seed), c.flags});
  csv.close();
}

namespace detail {

inline std::string method_color(Method m) {
  switch (m) {
    case Method::BN1: return "#1f77b4";
    case Method::BN2: return "#d62728";
    case Method::Projection: return "#2ca02c";
    case Method::Wald: return "#9467bd";
    case Method::NaiveBoot: return "#8c564b";
    case Method::AM: return "#7f7f7f";
  }
  return "#000000";
}

}  // namespace detail

// One SVG per Figure-2 style row: rejection at truth, rejection at zero,
// median CI length, each with one panel per design cell.
inline void write_figure_svgs(const std::vector<MCCell>& cells, const std::string& out_dir) {
  struct Key {
    int id;
    double theta2, r;
  };
  std::vector<Key> keys;
  for (const auto& c : cells) {
    bool seen = false;
    for (const auto& k : keys) seen = seen || k.id == c.design_id;
    if (!seen) keys.push_back({c.design_id, c.theta2, c.r});
  }
  auto build = [&](auto metric, const std::string& fname, const std::string& ylab, double ymin,
                   double ymax) {
    std::vector<SvgPanel> panels;
    for (const auto& k : keys) {
      SvgPanel panel;
      char title[64];
      std::snprintf(title, sizeof(title), "theta2=%g, r=%g", k.theta2, k.r);
      panel.title = title;
      std::vector<Method> methods;
      for (const auto& c : cells)
        if (c.design_id == k.id) {
          bool seen = false;
          for (Method m : methods) seen = seen || m == c.method;
          if (!seen) methods.push_back(c.method);
        }
      for (Method m : methods) {
        SvgSeries s;
        s.label = method_name(m);
        s.color = detail::method_color(m);
        for (const auto& c : cells)
          if (c.design_id == k.id && c.method == m) {
            s.x.push_back(c.theta1 / c.theta2);
            s.y.push_back(metric(c));
          }
        panel.series.push_back(std::move(s));
      }
      panels.push_back(std::move(panel));
    }
    write_svg_panels(out_dir + "/" + fname, panels, "theta1/theta2", ylab, ymin, ymax);
  };
  std::filesystem::create_directories(out_dir);
  build([](const MCCell& c) { return c.reject_truth; }, "rejection_truth.svg",
        "rejection at truth", 0.0, 0.3);
  build([](const MCCell& c) { return c.reject_zero; }, "rejection_zero.svg", "rejection at zero",
        0.0, 1.05);
  build([](const MCCell& c) { return c.median_len; }, "median_length.svg", "median CI length",
        0.0, -1.0);
}

// results.csv plus the three figure SVGs; empty input still writes the header.
inline void emit_results(const std::vector<MCCell>& cells, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_results_csv(cells, out_dir + "/results.csv");
  if (!cells.empty()) write_figure_svgs(cells, out_dir);
}

}  // namespace mdci
