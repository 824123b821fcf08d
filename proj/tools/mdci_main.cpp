// Command-line front end: confidence intervals from user estimates, the
// simulation study, the coverage-geometry report, and the limit-experiment
// demos. Exit codes: 0 success, 2 configuration error, 3 numeric error.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mdci/config.hpp"
#include "mdci/critval.hpp"
#include "mdci/geometry.hpp"
#include "mdci/limitexp.hpp"
#include "mdci/mc.hpp"
#include "mdci/prob.hpp"
#include "mdci/report.hpp"

namespace {

int run_ci(const std::string& config_path, const std::vector<std::string>& methods,
           double alpha_override, double eta_override, long long seed_override,
           const std::string& out_override) {
  mdci::AnalysisConfig ac = mdci::AnalysisConfig::from_file(config_path);
  if (!methods.empty()) {
    ac.methods.clear();
    for (const auto& m : methods) ac.methods.push_back(mdci::method_from_name(m));
  }
  if (alpha_override > 0.0) {
    ac.alpha = alpha_override;
    ac.eta = alpha_override / 10.0;
  }
  if (eta_override > 0.0) ac.eta = eta_override;
  if (seed_override >= 0) ac.seed = static_cast<std::uint64_t>(seed_override);
  if (!out_override.empty()) ac.out_dir = out_override;
  const std::string path = mdci::run_ci_command(ac, std::cout);
  std::cout << "written: " << path << "\n";
  return 0;
}

int run_simulate(const std::string& preset, bool quick, double theta2, double corr, int s_override,
                 long long seed, const std::string& out, int threads,
                 const std::vector<std::string>& methods) {
  std::vector<mdci::MCDesign> designs;
  mdci::MCDesign base;
  base.seed = static_cast<std::uint64_t>(seed);
  base.n_threads = threads;
  if (!methods.empty()) {
    base.methods.clear();
    for (const auto& m : methods) base.methods.push_back(mdci::method_from_name(m));
  }
  if (preset == "paper") {
    base.S = quick ? 500 : 2000;
    int id = 0;
    for (double t2 : {2.0, 6.0})
      for (double r : {0.0, 0.5}) {
        mdci::MCDesign d = base;
        d.design_id = id++;
        d.theta2 = t2;
        d.r = r;
        designs.push_back(d);
      }
  } else if (preset == "single") {
    base.S = s_override > 0 ? s_override : (quick ? 500 : 2000);
    base.theta2 = theta2;
    base.r = corr;
    designs.push_back(base);
  } else {
    throw mdci::config_error("unknown preset '" + preset + "' (use: paper, single)");
  }
  std::vector<mdci::MCCell> all;
  for (const auto& d : designs) {
    std::fprintf(stderr, "running design %d (theta2=%g, r=%g, S=%d)...\n", d.design_id, d.theta2,
                 d.r, d.S);
    auto cells = mdci::run_design(d);
    all.insert(all.end(), cells.begin(), cells.end());
  }
  mdci::emit_results(all, out);
  std::cout << "written: " << out << "/results.csv and figure SVGs\n";
  return 0;
}

int run_geometry(double rho, double tau, double theta1, double alpha, long long n_draws,
                 long long seed, int threads) {
  const double c = std::sqrt(mdci::chi2_quantile(1, 1.0 - alpha));
  const mdci::HyperbolaGeometry geom(rho, tau, c);
  std::printf("hyperbola null: (1%+g)*x2^2 - (1%+g)*x1^2 = %g, c = %.6f\n", rho, -rho, tau, c);
  std::printf("curvature condition (1-rho)/sqrt(tau(1+rho)) <= 1/c: %s (lhs %s)\n",
              geom.curvature_condition() ? "holds" : "fails",
              tau > 0.0 ? std::to_string((1.0 - rho) / std::sqrt(tau * (1.0 + rho))).c_str()
                        : "inf");
  std::printf("rho >= 0 condition: %s\n", geom.rho_condition() ? "holds" : "fails");
  if (!geom.prop1_condition())
    std::printf("NOTE: outside proven region (rho < 0 with high curvature); coverage reported, "
                "not asserted\n");
  std::printf("x1* = %.6f\n", geom.x1_star());
  if (geom.kinked()) {
    const auto k = geom.kink();
    std::printf("kink K = (%.6f, %.6f)\n", k[0], k[1]);
  } else {
    std::printf("no kink (tau above threshold %.6f)\n", geom.kink_threshold());
  }
  const std::array<double, 2> theta{theta1, mdci::x2_branch(geom, theta1)};
  std::printf("center on null: (%.6f, %.6f)\n", theta[0], theta[1]);
  const auto cov = mdci::coverage_probability(geom, theta, static_cast<std::uint64_t>(n_draws),
                                              mdci::RngStream(static_cast<std::uint64_t>(seed), 3),
                                              threads);
  std::printf("MC coverage: %.6f +- %.6f (n = %lld)\n", cov.estimate, cov.mc_se, n_draws);
  const double polar = mdci::polar_coverage_integral(geom, theta);
  std::printf("polar integral: %.6f (|diff| = %.6f, %.2f MC SEs)\n", polar,
              std::fabs(polar - cov.estimate),
              cov.mc_se > 0.0 ? std::fabs(polar - cov.estimate) / cov.mc_se : 0.0);
  const double band = mdci::polar_band_integral(geom, theta);
  std::printf("auxiliary band integral: %.8f (target %.8f)\n", band, 1.0 - alpha);
  return 0;
}

int run_limitexp(long long n_draws, long long seed, double eps) {
  const mdci::GFunction g = mdci::builtin_product();
  const mdci::Mat eye = mdci::Mat::identity(2);
  const double cv = mdci::chi2_quantile(1, 0.95);
  const int n = static_cast<int>(n_draws);
  const mdci::RngStream rng(static_cast<std::uint64_t>(seed), 41);

  auto test = [cv](const mdci::Vec& x) {
    const double m = std::min(std::fabs(x[0]), std::fabs(x[1]));
    return m * m > cv;
  };
  using mdci::Vec;
  const std::vector<Vec> hs = {Vec{0.0, 0.0},       Vec{eps, 0.0},
                               Vec{0.0, eps},       Vec{std::sqrt(2.0), std::sqrt(2.0)},
                               Vec{std::sqrt(2.0) + eps / std::sqrt(2.0),
                                   std::sqrt(2.0) + eps / std::sqrt(2.0)}};
  const auto pts = mdci::power_curve(test, eye, hs, n, rng);
  std::printf("similar mediation test, rejection probabilities (n = %d):\n", n);
  for (const auto& p : pts)
    std::printf("  h = (%.4f, %.4f): %.5f +- %.5f\n", p.h[0], p.h[1], p.power, p.se);
  const double s1 = (pts[1].power - pts[0].power) / eps;
  const double s2 = (pts[2].power - pts[0].power) / eps;
  const double s3 = (pts[4].power - pts[3].power) / eps;
  std::printf("slope at 0 along (1,0): %+.5f  [cone direction: flat]\n", s1);
  std::printf("slope at 0 along (0,1): %+.5f  [cone direction: flat]\n", s2);
  std::printf("slope along (1,1)/sqrt2 at |h| = 2: %+.5f  [off-cone: rising]\n", s3);

  const int nks = std::min(100000, n);
  mdci::ShiftExperiment e1(eye, g, Vec{1.0, 0.0});
  mdci::ShiftExperiment e3(eye, g, Vec{3.0, 0.0});
  const auto a = mdci::plug_in_limit_sample(e1, nks, mdci::RngStream(seed, 42));
  const auto b = mdci::plug_in_limit_sample(e3, nks, mdci::RngStream(seed, 43));
  std::printf("KS distance, plug-in limit laws at h=(1,0) vs h=(3,0): %.4f (n = %d)\n",
              mdci::ks_distance(a, b), nks);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"minimum-distance confidence intervals under first-order degeneracy"};
  app.require_subcommand(1);

  auto* ci = app.add_subcommand("ci", "confidence intervals from a config file");
  std::string config_path, out_override;
  std::vector<std::string> methods;
  double alpha_override = -1.0, eta_override = -1.0;
  long long seed_override = -1;
  ci->add_option("--config", config_path, "config file path")->required();
  ci->add_option("--method", methods, "methods (default from config)");
  ci->add_option("--alpha", alpha_override, "level override");
  ci->add_option("--eta", eta_override, "first-step level override");
  ci->add_option("--seed", seed_override, "seed override");
  ci->add_option("--out", out_override, "output directory");

  auto* sim = app.add_subcommand("simulate", "Monte Carlo study");
  std::string preset = "paper", sim_out = "mc_out";
  bool quick = false;
  double theta2 = 2.0, corr = 0.0;
  int s_override = 0, threads = 2;
  long long sim_seed = 20240817;
  std::vector<std::string> sim_methods;
  sim->add_option("--preset", preset, "paper | single");
  sim->add_flag("--quick", quick, "S = 500 preset for fast runs");
  sim->add_option("--theta2", theta2, "theta2 for --preset single");
  sim->add_option("--corr", corr, "correlation r for --preset single");
  sim->add_option("--s", s_override, "replications for --preset single");
  sim->add_option("--seed", sim_seed, "seed");
  sim->add_option("--out", sim_out, "output directory");
  sim->add_option("--threads", threads, "worker threads");
  sim->add_option("--method", sim_methods, "methods subset");

  auto* geo = app.add_subcommand("geometry", "coverage geometry report");
  double rho = 0.0, tau = 1.0, theta1 = 0.0, galpha = 0.05;
  long long gn = 1000000, gseed = 20240817;
  int gthreads = 2;
  geo->add_option("--rho", rho, "rho in (-1, 1)");
  geo->add_option("--tau", tau, "tau >= 0");
  geo->add_option("--theta1", theta1, "first coordinate of the on-null center");
  geo->add_option("--alpha", galpha, "level");
  geo->add_option("--n-draws", gn, "Monte Carlo draws");
  geo->add_option("--seed", gseed, "seed");
  geo->add_option("--threads", gthreads, "worker threads");

  auto* lim = app.add_subcommand("limitexp", "limit-experiment demos");
  long long ln = 1000000, lseed = 20240817;
  double leps = 0.25;
  lim->add_option("--n-draws", ln, "draws per power point");
  lim->add_option("--seed", lseed, "seed");
  lim->add_option("--eps", leps, "finite-difference step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(ci))
      return run_ci(config_path, methods, alpha_override, eta_override, seed_override,
                    out_override);
    if (app.got_subcommand(sim))
      return run_simulate(preset, quick, theta2, corr, s_override, sim_seed, sim_out, threads,
                          sim_methods);
    if (app.got_subcommand(geo))
      return run_geometry(rho, tau, theta1, galpha, gn, gseed, gthreads);
    if (app.got_subcommand(lim)) return run_limitexp(ln, lseed, leps);
  } catch (const mdci::config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  }
  return 2;
}
