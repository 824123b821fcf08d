// Acceptance suite: one [PASS]/[FAIL] line per criterion, exit code equal to
// the number of failures. MDCI_ACCEPT_FULL=1 selects the full S = 2000 study
// (rejection threshold 0.0646); the default quick preset uses S = 500 with
// the widened threshold 0.0793. MDCI_THREADS overrides the worker count.
// Runtime budgets are stated for 8 cores; measured wall time is normalized
// by (threads / 8) and both numbers are printed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mdci/critval.hpp"
#include "mdci/geometry.hpp"
#include "mdci/invert.hpp"
#include "mdci/limitexp.hpp"
#include "mdci/mc.hpp"
#include "mdci/mdstat.hpp"
#include "mdci/prob.hpp"
#include "mdci/report.hpp"

using namespace mdci;

namespace {

int g_failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %s%s%s\n", pass ? "PASS" : "FAIL", name.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

int env_threads() {
  if (const char* s = std::getenv("MDCI_THREADS")) return std::max(1, std::atoi(s));
  return std::max(1u, std::thread::hardware_concurrency());
}

bool env_full() {
  const char* s = std::getenv("MDCI_ACCEPT_FULL");
  return s && std::strcmp(s, "0") != 0;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

EstimateInput table1_input(double th1, double t1, double th2, double t2) {
  const double se1 = std::fabs(th1 / t1), se2 = std::fabs(th2 / t2);
  Mat sigma(2, 2);
  sigma(0, 0) = se1 * se1;
  sigma(1, 1) = se2 * se2;
  return EstimateInput(Vec{th1, th2}, sigma, 1.0, Vec{0.0, 0.0});
}

// ---------------------------------------------------------------- criterion 1
void criterion_table2(int threads) {
  Timer timer;
  struct Row {
    const char* name;
    double th1, t1, th2, t2;
    double bn1_lo, bn1_hi, proj_lo, proj_hi, bn2_lo, bn2_hi;
  };
  const std::vector<Row> rows = {
      {"full", 0.199, 3.140, -0.119, -5.343, -0.042, -0.010, -0.048, -0.006, -0.044, -0.010},
      {"1yr", 0.256, 2.052, -0.097, -1.941, -0.071, -0.001, -0.085, 0.007, -0.075, 0.001},
      {"23yr", 0.109, 1.065, -0.125, -4.163, -0.042, 0.010, -0.052, 0.018, -0.046, 0.012},
      {"4yr", 0.064, 0.513, -0.113, -1.931, -0.045, 0.025, -0.059, 0.037, -0.049, 0.027},
  };
  const GFunction g = builtin_product();
  bool pass = true;
  std::ostringstream detail;
  for (const auto& row : rows) {
    const EstimateInput in = table1_input(row.th1, row.t1, row.th2, row.t2);
    const ConfidenceInterval bn1 = invert_test(g, in, Method::BN1, 0.05);
    const ConfidenceInterval proj = invert_test(g, in, Method::Projection, 0.05);
    InvertConfig cfg;
    cfg.bn2 = Bn2Config::with_alpha(0.05, RngStream(20240817, 33), 2000);
    const ConfidenceInterval bn2 = invert_test(g, in, Method::BN2, 0.05, cfg);
    struct Check {
      const char* tag;
      double got, want, tol;
    };
    const std::vector<Check> checks = {
        {"BN1.lo", bn1.lower, row.bn1_lo, 0.002},   {"BN1.hi", bn1.upper, row.bn1_hi, 0.002},
        {"Proj.lo", proj.lower, row.proj_lo, 0.002}, {"Proj.hi", proj.upper, row.proj_hi, 0.002},
        {"BN2.lo", bn2.lower, row.bn2_lo, 0.003},   {"BN2.hi", bn2.upper, row.bn2_hi, 0.003},
    };
    for (const auto& c : checks) {
      const double delta = std::fabs(c.got - c.want);
      const bool ok = delta <= c.tol + 1e-12;
      if (!ok) {
        pass = false;
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%s %s: got %.4f vs printed %.3f (|delta| %.4f > %.3f); ",
                      row.name, c.tag, c.got, c.want, delta, c.tol);
        detail << buf;
      }
    }
  }
  const double secs = timer.seconds();
  char buf[128];
  std::snprintf(buf, sizeof(buf), "runtime %.1f s (budget 10 s, %d threads)", secs, threads);
  detail << buf;
  if (secs > 10.0) pass = false;
  report("table-2 reproduction: BN1/Proj within 0.002, BN2 within 0.003, all four groups", pass,
         detail.str());
}

// ------------------------------------------------------------ criteria 2 to 4
void criteria_mc(int threads, bool full) {
  const int s_reps = full ? 2000 : 500;
  const double threshold = full ? 0.0646 : 0.0793;
  const double alpha = 0.05, eta = 0.005;
  const double se = std::sqrt(alpha * (1.0 - alpha) / s_reps);

  auto make_design = [&](int id, double theta2, double r, std::vector<double> ratios) {
    MCDesign d;
    d.design_id = id;
    d.theta2 = theta2;
    d.r = r;
    d.theta1_ratio_grid = std::move(ratios);
    d.alpha = alpha;
    d.eta = eta;
    d.S = s_reps;
    d.methods = {Method::BN1, Method::BN2, Method::Projection, Method::Wald};
    d.seed = 20240817;
    d.n_threads = threads;
    return d;
  };
  const std::vector<double> full_grid = {-1.0, -0.8, -0.6, -0.4, -0.2, 0.0,
                                         0.2,  0.4,  0.6,  0.8,  1.0};

  std::vector<MCCell> cells;
  double design0_min = 0.0;
  for (const MCDesign& d : {make_design(0, 2.0, 0.0, full_grid),
                            make_design(1, 2.0, 0.5, full_grid),
                            make_design(2, 6.0, 0.0, {1.0})}) {
    std::fprintf(stderr, "  [mc] design %d (theta2=%g, r=%g, S=%d)...\n", d.design_id, d.theta2,
                 d.r, d.S);
    Timer timer;
    const auto part = run_design(d);
    if (d.design_id == 0) design0_min = timer.seconds() / 60.0;
    cells.insert(cells.end(), part.begin(), part.end());
  }
  const double wall_min = design0_min;  // the budget covers the size-control design
  const double norm_min = wall_min * threads / 8.0;

  auto cell_rate = [&](int id, double ratio, Method m) -> const MCCell& {
    for (const auto& c : cells)
      if (c.design_id == id && c.method == m &&
          std::fabs(c.theta1 / c.theta2 - ratio) < 1e-12)
        return c;
    throw std::logic_error("missing cell");
  };

  // criterion 2: size control on (theta2 = 2, r = 0), plus Wald overrejection
  {
    bool pass = true;
    std::ostringstream detail;
    double worst = 0.0;
    for (double ratio : full_grid)
      for (Method m : {Method::BN1, Method::BN2, Method::Projection}) {
        const double rate = cell_rate(0, ratio, m).reject_truth;
        worst = std::max(worst, rate);
        if (rate > threshold) {
          pass = false;
          char buf[96];
          std::snprintf(buf, sizeof(buf), "%s at ratio %+.1f rejects %.4f > %.4f; ",
                        method_name(m), ratio, rate, threshold);
          detail << buf;
        }
      }
    const double wald_rate = cell_rate(0, 1.0, Method::Wald).reject_truth;
    if (!(wald_rate > threshold)) {
      pass = false;
      detail << "Wald at (2,2) rejects only " << wald_rate << "; ";
    }
    char buf[192];
    std::snprintf(buf, sizeof(buf),
                  "S=%d thr=%.4f worstMD=%.4f wald(2,2)=%.4f; MC wall %.1f min on %d threads "
                  "(normalized to 8 cores: %.1f min, budget %.0f min)",
                  s_reps, threshold, worst, wald_rate, wall_min, threads, norm_min,
                  full ? 30.0 : 5.0);
    detail << buf;
    if (norm_min > (full ? 30.0 : 5.0)) pass = false;
    report("size control on (theta2=2, r=0): MD rejection at truth within threshold at every "
           "grid point; Wald overrejects at (2,2)",
           pass, detail.str());
  }

  // criterion 3: BN2 far-from-origin calibration at (6, 6)
  {
    const double rate = cell_rate(2, 1.0, Method::BN2).reject_truth;
    const double lo = alpha - eta - 3.0 * se, hi = alpha + 3.0 * se;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "rejection at truth %.4f, window [%.4f, %.4f]", rate, lo, hi);
    report("BN2 far-from-origin calibration at (theta2=6, theta1=6, r=0)",
           rate >= lo && rate <= hi, buf);
  }

  // criterion 4: median-length structure
  {
    bool pass = true;
    std::ostringstream detail;
    for (const auto& c : cells) {
      if (c.method != Method::BN1) continue;
      const double bn1 = c.median_len;
      double bn2 = 0.0, proj = 0.0;
      for (const auto& o : cells)
        if (o.design_id == c.design_id && o.theta1 == c.theta1) {
          if (o.method == Method::BN2) bn2 = o.median_len;
          if (o.method == Method::Projection) proj = o.median_len;
        }
      if (!(bn1 <= bn2 + 0.02 && bn2 <= proj + 0.02)) {
        pass = false;
        char buf[128];
        std::snprintf(buf, sizeof(buf), "ordering fails at design %d theta1 %+.1f (%.3f/%.3f/%.3f); ",
                      c.design_id, c.theta1, bn1, bn2, proj);
        detail << buf;
      }
      if (c.theta2 == 2.0) {
        const double infl = proj / bn1 - 1.0;
        if (!(infl >= 0.12 && infl <= 0.37)) {
          pass = false;
          char buf[128];
          std::snprintf(buf, sizeof(buf),
                        "Proj/BN1 inflation %.3f outside [0.12, 0.37] at design %d theta1 %+.1f; ",
                        infl, c.design_id, c.theta1);
          detail << buf;
        }
      }
    }
    if (pass) detail << "BN1 <= BN2+0.02 <= Proj+0.04 at every cell point; inflation in band";
    report("median-length structure and Projection-vs-BN1 inflation", pass, detail.str());
  }
}

// ---------------------------------------------------------------- criterion 5
void criterion_geometry(int threads) {
  const double c = std::sqrt(chi2_quantile(1, 0.95));
  struct Config {
    double rho, tau, theta1;
  };
  const std::vector<Config> configs = {
      {0.0, 25.0, 0.0}, {0.5, 0.1, 0.0},  {0.0, 0.0, 0.0},  {0.0, 0.0, 2.0},
      {0.5, 0.0, 1.0},  {0.3, 1.0, 0.5},  {0.8, 2.0, 1.0},  {0.0, 4.0, 1.0},
      {-0.3, 25.0, 0.0}, {-0.3, 25.0, 3.0}, {0.5, 4.0, 0.0}, {0.9, 0.5, 0.2},
  };
  bool pass = true;
  std::ostringstream detail;
  for (std::size_t k = 0; k < configs.size(); ++k) {
    const HyperbolaGeometry geom(configs[k].rho, configs[k].tau, c);
    if (!geom.prop1_condition()) {
      pass = false;
      detail << "config " << k << " violates the coverage conditions; ";
      continue;
    }
    const std::array<double, 2> theta{configs[k].theta1, x2_branch(geom, configs[k].theta1)};
    const CoverageEstimate cov =
        coverage_probability(geom, theta, 1000000, RngStream(909090, k), threads);
    const double polar = polar_coverage_integral(geom, theta);
    const double band = polar_band_integral(geom, theta);
    const bool cov_ok = cov.estimate >= 0.95 - 3.0 * cov.mc_se;
    const bool polar_ok = std::fabs(polar - cov.estimate) <= 3.0 * cov.mc_se;
    const bool band_ok = std::fabs(band - 0.95) <= 1e-4;
    if (!(cov_ok && polar_ok && band_ok)) {
      pass = false;
      char buf[192];
      std::snprintf(buf, sizeof(buf),
                    "(rho=%.1f tau=%.1f th1=%.1f): cov %.5f (se %.5f) polar %.5f band-err %.2e; ",
                    configs[k].rho, configs[k].tau, configs[k].theta1, cov.estimate, cov.mc_se,
                    polar, std::fabs(band - 0.95));
      detail << buf;
    }
  }
  if (pass) detail << "12 configurations: MC >= 0.95 - 3se, polar within 3se, band within 1e-4";
  report("coverage-geometry oracle across 12 admissible configurations", pass, detail.str());
}

// ---------------------------------------------------------------- criterion 6
void criterion_solver_oracle() {
  RngStream rng(1234321, 0);
  bool pass = true;
  std::ostringstream detail;
  int done = 0, attempts = 0;
  while (done < 100 && attempts < 400) {
    ++attempts;
    const bool use_product = rng.uniform01() < 0.5;
    const GFunction g =
        use_product ? builtin_product() : builtin_quadratic_form(Mat{{1.0, 0.3}, {0.3, 0.8}});
    const Vec th{10.0 * rng.uniform01() - 5.0, 10.0 * rng.uniform01() - 5.0};
    const double a = 2.0 * 3.14159265358979323846 * rng.uniform01();
    const double l1 = 0.5 + 1.5 * rng.uniform01(), l2 = 0.5 + 1.5 * rng.uniform01();
    const double ca = std::cos(a), sa = std::sin(a);
    const Mat sigma{{ca * ca * l1 + sa * sa * l2, ca * sa * (l1 - l2)},
                    {ca * sa * (l1 - l2), sa * sa * l1 + ca * ca * l2}};
    const EstimateInput in(th, sigma, 1.0, Vec{0.0, 0.0});
    const double ghat = g.eval(th);
    const double tau = ghat + (rng.uniform01() - 0.5) * (1.0 + std::fabs(ghat));
    double oracle;
    try {
      oracle = md_statistic_grid_oracle(g, in, tau);
    } catch (const infeasible_error&) {
      continue;
    }
    const double stat = md_statistic(g, in, tau).statistic;
    const double rel_hi = (stat - oracle) / (1.0 + oracle);
    const double rel_lo = (oracle - stat) / (1.0 + oracle);
    if (rel_hi > 1e-9 || rel_lo > 1e-3) {
      pass = false;
      char buf[128];
      std::snprintf(buf, sizeof(buf), "instance %d: solver %.6f oracle %.6f; ", done, stat,
                    oracle);
      detail << buf;
    }
    ++done;
  }
  if (done < 100) {
    pass = false;
    detail << "only " << done << " feasible instances; ";
  }

  RngStream rng2(777111, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec th{8.0 * rng2.uniform01() - 4.0, 8.0 * rng2.uniform01() - 4.0};
    Mat s(2, 2);
    s(0, 0) = 0.3 + 2.0 * rng2.uniform01();
    s(1, 1) = 0.3 + 2.0 * rng2.uniform01();
    const double tau = 3.0 * rng2.uniform01() - 1.5;
    const double closed = mediation_closed_form(th, s, 1.0, tau).statistic;
    const double solved =
        md_statistic(builtin_product(), EstimateInput(th, s, 1.0, Vec{0.0, 0.0}), tau).statistic;
    if (std::fabs(closed - solved) > 1e-8 * (1.0 + solved)) {
      pass = false;
      char buf[128];
      std::snprintf(buf, sizeof(buf), "closed form %.10f vs solver %.10f; ", closed, solved);
      detail << buf;
    }
  }
  if (pass) detail << "100 grid-oracle instances within 1e-3; 50 closed-form instances within 1e-8";
  report("solver-oracle equivalence (grid oracle and mediation closed form)", pass, detail.str());
}

// ---------------------------------------------------------------- criterion 7
void criterion_flat_power() {
  const double cv = chi2_quantile(1, 0.95);
  auto test = [cv](const Vec& x) {
    const double m = std::min(std::fabs(x[0]), std::fabs(x[1]));
    return m * m > cv;
  };
  const double eps = 0.25;
  const int n = 1000000;
  const std::vector<Vec> hs = {Vec{0.0, 0.0},
                               Vec{eps, 0.0},
                               Vec{0.0, eps},
                               Vec{std::sqrt(2.0), std::sqrt(2.0)},
                               Vec{std::sqrt(2.0) + eps / std::sqrt(2.0),
                                   std::sqrt(2.0) + eps / std::sqrt(2.0)}};
  const auto pts = power_curve(test, Mat::identity(2), hs, n, RngStream(5556, 0));
  const double s1 = std::fabs(pts[1].power - pts[0].power) / eps;
  const double s2 = std::fabs(pts[2].power - pts[0].power) / eps;
  const double s3 = (pts[4].power - pts[3].power) / eps;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "|slope(1,0)| %.4f, |slope(0,1)| %.4f (budget 0.02); off-cone slope %.4f "
                "(needs >= 0.05); n=1e6 eps=0.25",
                s1, s2, s3);
  report("flat power along the cone for the similar mediation test",
         s1 <= 0.02 && s2 <= 0.02 && s3 >= 0.05, buf);
}

// ---------------------------------------------------------------- criterion 8
void criterion_nonregularity() {
  const GFunction g = builtin_product();
  const ShiftExperiment e1(Mat::identity(2), g, Vec{1.0, 0.0});
  const ShiftExperiment e3(Mat::identity(2), g, Vec{3.0, 0.0});
  const auto a = plug_in_limit_sample(e1, 100000, RngStream(8642, 1));
  const auto b = plug_in_limit_sample(e3, 100000, RngStream(8642, 2));
  const double ks = ks_distance(a, b);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "KS distance %.4f (needs > 0.05), n = 1e5", ks);
  report("non-regularity of the plug-in limit law across shifts", ks > 0.05, buf);
}

// ---------------------------------------------------------------- criterion 9
void criterion_determinism() {
  bool pass = true;
  std::ostringstream detail;

  MCDesign d;
  d.theta2 = 2.0;
  d.theta1_ratio_grid = {0.0, 1.0};
  d.S = 100;
  d.methods = {Method::BN1, Method::Projection, Method::Wald, Method::NaiveBoot};
  d.seed = 4242;
  d.boot_draws = 500;
  d.scan_points = 200;
  auto csv_of = [](const std::vector<MCCell>& cells) {
    std::ostringstream os;
    for (const auto& c : cells)
      os << c.design_id << ',' << csv_double(c.theta1) << ',' << method_name(c.method) << ','
         << csv_double(c.reject_truth) << ',' << csv_double(c.reject_zero) << ','
         << csv_double(c.median_len) << '\n';
    return os.str();
  };
  d.n_threads = 1;
  const std::string run1 = csv_of(run_design(d));
  d.n_threads = 8;
  const std::string run8 = csv_of(run_design(d));
  if (run1 != run8) {
    pass = false;
    detail << "MC results differ between 1 and 8 threads; ";
  }

  const GFunction g = builtin_product();
  const EstimateInput in = table1_input(0.199, 3.140, -0.119, -5.343);
  InvertConfig cfg;
  cfg.bn2 = Bn2Config::with_alpha(0.05, RngStream(99, 5));
  const ConfidenceInterval c1 = invert_test(g, in, Method::BN2, 0.05, cfg);
  const ConfidenceInterval c2 = invert_test(g, in, Method::BN2, 0.05, cfg);
  if (c1.lower != c2.lower || c1.upper != c2.upper) {
    pass = false;
    detail << "BN2 inversion not reproducible; ";
  }

  const HyperbolaGeometry geom(0.0, 1.0, std::sqrt(chi2_quantile(1, 0.95)));
  const std::array<double, 2> theta{0.0, x2_branch(geom, 0.0)};
  const auto g1 = coverage_probability(geom, theta, 300000, RngStream(7, 7), 1);
  const auto g8 = coverage_probability(geom, theta, 300000, RngStream(7, 7), 8);
  if (g1.estimate != g8.estimate) {
    pass = false;
    detail << "coverage MC differs across thread counts; ";
  }
  if (pass) detail << "MC, BN2 inversion, and coverage MC byte-identical across seeds/threads";
  report("determinism under fixed seed and thread count in {1, 8}", pass, detail.str());
}

}  // namespace

int main() {
  const int threads = env_threads();
  const bool full = env_full();
  std::printf("acceptance suite: %s preset, %d worker threads\n", full ? "full" : "quick",
              threads);
  Timer total;

  criterion_table2(threads);
  criteria_mc(threads, full);
  criterion_geometry(threads);
  criterion_solver_oracle();
  criterion_flat_power();
  criterion_nonregularity();
  criterion_determinism();

  std::printf("acceptance finished in %.1f min with %d failure(s)\n", total.seconds() / 60.0,
              g_failures);
  return g_failures;
}
