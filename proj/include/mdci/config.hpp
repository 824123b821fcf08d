#pragma once

// Flat structured config: [section] headers, key = value pairs, values are
// numbers, quoted strings, booleans, or one-level arrays of those. '#'
// starts a comment. This is the documented grammar for the CLI config files.

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "mdci/errors.hpp"
#include "mdci/linalg.hpp"
#include "mdci/types.hpp"

namespace mdci {

struct ConfigValue {
  std::variant<double, bool, std::string, std::vector<double>, std::vector<std::string>> v;
  int line = 0;

  double number(const std::string& key) const {
    if (auto* p = std::get_if<double>(&v)) return *p;
    throw config_error("field '" + key + "' must be a number", line);
  }
  bool boolean(const std::string& key) const {
    if (auto* p = std::get_if<bool>(&v)) return *p;
    throw config_error("field '" + key + "' must be a boolean", line);
  }
  std::string str(const std::string& key) const {
    if (auto* p = std::get_if<std::string>(&v)) return *p;
    throw config_error("field '" + key + "' must be a string", line);
  }
  std::vector<double> numbers(const std::string& key) const {
    if (auto* p = std::get_if<std::vector<double>>(&v)) return *p;
    if (auto* p = std::get_if<double>(&v)) return {*p};
    throw config_error("field '" + key + "' must be an array of numbers", line);
  }
  std::vector<std::string> strings(const std::string& key) const {
    if (auto* p = std::get_if<std::vector<std::string>>(&v)) return *p;
    if (auto* p = std::get_if<std::string>(&v)) return {*p};
    throw config_error("field '" + key + "' must be an array of strings", line);
  }
};

class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
  }

  static ConfigFile parse_string(const std::string& text) {
    ConfigFile cf;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string s = strip_comment(line);
      s = trim(s);
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']') throw config_error("unterminated section header", lineno);
        section = trim(s.substr(1, s.size() - 2));
        if (section.empty()) throw config_error("empty section name", lineno);
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw config_error("expected 'key = value'", lineno);
      const std::string key = trim(s.substr(0, eq));
      const std::string val = trim(s.substr(eq + 1));
      if (key.empty()) throw config_error("empty key", lineno);
      if (val.empty()) throw config_error("empty value for key '" + key + "'", lineno);
      cf.values_[section + "." + key] = parse_value(val, lineno);
    }
    return cf;
  }

  bool has(const std::string& section, const std::string& key) const {
    return values_.count(section + "." + key) > 0;
  }
  const ConfigValue& get(const std::string& section, const std::string& key) const {
    auto it = values_.find(section + "." + key);
    if (it == values_.end())
      throw config_error("missing required field '" + section + "." + key + "'");
    return it->second;
  }
  double number_or(const std::string& section, const std::string& key, double dflt) const {
    return has(section, key) ? get(section, key).number(key) : dflt;
  }

 private:
  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  static std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"') in_str = !in_str;
      if (s[i] == '#' && !in_str) return s.substr(0, i);
    }
    return s;
  }

  static ConfigValue parse_scalar(const std::string& tok, int lineno) {
    ConfigValue cv;
    cv.line = lineno;
    if (tok.size() >= 2 && tok.front() == '"' && tok.back() == '"') {
      cv.v = tok.substr(1, tok.size() - 2);
      return cv;
    }
    if (tok == "true") {
      cv.v = true;
      return cv;
    }
    if (tok == "false") {
      cv.v = false;
      return cv;
    }
    char* end = nullptr;
    const double d = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
      throw config_error("cannot parse value '" + tok + "'", lineno);
    cv.v = d;
    return cv;
  }

  static ConfigValue parse_value(const std::string& val, int lineno) {
    if (val.front() != '[') return parse_scalar(val, lineno);
    if (val.back() != ']') throw config_error("unterminated array", lineno);
    const std::string inner = val.substr(1, val.size() - 2);
    std::vector<std::string> toks;
    std::string cur;
    bool in_str = false;
    for (char ch : inner) {
      if (ch == '"') in_str = !in_str;
      if (ch == ',' && !in_str) {
        toks.push_back(trim(cur));
        cur.clear();
      } else {
        cur += ch;
      }
    }
    if (!trim(cur).empty()) toks.push_back(trim(cur));
    ConfigValue cv;
    cv.line = lineno;
    if (toks.empty()) {
      cv.v = std::vector<double>{};
      return cv;
    }
    if (toks.front().size() >= 1 && toks.front().front() == '"') {
      std::vector<std::string> out;
      for (const auto& t : toks) {
        ConfigValue s = parse_scalar(t, lineno);
        out.push_back(std::get<std::string>(s.v));
      }
      cv.v = std::move(out);
    } else {
      std::vector<double> out;
      for (const auto& t : toks) {
        ConfigValue s = parse_scalar(t, lineno);
        if (!std::holds_alternative<double>(s.v))
          throw config_error("mixed array element '" + t + "'", lineno);
        out.push_back(std::get<double>(s.v));
      }
      cv.v = std::move(out);
    }
    return cv;
  }

  std::map<std::string, ConfigValue> values_;
};

// Everything cmd_ci needs, assembled from a config file plus flag overrides.
struct AnalysisConfig {
  std::string g_name = "product";
  int monomial_power = 2;
  std::optional<Mat> quad_matrix;
  Vec theta_hat;
  Mat sigma_hat;
  double r_n = 1.0;
  Vec theta_star;
  double alpha = 0.05;
  double eta = 0.005;
  std::vector<Method> methods = {Method::BN1, Method::BN2, Method::Projection, Method::Wald};
  std::uint64_t seed = 20240817;
  int bn2_draws = 2000;
  std::string out_dir = ".";

  static AnalysisConfig from_file(const std::string& path) {
    const ConfigFile cf = ConfigFile::parse_file(path);
    AnalysisConfig ac;
    ac.g_name = cf.has("g", "name") ? cf.get("g", "name").str("name") : "product";
    if (ac.g_name == "custom")
      throw config_error("g.name = \"custom\" requires the library API, not the CLI");
    if (ac.g_name == "monomial")
      ac.monomial_power = static_cast<int>(cf.get("g", "power").number("power"));
    ac.theta_hat = cf.get("estimate", "theta_hat").numbers("theta_hat");
    const int d = static_cast<int>(ac.theta_hat.size());
    if (ac.g_name == "quadratic_form") {
      const std::vector<double> flat = cf.get("g", "a").numbers("a");
      if (static_cast<int>(flat.size()) != d * d)
        throw config_error("g.a must hold d*d entries row-major");
      Mat a(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = flat[i * d + j];
      ac.quad_matrix = a;
    }

    // exactly one covariance route: sigma_hat, or standard errors (directly
    // or via t-statistics) with a correlation
    const bool have_sigma = cf.has("estimate", "sigma_hat");
    const bool have_se = cf.has("estimate", "se") || cf.has("estimate", "t_stats");
    if (have_sigma == have_se)
      throw config_error(
          "provide exactly one of estimate.sigma_hat or estimate.se / estimate.t_stats");
    if (have_sigma) {
      const std::vector<double> flat = cf.get("estimate", "sigma_hat").numbers("sigma_hat");
      if (static_cast<int>(flat.size()) != d * d)
        throw config_error("estimate.sigma_hat must hold d*d entries row-major");
      ac.sigma_hat = Mat(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) ac.sigma_hat(i, j) = flat[i * d + j];
    } else {
      Vec se;
      if (cf.has("estimate", "se")) {
        se = cf.get("estimate", "se").numbers("se");
      } else {
        const Vec t = cf.get("estimate", "t_stats").numbers("t_stats");
        if (static_cast<int>(t.size()) != d)
          throw config_error("estimate.t_stats must match theta_hat length");
        se.resize(d);
        for (int i = 0; i < d; ++i) {
          if (t[i] == 0.0) throw config_error("estimate.t_stats entries must be nonzero");
          se[i] = std::fabs(ac.theta_hat[i] / t[i]);
        }
      }
      if (static_cast<int>(se.size()) != d)
        throw config_error("estimate.se must match theta_hat length");
      const double corr = cf.number_or("estimate", "correlation", 0.0);
      if (d != 2 && corr != 0.0)
        throw config_error("estimate.correlation is only supported for d = 2");
      ac.sigma_hat = Mat(d, d);
      for (int i = 0; i < d; ++i) ac.sigma_hat(i, i) = se[i] * se[i];
      if (d == 2) {
        ac.sigma_hat(0, 1) = ac.sigma_hat(1, 0) = corr * se[0] * se[1];
      }
    }

    // r_n = 1 with SEs absorbed into sigma by default; a sample size n sets
    // r_n = sqrt(n) and reads sigma as per-observation
    if (cf.has("estimate", "n") && cf.has("estimate", "r_n"))
      throw config_error("provide at most one of estimate.n and estimate.r_n");
    if (cf.has("estimate", "n"))
      ac.r_n = std::sqrt(cf.get("estimate", "n").number("n"));
    else
      ac.r_n = cf.number_or("estimate", "r_n", 1.0);

    if (cf.has("estimate", "theta_star"))
      ac.theta_star = cf.get("estimate", "theta_star").numbers("theta_star");
    else
      ac.theta_star = Vec(d, 0.0);

    ac.alpha = cf.number_or("inference", "alpha", 0.05);
    ac.eta = cf.number_or("inference", "eta", ac.alpha / 10.0);
    ac.seed = static_cast<std::uint64_t>(cf.number_or("inference", "seed", 20240817.0));
    ac.bn2_draws = static_cast<int>(cf.number_or("inference", "b_draws", 2000.0));
    if (cf.has("inference", "methods")) {
      ac.methods.clear();
      for (const auto& s : cf.get("inference", "methods").strings("methods"))
        ac.methods.push_back(method_from_name(s));
    }
    if (cf.has("inference", "out")) ac.out_dir = cf.get("inference", "out").str("out");
    return ac;
  }
};

}  // namespace mdci
