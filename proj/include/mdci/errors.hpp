#pragma once

#include <stdexcept>
#include <string>

namespace mdci {

// No point on the null manifold exists in the search region. Distinct from
// solver non-convergence, which is reported through result flags.
struct infeasible_error : std::runtime_error {
  explicit infeasible_error(const std::string& what) : std::runtime_error(what) {}
};

struct not_implemented_error : std::runtime_error {
  explicit not_implemented_error(const std::string& what) : std::runtime_error(what) {}
};

struct config_error : std::runtime_error {
  config_error(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_number(line) {}
  int line_number;
};

}  // namespace mdci
