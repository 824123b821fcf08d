#pragma once

#include <cmath>

#include "mdci/linalg.hpp"
#include "mdci/rng.hpp"

namespace mdci_test {

// random 2x2 SPD with eigenvalues in [lo, hi]
inline mdci::Mat random_spd2(mdci::RngStream& rng, double lo, double hi) {
  const double a = 2.0 * 3.14159265358979323846 * rng.uniform01();
  const double l1 = lo + (hi - lo) * rng.uniform01();
  const double l2 = lo + (hi - lo) * rng.uniform01();
  const double c = std::cos(a), s = std::sin(a);
  return mdci::Mat{{c * c * l1 + s * s * l2, c * s * (l1 - l2)},
                   {c * s * (l1 - l2), s * s * l1 + c * c * l2}};
}

}  // namespace mdci_test
