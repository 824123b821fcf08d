#pragma once

// Inputs consumed by every test: the estimate, its covariance on the
// r_n(theta_hat - theta) scale, the rate, and the degeneracy point.

#include <sstream>
#include <stdexcept>

#include "mdci/linalg.hpp"

namespace mdci {

struct EstimateInput {
  Vec theta_hat;
  Mat sigma_hat;
  double r_n = 1.0;
  Vec theta_star;

  EstimateInput(Vec theta_hat_, Mat sigma_hat_, double r_n_, Vec theta_star_)
      : theta_hat(std::move(theta_hat_)),
        sigma_hat(std::move(sigma_hat_)),
        r_n(r_n_),
        theta_star(std::move(theta_star_)) {
    validate();
  }

  int d() const { return static_cast<int>(theta_hat.size()); }

 private:
  void validate() const {
    const int n = static_cast<int>(theta_hat.size());
    // d = 1 admitted for scalar transformations (monomial); only the modules
    // that accept d = 1 consume such inputs.
    if (n < 1) throw std::domain_error("EstimateInput: empty theta_hat");
    if (static_cast<int>(theta_star.size()) != n)
      throw std::domain_error("EstimateInput: theta_star dimension mismatch");
    if (sigma_hat.rows() != n || sigma_hat.cols() != n)
      throw std::domain_error("EstimateInput: sigma_hat dimension mismatch");
    if (!(r_n > 0.0)) throw std::domain_error("EstimateInput: r_n must be positive");
    if (asymmetry(sigma_hat) > 1e-12 * std::max(1.0, max_abs(sigma_hat)))
      throw std::domain_error("EstimateInput: sigma_hat not symmetric within 1e-12");
    const SymEig e = sym_eig(sigma_hat);
    if (e.values.back() < 1e-10 || e.values.front() > 1e10) {
      std::ostringstream os;
      os << "EstimateInput: sigma_hat eigenvalues [" << e.values.back() << ", "
         << e.values.front() << "] outside [1e-10, 1e10]";
      throw std::domain_error(os.str());
    }
  }
};

}  // namespace mdci
