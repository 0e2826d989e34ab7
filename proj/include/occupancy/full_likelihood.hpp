#pragma once

// Joint maximum likelihood over (alpha, beta), the baseline the two-stage
// estimator is compared against.

#include <optional>

#include "occupancy/core_model.hpp"
#include "occupancy/numerics.hpp"

namespace occupancy {

struct FullFitOptions {
  OptimOptions optim{.max_iter = 1000, .grad_tol = 1e-6, .step_tol = 1e-14};
  /// Retry from the two-stage estimate when the zero start does not converge.
  bool restart_from_two_stage = true;
  double extreme_threshold = 30.0;
};

struct FullFit {
  VectorXd alpha_hat;
  VectorXd beta_hat;
  MatrixXd var_joint;  // (p+q) x (p+q); NaN when the information is singular
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  bool extreme_flag = false;
  bool restarted = false;
};

/// Quasi-Newton maximisation from the zero vector. When `restart` is given it
/// is used as the second start; otherwise the two-stage estimate is computed on
/// demand.
FullFit fit_full(const Dataset& data, const FullFitOptions& opts = {},
                 std::optional<Coefficients> restart = std::nullopt);

/// Observed information -d2l/d(alpha,beta)^2 by differencing the analytic score.
MatrixXd full_observed_information(const Dataset& data, const Coefficients& coefs);

}  // namespace occupancy
