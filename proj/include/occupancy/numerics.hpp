#pragma once

// Small dense optimisation and linear-algebra kernels.

#include <functional>
#include <optional>

#include <Eigen/Dense>

#include "occupancy/error.hpp"

namespace occupancy {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

using ObjectiveFn = std::function<double(const VectorXd&)>;
using GradientFn = std::function<VectorXd(const VectorXd&)>;
using HessianFn = std::function<MatrixXd(const VectorXd&)>;

enum class Termination { GradientTol, StepTol, MaxIter, LineSearchFail };

const char* to_string(Termination t) noexcept;

struct OptimResult {
  VectorXd argmax;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  Termination termination = Termination::MaxIter;
};

struct OptimOptions {
  int max_iter = 100;
  double grad_tol = 1e-8;
  double step_tol = 1e-14;
};

/// Central-difference gradient; the default step is cbrt(eps) * max(1, |x_i|).
VectorXd fd_gradient(const ObjectiveFn& f, const VectorXd& x, std::optional<double> h = {});

/// Central-difference Jacobian of a vector function, one column per coordinate.
MatrixXd fd_jacobian(const GradientFn& g, const VectorXd& x, std::optional<double> h = {});

/// Damped Newton ascent with Armijo backtracking and ridge repair of the Hessian.
OptimResult newton_maximize(const ObjectiveFn& f, const GradientFn& grad, const HessianFn& hess,
                            const VectorXd& x0, const OptimOptions& opts = {});

/// BFGS ascent sharing the line search of newton_maximize. The inverse Hessian
/// approximation starts at I / (1 + |grad(x0)|).
OptimResult quasi_newton_maximize(const ObjectiveFn& f, const GradientFn& grad,
                                  const VectorXd& x0, const OptimOptions& opts = {});

/// Solves A X = B for symmetric positive definite A by Cholesky. Throws
/// NotPositiveDefinite when a pivot falls to 1e-12 * max diag(A) or below.
MatrixXd solve_spd(const MatrixXd& A, const MatrixXd& B);
VectorXd solve_spd(const MatrixXd& A, const VectorXd& b);

/// Inverse of an SPD matrix via solve_spd, symmetrised.
MatrixXd inverse_spd(const MatrixXd& A);

/// Numerical column rank (column-pivoting QR).
Index column_rank(const MatrixXd& A);

}  // namespace occupancy
