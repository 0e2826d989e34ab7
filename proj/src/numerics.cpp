#include "occupancy/numerics.hpp"

#include <cmath>
#include <limits>

namespace occupancy {

const char* to_string(Termination t) noexcept {
  switch (t) {
    case Termination::GradientTol: return "GradientTol";
    case Termination::StepTol: return "StepTol";
    case Termination::MaxIter: return "MaxIter";
    case Termination::LineSearchFail: return "LineSearchFail";
  }
  return "Unknown";
}

VectorXd fd_gradient(const ObjectiveFn& f, const VectorXd& x, std::optional<double> h) {
  const double base = h.value_or(std::cbrt(std::numeric_limits<double>::epsilon()));
  VectorXd g(x.size());
  VectorXd xp = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double step = base * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + step;
    const double fp = f(xp);
    xp(i) = x(i) - step;
    const double fm = f(xp);
    xp(i) = x(i);
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw Error(ErrorCode::NonFiniteEvaluation,
                  "objective is not finite near coordinate " + std::to_string(i));
    g(i) = (fp - fm) / (2.0 * step);
  }
  return g;
}

MatrixXd fd_jacobian(const GradientFn& g, const VectorXd& x, std::optional<double> h) {
  const double base = h.value_or(std::cbrt(std::numeric_limits<double>::epsilon()));
  VectorXd xp = x;
  MatrixXd jac;
  for (Index i = 0; i < x.size(); ++i) {
    const double step = base * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + step;
    const VectorXd gp = g(xp);
    xp(i) = x(i) - step;
    const VectorXd gm = g(xp);
    xp(i) = x(i);
    if (!gp.allFinite() || !gm.allFinite())
      throw Error(ErrorCode::NonFiniteEvaluation,
                  "gradient is not finite near coordinate " + std::to_string(i));
    if (i == 0) jac.resize(gp.size(), x.size());
    jac.col(i) = (gp - gm) / (2.0 * step);
  }
  return jac;
}

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kMinStep = 1e-14;

// Cholesky factor of A, or nothing when a pivot is not clearly positive.
std::optional<Eigen::LLT<MatrixXd>> checked_llt(const MatrixXd& A) {
  const double max_diag = A.diagonal().maxCoeff();
  if (!(max_diag > 0.0)) return std::nullopt;
  Eigen::LLT<MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const auto L = llt.matrixL();
  const MatrixXd Lm = L;
  for (Index i = 0; i < A.rows(); ++i)
    if (!(Lm(i, i) * Lm(i, i) > 1e-12 * max_diag)) return std::nullopt;
  return llt;
}

struct StepOutcome {
  bool accepted = false;
  VectorXd x;
  double fx = 0.0;
  VectorXd g;
};

// Backtracking from a unit step. A step that is flat to round-off is also
// accepted when it shrinks the gradient, otherwise optimisation stalls short of
// the gradient tolerance on large sums.
StepOutcome line_search(const ObjectiveFn& f, const GradientFn& grad, const VectorXd& x,
                        double fx, const VectorXd& g, const VectorXd& d) {
  const double slope = g.dot(d);
  const double gnorm = g.lpNorm<Eigen::Infinity>();
  const double flat = 1e-13 * (1.0 + std::abs(fx));
  for (double t = 1.0; t >= kMinStep; t *= 0.5) {
    VectorXd xn = x + t * d;
    const double fn = f(xn);
    if (!std::isfinite(fn)) continue;
    if (fn >= fx + kArmijo * t * slope) {
      VectorXd gn = grad(xn);
      return {true, std::move(xn), fn, std::move(gn)};
    }
    if (fn >= fx - flat) {
      VectorXd gn = grad(xn);
      if (gn.lpNorm<Eigen::Infinity>() < gnorm) return {true, std::move(xn), fn, std::move(gn)};
    }
  }
  return {};
}

double step_scale(const VectorXd& x) { return 1.0 + x.lpNorm<Eigen::Infinity>(); }

}  // namespace

OptimResult newton_maximize(const ObjectiveFn& f, const GradientFn& grad, const HessianFn& hess,
                            const VectorXd& x0, const OptimOptions& opts) {
  OptimResult res;
  res.argmax = x0;
  res.value = f(x0);
  if (!std::isfinite(res.value))
    throw Error(ErrorCode::NonFiniteEvaluation, "objective is not finite at the start point");
  VectorXd g = grad(x0);
  const Index n = x0.size();

  for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations) {
    res.gradient_norm = g.lpNorm<Eigen::Infinity>();
    if (res.gradient_norm <= opts.grad_tol) {
      res.converged = true;
      res.termination = Termination::GradientTol;
      return res;
    }

    const MatrixXd neg_h = -hess(res.argmax);
    VectorXd d;
    auto llt = checked_llt(neg_h);
    if (!llt) {
      double ridge = 1e-8 * (1.0 + neg_h.diagonal().cwiseAbs().maxCoeff());
      for (int k = 0; k <= 10 && !llt; ++k, ridge *= 2.0)
        llt = checked_llt(neg_h + ridge * MatrixXd::Identity(n, n));
    }
    d = llt ? VectorXd(llt->solve(g)) : g;

    StepOutcome step = line_search(f, grad, res.argmax, res.value, g, d);
    if (!step.accepted) {
      res.termination = Termination::LineSearchFail;
      return res;
    }
    const double moved = (step.x - res.argmax).lpNorm<Eigen::Infinity>();
    res.argmax = std::move(step.x);
    res.value = step.fx;
    g = std::move(step.g);
    if (moved <= opts.step_tol * step_scale(res.argmax)) {
      ++res.iterations;
      res.gradient_norm = g.lpNorm<Eigen::Infinity>();
      res.converged = res.gradient_norm <= opts.grad_tol;
      res.termination = res.converged ? Termination::GradientTol : Termination::StepTol;
      return res;
    }
  }
  res.gradient_norm = g.lpNorm<Eigen::Infinity>();
  res.converged = res.gradient_norm <= opts.grad_tol;
  res.termination = res.converged ? Termination::GradientTol : Termination::MaxIter;
  return res;
}

OptimResult quasi_newton_maximize(const ObjectiveFn& f, const GradientFn& grad,
                                  const VectorXd& x0, const OptimOptions& opts) {
  OptimResult res;
  res.argmax = x0;
  res.value = f(x0);
  if (!std::isfinite(res.value))
    throw Error(ErrorCode::NonFiniteEvaluation, "objective is not finite at the start point");
  VectorXd g = grad(x0);
  const Index n = x0.size();
  const MatrixXd seed = MatrixXd::Identity(n, n) / (1.0 + g.norm());
  MatrixXd hinv = seed;

  for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations) {
    res.gradient_norm = g.lpNorm<Eigen::Infinity>();
    if (res.gradient_norm <= opts.grad_tol) {
      res.converged = true;
      res.termination = Termination::GradientTol;
      return res;
    }

    VectorXd d = hinv * g;
    if (!(g.dot(d) > 0.0)) {
      hinv = seed;
      d = hinv * g;
    }
    StepOutcome step = line_search(f, grad, res.argmax, res.value, g, d);
    if (!step.accepted && hinv != seed) {
      // Stale curvature: retry along the scaled gradient before giving up.
      hinv = seed;
      d = hinv * g;
      step = line_search(f, grad, res.argmax, res.value, g, d);
    }
    if (!step.accepted) {
      res.termination = Termination::LineSearchFail;
      return res;
    }

    const VectorXd s = step.x - res.argmax;
    const VectorXd y = g - step.g;  // gradient change of the minimised -f
    res.argmax = std::move(step.x);
    res.value = step.fx;
    g = std::move(step.g);

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const MatrixXd left = MatrixXd::Identity(n, n) - rho * s * y.transpose();
      hinv = left * hinv * left.transpose() + rho * s * s.transpose();
    }
    if (s.lpNorm<Eigen::Infinity>() <= opts.step_tol * step_scale(res.argmax)) {
      ++res.iterations;
      res.gradient_norm = g.lpNorm<Eigen::Infinity>();
      res.converged = res.gradient_norm <= opts.grad_tol;
      res.termination = res.converged ? Termination::GradientTol : Termination::StepTol;
      return res;
    }
  }
  res.gradient_norm = g.lpNorm<Eigen::Infinity>();
  res.converged = res.gradient_norm <= opts.grad_tol;
  res.termination = res.converged ? Termination::GradientTol : Termination::MaxIter;
  return res;
}

MatrixXd solve_spd(const MatrixXd& A, const MatrixXd& B) {
  if (A.rows() != A.cols() || A.rows() != B.rows())
    throw Error(ErrorCode::DimensionMismatch, "solve_spd needs square A conformable with B");
  if (A.size() == 0) return MatrixXd(0, B.cols());
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw Error(ErrorCode::NotSymmetric, "matrix is not symmetric");
  auto llt = checked_llt(A);
  if (!llt) throw Error(ErrorCode::NotPositiveDefinite, "Cholesky pivot is not positive");
  return llt->solve(B);
}

VectorXd solve_spd(const MatrixXd& A, const VectorXd& b) {
  return solve_spd(A, MatrixXd(b)).col(0);
}

MatrixXd inverse_spd(const MatrixXd& A) {
  MatrixXd inv = solve_spd(A, MatrixXd(MatrixXd::Identity(A.rows(), A.cols())));
  return 0.5 * (inv + inv.transpose());
}

Index column_rank(const MatrixXd& A) {
  Eigen::ColPivHouseholderQR<MatrixXd> qr(A);
  return qr.rank();
}

}  // namespace occupancy
