#include "occupancy/full_likelihood.hpp"

#include <limits>

#include "occupancy/stage1_detection.hpp"
#include "occupancy/stage2_occupancy.hpp"

namespace occupancy {

namespace {

Coefficients split(const VectorXd& theta, Index p) {
  return {theta.head(p), theta.tail(theta.size() - p)};
}

VectorXd stack(const Coefficients& c) {
  VectorXd v(c.alpha.size() + c.beta.size());
  v << c.alpha, c.beta;
  return v;
}

std::optional<Coefficients> two_stage_start(const Dataset& data) {
  try {
    const DetectionFit det = fit_detection(data);
    const OccupancyFit occ = fit_occupancy(data, det, OccupancyMethod::IWLS);
    if (!det.beta_hat.allFinite() || !occ.alpha_hat.allFinite()) return std::nullopt;
    return Coefficients{occ.alpha_hat, det.beta_hat};
  } catch (const Error&) {
    return std::nullopt;
  }
}

bool saturated(const VectorXd& probs) {
  return (probs.array().min(1.0 - probs.array()) < 1e-8).all();
}

}  // namespace

MatrixXd full_observed_information(const Dataset& data, const Coefficients& coefs) {
  const Index p = coefs.alpha.size();
  const auto g = [&](const VectorXd& v) { return full_score(data, split(v, p)); };
  const MatrixXd jac = fd_jacobian(g, stack(coefs));
  return -0.5 * (jac + jac.transpose());
}

FullFit fit_full(const Dataset& data, const FullFitOptions& opts,
                 std::optional<Coefficients> restart) {
  const Index p = data.n_occ_coef();
  const Index q = data.n_det_coef();
  if (column_rank(data.occ_design()) < p)
    throw Error(ErrorCode::RankDeficientDesign, "occupancy design is rank deficient");
  {
    MatrixXd u(data.n_sites() * data.n_visits(), q);
    for (Index j = 0; j < data.n_visits(); ++j)
      u.middleRows(j * data.n_sites(), data.n_sites()) = data.det_block(j);
    if (column_rank(u) < q)
      throw Error(ErrorCode::RankDeficientDesign, "detection design is rank deficient");
  }

  const auto f = [&](const VectorXd& v) { return full_log_likelihood(data, split(v, p)); };
  const auto g = [&](const VectorXd& v) { return full_score(data, split(v, p)); };

  OptimResult best = quasi_newton_maximize(f, g, VectorXd::Zero(p + q), opts.optim);
  bool restarted = false;
  if (!best.converged && opts.restart_from_two_stage) {
    if (!restart) restart = two_stage_start(data);
    if (restart) {
      OptimResult second = quasi_newton_maximize(f, g, stack(*restart), opts.optim);
      second.iterations += best.iterations;
      if (second.converged || second.value > best.value) {
        best = std::move(second);
        restarted = true;
      }
    }
  }

  FullFit fit;
  const Coefficients hat = split(best.argmax, p);
  fit.alpha_hat = hat.alpha;
  fit.beta_hat = hat.beta;
  fit.loglik = best.value;
  fit.converged = best.converged;
  fit.iterations = best.iterations;
  fit.restarted = restarted;
  try {
    fit.var_joint = inverse_spd(full_observed_information(data, hat));
  } catch (const Error&) {
    fit.var_joint =
        MatrixXd::Constant(p + q, p + q, std::numeric_limits<double>::quiet_NaN());
  }
  const ProbabilitySurface surf = probability_surface(data, hat);
  const VectorXd p_all = surf.p.reshaped();
  fit.extreme_flag = best.argmax.lpNorm<Eigen::Infinity>() > opts.extreme_threshold ||
                     (surf.psi.array() > 1.0 - 1e-8).all() || saturated(p_all);
  return fit;
}

}  // namespace occupancy
