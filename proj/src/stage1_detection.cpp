#include "occupancy/stage1_detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace occupancy {

namespace {

constexpr double kSaturated = 1e-8;

MatrixXd stacked_design(const Dataset& data) {
  MatrixXd u(data.n_sites() * data.n_visits(), data.n_det_coef());
  for (Index j = 0; j < data.n_visits(); ++j)
    u.middleRows(j * data.n_sites(), data.n_sites()) = data.det_block(j);
  return u;
}

bool all_saturated(const MatrixXd& p) {
  return (p.array().min(1.0 - p.array()) < kSaturated).all();
}

}  // namespace

DetectionFit fit_detection(const Dataset& data, const DetectionFitOptions& opts) {
  if (data.n_detected() == 0)
    throw Error(ErrorCode::NoDetectedSites,
                "conditional likelihood undefined: no site has a detection");
  const Dataset detected = data.subset(data.detected_sites());
  const Index q = data.n_det_coef();
  if (column_rank(stacked_design(detected)) < q)
    throw Error(ErrorCode::RankDeficientDesign,
                "detection design restricted to detected sites is rank deficient");

  const auto f = [&](const VectorXd& b) { return conditional_detection_loglik(detected, b); };
  const auto g = [&](const VectorXd& b) { return conditional_detection_score(detected, b); };
  const auto h = [&](const VectorXd& b) { return conditional_detection_hessian(detected, b); };
  const OptimResult opt = newton_maximize(f, g, h, VectorXd::Zero(q), opts.optim);

  DetectionFit fit;
  fit.beta_hat = opt.argmax;
  fit.cond_loglik = opt.value;
  fit.converged = opt.converged;
  fit.iterations = opt.iterations;
  fit.model_tag = data.det_design().model;
  fit.names = data.det_names();
  fit.aic = -2.0 * fit.cond_loglik + 2.0 * static_cast<double>(q);
  fit.p_hat = detection_probs(data, fit.beta_hat);
  fit.theta_hat = theta_from_p_rows(fit.p_hat);

  try {
    fit.v_beta = inverse_spd(-h(fit.beta_hat));
  } catch (const Error&) {
    fit.v_beta = MatrixXd::Constant(q, q, std::numeric_limits<double>::quiet_NaN());
  }

  const MatrixXd p_detected = detection_probs(detected, fit.beta_hat);
  fit.separation_suspected =
      fit.beta_hat.lpNorm<Eigen::Infinity>() > opts.separation_threshold ||
      all_saturated(p_detected);
  return fit;
}

double detection_aic(const DetectionFit& fit) {
  return -2.0 * fit.cond_loglik + 2.0 * static_cast<double>(fit.beta_hat.size());
}

std::vector<AicEntry> rank_detection_models(const std::vector<std::string>& labels,
                                            const std::vector<Dataset>& candidates,
                                            const DetectionFitOptions& opts) {
  if (labels.size() != candidates.size())
    throw Error(ErrorCode::LengthMismatch, "one label is needed per candidate model");
  std::vector<AicEntry> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const DetectionFit fit = fit_detection(candidates[i], opts);
    out.push_back({labels[i], detection_aic(fit), fit.converged});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const AicEntry& a, const AicEntry& b) { return a.aic < b.aic; });
  return out;
}

}  // namespace occupancy
