#pragma once

// Stage 1: detection coefficients from the likelihood conditional on at least
// one detection. Only sites with a detection enter the fit; fitted detection
// probabilities are then produced for every site so stage 2 can use them.

#include <string>
#include <vector>

#include "occupancy/core_model.hpp"
#include "occupancy/numerics.hpp"

namespace occupancy {

struct DetectionFitOptions {
  OptimOptions optim{.max_iter = 100, .grad_tol = 1e-8, .step_tol = 1e-14};
  /// |beta_hat| beyond this is reported as separation.
  double separation_threshold = 30.0;
};

struct DetectionFit {
  VectorXd beta_hat;
  MatrixXd v_beta;  // inverse observed information; NaN when it is singular
  double cond_loglik = 0.0;
  double aic = 0.0;
  MatrixXd p_hat;      // S x tau, all sites
  VectorXd theta_hat;  // S, all sites
  bool converged = false;
  int iterations = 0;
  DetectionModel model_tag = DetectionModel::TimeIndependent;
  bool separation_suspected = false;
  std::vector<std::string> names;
};

/// Maximises the conditional detection likelihood by Newton from beta = 0.
/// Throws NoDetectedSites or RankDeficientDesign; non-convergence and
/// separation are reported through the returned flags.
DetectionFit fit_detection(const Dataset& data, const DetectionFitOptions& opts = {});

/// -2 * conditional log-likelihood + 2 * q.
double detection_aic(const DetectionFit& fit);

/// AIC for each candidate detection model fitted to the same histories.
struct AicEntry {
  std::string label;
  double aic = 0.0;
  bool converged = false;
};
std::vector<AicEntry> rank_detection_models(const std::vector<std::string>& labels,
                                            const std::vector<Dataset>& candidates,
                                            const DetectionFitOptions& opts = {});

}  // namespace occupancy
