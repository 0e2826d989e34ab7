#pragma once

// Data model and likelihood components for single-season occupancy models
// with imperfect detection and a logistic link.
//
// Conventions: S sites, tau visits. The occupancy design X is S x p with rows
// x_s (first column is the intercept). The detection design is stored per
// visit as tau matrices of size S x q, so u_sj is row s of visit block j. A
// time-independent design simply repeats the same block.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "occupancy/error.hpp"

namespace occupancy {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Probabilities are kept inside [kProbFloor, 1 - kProbFloor].
inline constexpr double kProbFloor = 1e-12;

template <typename Scalar>
Scalar logistic(Scalar x) {
  using std::exp;
  const Scalar lo = Scalar(kProbFloor);
  const Scalar hi = Scalar(1) - Scalar(kProbFloor);
  Scalar v;
  if (x >= Scalar(0)) {
    v = Scalar(1) / (Scalar(1) + exp(-x));
  } else {
    const Scalar e = exp(x);
    v = e / (Scalar(1) + e);
  }
  return v < lo ? lo : (v > hi ? hi : v);
}

template <typename Scalar>
Scalar logit(Scalar prob) {
  using std::log;
  return log(prob / (Scalar(1) - prob));
}

/// log of prod_j (1 - p_j), accumulated as a sum of log1p terms.
template <typename Derived>
typename Derived::Scalar log_miss_all(const Eigen::DenseBase<Derived>& p_row) {
  using std::log1p;
  typename Derived::Scalar acc(0);
  for (Index j = 0; j < p_row.size(); ++j) acc += log1p(-p_row(j));
  return acc;
}

/// Probability of at least one detection, 1 - prod_j (1 - p_j).
template <typename Derived>
typename Derived::Scalar theta_from_p(const Eigen::DenseBase<Derived>& p_row) {
  using std::expm1;
  return -expm1(log_miss_all(p_row));
}

/// Row-wise theta for an S x tau probability matrix.
VectorXd theta_from_p_rows(const MatrixXd& p);

enum class DetectionModel { TimeIndependent, TimeVaryingIntercepts, TimeVaryingCovariates, Both };

const char* to_string(DetectionModel model) noexcept;

/// Detection covariates u_sj, one S x q block per visit.
struct DetectionDesign {
  std::vector<MatrixXd> visits;
  std::vector<std::string> names;
  DetectionModel model = DetectionModel::TimeIndependent;

  /// Replicates the S x q site design over tau visits.
  static DetectionDesign time_independent(const MatrixXd& site_design, Index n_visits,
                                          std::vector<std::string> names = {});

  Index n_visits() const { return static_cast<Index>(visits.size()); }
  Index n_sites() const { return visits.empty() ? 0 : visits.front().rows(); }
  Index n_coef() const { return visits.empty() ? 0 : visits.front().cols(); }

  /// True when every visit block is identical (u_sj = u_s).
  bool is_time_constant() const;
};

/// Detection histories plus the two design matrices.
class Dataset {
 public:
  Dataset(MatrixXd detections, MatrixXd occ_design, DetectionDesign det_design,
          std::vector<std::string> occ_names = {}, std::vector<std::string> site_labels = {});

  Index n_sites() const { return detections_.rows(); }
  Index n_visits() const { return detections_.cols(); }
  Index n_occ_coef() const { return occ_design_.cols(); }
  Index n_det_coef() const { return det_design_.n_coef(); }

  const MatrixXd& detections() const { return detections_; }
  const MatrixXd& occ_design() const { return occ_design_; }
  const DetectionDesign& det_design() const { return det_design_; }
  const MatrixXd& det_block(Index visit) const { return det_design_.visits[visit]; }

  /// w_s: 1 when site s has at least one detection.
  const VectorXd& detected() const { return detected_; }
  /// Y_s: number of visits with a detection.
  const VectorXd& detection_counts() const { return counts_; }
  /// O: number of sites with at least one detection.
  Index n_detected() const { return n_detected_; }
  std::vector<Index> detected_sites() const;

  const std::vector<std::string>& occ_names() const { return occ_names_; }
  const std::vector<std::string>& det_names() const { return det_design_.names; }
  const std::vector<std::string>& site_labels() const { return site_labels_; }

  /// Dataset restricted to the given site rows, in order.
  Dataset subset(const std::vector<Index>& rows) const;

 private:
  MatrixXd detections_;
  MatrixXd occ_design_;
  DetectionDesign det_design_;
  std::vector<std::string> occ_names_;
  std::vector<std::string> site_labels_;
  VectorXd detected_;
  VectorXd counts_;
  Index n_detected_ = 0;
};

struct Coefficients {
  VectorXd alpha;
  VectorXd beta;
};

struct ProbabilitySurface {
  MatrixXd p;
  VectorXd theta;
  VectorXd eta;
  VectorXd psi;
};

VectorXd occupancy_probs(const Dataset& data, const VectorXd& alpha);
MatrixXd detection_probs(const Dataset& data, const VectorXd& beta);
ProbabilitySurface probability_surface(const Dataset& data, const Coefficients& coefs);

/// Full log-likelihood over (alpha, beta).
double full_log_likelihood(const Dataset& data, const Coefficients& coefs);
/// Gradient of the full log-likelihood, stacked as (alpha, beta).
VectorXd full_score(const Dataset& data, const Coefficients& coefs);

/// Conditional log-likelihood of detection given at least one detection.
/// Throws NoDetectedSites when no site has a detection.
double conditional_detection_loglik(const Dataset& data, const VectorXd& beta);
VectorXd conditional_detection_score(const Dataset& data, const VectorXd& beta);
MatrixXd conditional_detection_hessian(const Dataset& data, const VectorXd& beta);

/// Log-partial likelihood of the detection indicators with theta fixed.
double partial_occupancy_loglik(const Dataset& data, const VectorXd& alpha,
                                const VectorXd& theta_hat);
/// Partial score Q(alpha) = sum_s x_s (w_s - psi_s theta_s)(1 - psi_s) / (1 - psi_s theta_s).
VectorXd partial_occupancy_score(const Dataset& data, const VectorXd& alpha,
                                 const VectorXd& theta_hat);

}  // namespace occupancy
