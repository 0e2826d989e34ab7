#pragma once

// Small dataset builders shared by the unit tests and the acceptance suite.

#include <vector>

#include "occupancy/core_model.hpp"
#include "occupancy/rng.hpp"

namespace occupancy::testing {

/// Intercept-only histories from per-site detection counts (count c means the
/// first c visits are detections).
inline Dataset counts_dataset(const std::vector<int>& counts, Index tau) {
  const Index S = static_cast<Index>(counts.size());
  MatrixXd y = MatrixXd::Zero(S, tau);
  for (Index s = 0; s < S; ++s)
    for (Index j = 0; j < counts[static_cast<std::size_t>(s)]; ++j) y(s, j) = 1.0;
  return Dataset(y, MatrixXd::Ones(S, 1), DetectionDesign::time_independent(MatrixXd::Ones(S, 1), tau));
}

/// Intercept-only dataset where the first n_detected sites have one detection.
inline Dataset indicator_dataset(Index S, Index n_detected, Index tau = 2) {
  std::vector<int> counts(static_cast<std::size_t>(S), 0);
  for (Index s = 0; s < n_detected; ++s) counts[static_cast<std::size_t>(s)] = 1;
  return counts_dataset(counts, tau);
}

struct RandomInstance {
  Dataset data;
  Coefficients truth;
};

/// Random design with p occupancy and q detection coefficients. Detection
/// covariates vary by visit unless time_constant; histories are drawn from the
/// model at random coefficients of moderate size, so some sites are detected.
inline RandomInstance random_instance(Xoshiro256pp& rng, Index S, Index tau, Index p, Index q,
                                      bool time_constant = false) {
  MatrixXd X(S, p);
  for (Index s = 0; s < S; ++s) {
    X(s, 0) = 1.0;
    for (Index k = 1; k < p; ++k) X(s, k) = rng.normal();
  }
  DetectionDesign det;
  MatrixXd site(S, q);
  for (Index s = 0; s < S; ++s) {
    site(s, 0) = 1.0;
    for (Index k = 1; k < q; ++k) site(s, k) = rng.normal();
  }
  for (Index j = 0; j < tau; ++j) {
    MatrixXd block = site;
    if (!time_constant && q > 1)
      for (Index s = 0; s < S; ++s) block(s, q - 1) = rng.normal();
    det.visits.push_back(block);
  }
  det.model = time_constant ? DetectionModel::TimeIndependent : DetectionModel::TimeVaryingCovariates;

  Coefficients c{VectorXd(p), VectorXd(q)};
  for (Index k = 0; k < p; ++k) c.alpha(k) = 0.8 * rng.normal();
  for (Index k = 0; k < q; ++k) c.beta(k) = 0.8 * rng.normal();
  c.beta(0) = 0.5 * c.beta(0) - 0.3;

  MatrixXd y = MatrixXd::Zero(S, tau);
  for (Index s = 0; s < S; ++s) {
    if (!rng.bernoulli(logistic(X.row(s).dot(c.alpha)))) continue;
    for (Index j = 0; j < tau; ++j)
      y(s, j) = rng.bernoulli(logistic(det.visits[static_cast<std::size_t>(j)].row(s).dot(c.beta))) ? 1.0 : 0.0;
  }
  if (y.sum() == 0.0) y(0, 0) = 1.0;
  return {Dataset(y, X, det), c};
}

inline VectorXd random_vector(Xoshiro256pp& rng, Index n, double scale = 1.0) {
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = scale * rng.normal();
  return v;
}

inline double max_rel_error(const VectorXd& a, const VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace occupancy::testing
