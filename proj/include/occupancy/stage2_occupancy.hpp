#pragma once

// Stage 2: occupancy coefficients from the partial likelihood of the detection
// indicators w_s, with theta_s held at its stage-1 estimate, plus the two-stage
// covariance that propagates stage-1 uncertainty.

#include "occupancy/core_model.hpp"
#include "occupancy/numerics.hpp"
#include "occupancy/stage1_detection.hpp"

namespace occupancy {

enum class OccupancyMethod { IWLS, Direct, Offset };

const char* to_string(OccupancyMethod m) noexcept;

struct OccupancyFitOptions {
  /// IWLS and offset passes.
  int max_iter = 200;
  /// Quasi-Newton iterations for Direct.
  int direct_max_iter = 1000;
  double tol = 1e-8;
  /// Rerun with Direct when IWLS does not converge.
  bool fallback = true;
  /// Replace w_s by psi_s * theta_s in the cross-derivative.
  bool use_expected_w = true;
  double boundary_threshold = 30.0;
};

struct OccupancyFit {
  VectorXd alpha_hat;
  MatrixXd var_naive;     // inverse partial information
  MatrixXd var_sandwich;  // with the stage-1 correction
  OccupancyMethod method = OccupancyMethod::IWLS;
  VectorXd psi_hat;
  VectorXd psi_se;
  bool converged = false;
  int iterations = 0;
  bool fallback_used = false;
  /// Every psi_hat above 1 - 1e-8, or |alpha_hat| beyond the threshold.
  bool boundary_estimate = false;
};

/// Working quantities of one IWLS pass at alpha.
struct IwlsState {
  VectorXd alpha;
  VectorXd working_response;  // U X alpha + w - eta
  VectorXd weight_v;          // (1 - eta) eta
  VectorXd weight_u;          // theta psi (1 - psi)
};

IwlsState iwls_state(const Dataset& data, const VectorXd& alpha, const VectorXd& theta_hat);

/// alpha_{k+1} = (X' U V^-1 U X)^-1 X' U V^-1 Z.
VectorXd iwls_update(const Dataset& data, const IwlsState& state);

OccupancyFit fit_occupancy(const Dataset& data, const DetectionFit& det, OccupancyMethod method,
                           const OccupancyFitOptions& opts = {});

/// Same, with theta and p supplied directly (p is used only for the
/// cross-derivative; V_beta may be zero for known detection).
OccupancyFit fit_occupancy(const Dataset& data, const VectorXd& theta_hat, const MatrixXd& p_hat,
                           const MatrixXd& v_beta, OccupancyMethod method,
                           const OccupancyFitOptions& opts = {});

/// Observed partial information -dQ/dalpha'.
MatrixXd occupancy_information(const Dataset& data, const VectorXd& alpha,
                               const VectorXd& theta_hat);
MatrixXd occupancy_information(const Dataset& data, const VectorXd& alpha,
                               const DetectionFit& det);

/// Expected information X' U V^-1 U X used by the IWLS normal equations.
MatrixXd expected_occupancy_information(const Dataset& data, const VectorXd& alpha,
                                        const VectorXd& theta_hat);

/// dQ/dbeta' for visit-varying detection; reduces to the time-constant form
/// when p_sj and u_sj do not vary over visits.
MatrixXd cross_term_B(const Dataset& data, const VectorXd& alpha, const MatrixXd& p_hat,
                      bool use_expected_w = true);
MatrixXd cross_term_B(const Dataset& data, const VectorXd& alpha, const DetectionFit& det,
                      bool use_expected_w = true);

/// I^-1 + I^-1 B V_beta B' I^-1.
MatrixXd sandwich_variance(const MatrixXd& info, const MatrixXd& B, const MatrixXd& v_beta);

struct PsiEstimate {
  VectorXd psi;
  VectorXd se;
};

/// Per-site occupancy with delta-method standard errors.
PsiEstimate psi_with_se(const Dataset& data, const VectorXd& alpha_hat, const MatrixXd& var_alpha);

}  // namespace occupancy
