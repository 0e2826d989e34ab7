#pragma once

// Monte Carlo studies of the two-stage and full-likelihood estimators.
//
// Design: one occupancy covariate per non-intercept alpha, one detection site
// covariate per beta between the intercept and the last entry, and a single
// visit-varying covariate whose coefficient is the last beta. All covariates
// are iid standard normal and, by default, drawn once per (seed, S, tau) and
// reused for every replicate.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "occupancy/core_model.hpp"

namespace occupancy {

enum class Estimator { IWLS, Direct, Offset, Full };

const char* to_string(Estimator e) noexcept;
std::optional<Estimator> parse_estimator(const std::string& name);

struct SimConfig {
  Index n_sites = 500;
  Index n_visits = 5;
  VectorXd alpha_true;
  VectorXd beta_true;
  int n_reps = 1000;
  std::uint64_t seed = 1;
  bool regenerate_covariates = false;
  std::vector<Estimator> methods{Estimator::IWLS, Estimator::Direct, Estimator::Offset,
                                 Estimator::Full};
  /// Worker threads; 0 uses the hardware concurrency.
  unsigned threads = 0;

  /// Throws InvalidConfig.
  void validate() const;
  /// alpha0.., beta0.., beta_t
  std::vector<std::string> parameter_names() const;
  VectorXd truth() const;
};

struct SimCovariates {
  MatrixXd occ;       // S x (p - 1)
  MatrixXd det_site;  // S x (q - 2)
  MatrixXd time;      // S x tau
};

SimCovariates draw_covariates(const SimConfig& cfg, int replicate);

/// Dataset for fixed covariates and detection histories.
Dataset assemble_dataset(const SimCovariates& cov, MatrixXd detections);

struct SimulatedData {
  Dataset data;
  VectorXd psi;
  VectorXd theta;
  Eigen::VectorXi occupied;
};

SimulatedData simulate_replicate(const SimConfig& cfg, int replicate);
Dataset generate_dataset(const SimConfig& cfg, int replicate);

struct ReplicateRecord {
  int replicate = 0;
  Estimator method = Estimator::IWLS;
  VectorXd estimate;   // alpha then beta; empty when the fit failed
  MatrixXd var_alpha;  // sandwich (two-stage) or joint-block (full) covariance
  bool converged = false;
  bool fallback_used = false;
  bool flagged = false;  // separation, boundary or extreme estimate
  std::string error;

  bool usable() const { return estimate.size() > 0 && estimate.allFinite(); }
};

/// Every replicate x method, ordered by replicate then by cfg.methods.
std::vector<ReplicateRecord> run_study(const SimConfig& cfg);

/// c * median |x_i - median(x)| with c = 1 / Phi^-1(3/4).
double robust_mad(std::span<const double> x);
double median(std::span<const double> x);

struct ParameterSummary {
  std::string name;
  double truth = 0.0;
  double median = 0.0;
  double mad = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  double efficiency = 0.0;      // 100 var_ref / var
  double efficiency_mad = 0.0;  // 100 (mad_ref / mad)^2
  Index n = 0;
};

struct MethodSummary {
  Estimator method = Estimator::IWLS;
  std::vector<ParameterSummary> params;
  int n_converged = 0;
  int n_not_converged = 0;
  int n_failed = 0;
  int n_fallback = 0;
  int n_flagged = 0;

  const ParameterSummary& param(const std::string& name) const;
};

struct StudySummary {
  Estimator reference = Estimator::Direct;
  int n_reps = 0;
  std::vector<MethodSummary> methods;

  const MethodSummary& method(Estimator e) const;
};

/// Per-method summaries; efficiencies are relative to `reference`.
StudySummary summarize_study(const std::vector<ReplicateRecord>& records, const VectorXd& truth,
                             const std::vector<std::string>& names, Estimator reference);

/// Estimates of one parameter for one method, in replicate order.
std::vector<double> estimates_of(const std::vector<ReplicateRecord>& records, Estimator method,
                                 Index parameter);

struct AgreementTable {
  int both_le = 0;
  int a_le_b_gt = 0;
  int a_gt_b_le = 0;
  int both_gt = 0;

  int total() const { return both_le + a_le_b_gt + a_gt_b_le + both_gt; }
};

AgreementTable agreement_table(std::span<const double> a, std::span<const double> b,
                               double threshold = 3.0);

void write_study_csv(std::ostream& out, const std::vector<ReplicateRecord>& records,
                     const std::vector<std::string>& names);
nlohmann::json summary_to_json(const StudySummary& summary);

}  // namespace occupancy
