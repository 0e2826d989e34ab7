#include "occupancy/core_model.hpp"

#include <cmath>
#include <sstream>

namespace occupancy {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidData: return "InvalidData";
    case ErrorCode::NoDetectedSites: return "NoDetectedSites";
    case ErrorCode::RankDeficientDesign: return "RankDeficientDesign";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NonFiniteEvaluation: return "NonFiniteEvaluation";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InsufficientReplicates: return "InsufficientReplicates";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonBinaryDetection: return "NonBinaryDetection";
    case ErrorCode::RaggedSurveyGroup: return "RaggedSurveyGroup";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

const char* to_string(DetectionModel model) noexcept {
  switch (model) {
    case DetectionModel::TimeIndependent: return "TimeIndependent";
    case DetectionModel::TimeVaryingIntercepts: return "TimeVaryingIntercepts";
    case DetectionModel::TimeVaryingCovariates: return "TimeVaryingCovariates";
    case DetectionModel::Both: return "Both";
  }
  return "Unknown";
}

VectorXd theta_from_p_rows(const MatrixXd& p) {
  VectorXd theta(p.rows());
  for (Index s = 0; s < p.rows(); ++s) theta(s) = theta_from_p(p.row(s));
  return theta;
}

namespace {

std::vector<std::string> default_names(const char* stem, Index n) {
  std::vector<std::string> names;
  for (Index k = 0; k < n; ++k) names.push_back(std::string(stem) + std::to_string(k));
  return names;
}

void require(bool ok, ErrorCode code, const std::string& msg) {
  if (!ok) throw Error(code, msg);
}

// 1 - psi * theta, written so that it stays accurate when both are near one.
double one_minus_eta(double psi, double miss_all) {
  return (1.0 - psi) + psi * miss_all;
}

}  // namespace

DetectionDesign DetectionDesign::time_independent(const MatrixXd& site_design, Index n_visits,
                                                  std::vector<std::string> names) {
  DetectionDesign d;
  d.visits.assign(static_cast<std::size_t>(n_visits), site_design);
  d.names = names.empty() ? default_names("u", site_design.cols()) : std::move(names);
  d.model = DetectionModel::TimeIndependent;
  return d;
}

bool DetectionDesign::is_time_constant() const {
  for (std::size_t j = 1; j < visits.size(); ++j)
    if (visits[j] != visits[0]) return false;
  return true;
}

Dataset::Dataset(MatrixXd detections, MatrixXd occ_design, DetectionDesign det_design,
                 std::vector<std::string> occ_names, std::vector<std::string> site_labels)
    : detections_(std::move(detections)),
      occ_design_(std::move(occ_design)),
      det_design_(std::move(det_design)),
      occ_names_(std::move(occ_names)),
      site_labels_(std::move(site_labels)) {
  const Index S = detections_.rows();
  const Index tau = detections_.cols();
  require(S >= 1, ErrorCode::InvalidData, "dataset has no sites");
  require(tau >= 2, ErrorCode::InvalidData, "at least two visits are required, got " +
                                                std::to_string(tau));
  for (Index s = 0; s < S; ++s)
    for (Index j = 0; j < tau; ++j) {
      const double y = detections_(s, j);
      if (y != 0.0 && y != 1.0) {
        std::ostringstream msg;
        msg << "detection at site " << s << ", visit " << j << " is " << y;
        throw Error(ErrorCode::InvalidData, msg.str());
      }
    }

  require(occ_design_.rows() == S, ErrorCode::DimensionMismatch,
          "occupancy design has " + std::to_string(occ_design_.rows()) + " rows for " +
              std::to_string(S) + " sites");
  require(occ_design_.cols() >= 1, ErrorCode::DimensionMismatch, "empty occupancy design");
  require((occ_design_.col(0).array() == 1.0).all(), ErrorCode::InvalidData,
          "first occupancy design column must be the intercept");
  require(occ_design_.allFinite(), ErrorCode::InvalidData, "non-finite occupancy covariate");

  require(det_design_.n_visits() == tau, ErrorCode::DimensionMismatch,
          "detection design has " + std::to_string(det_design_.n_visits()) + " visit blocks for " +
              std::to_string(tau) + " visits");
  const Index q = det_design_.n_coef();
  require(q >= 1, ErrorCode::DimensionMismatch, "empty detection design");
  for (const auto& block : det_design_.visits) {
    require(block.rows() == S && block.cols() == q, ErrorCode::DimensionMismatch,
            "detection visit block is not S x q");
    require(block.allFinite(), ErrorCode::InvalidData, "non-finite detection covariate");
  }

  if (occ_names_.empty()) occ_names_ = default_names("x", occ_design_.cols());
  if (det_design_.names.empty()) det_design_.names = default_names("u", q);
  require(static_cast<Index>(occ_names_.size()) == occ_design_.cols(),
          ErrorCode::DimensionMismatch, "occupancy names do not match design columns");
  require(static_cast<Index>(det_design_.names.size()) == q, ErrorCode::DimensionMismatch,
          "detection names do not match design columns");
  require(site_labels_.empty() || static_cast<Index>(site_labels_.size()) == S,
          ErrorCode::DimensionMismatch, "site labels do not match site count");

  counts_ = detections_.rowwise().sum();
  detected_ = (counts_.array() > 0.0).cast<double>().matrix();
  n_detected_ = static_cast<Index>(detected_.sum());
}

std::vector<Index> Dataset::detected_sites() const {
  std::vector<Index> rows;
  for (Index s = 0; s < n_sites(); ++s)
    if (detected_(s) > 0.0) rows.push_back(s);
  return rows;
}

Dataset Dataset::subset(const std::vector<Index>& rows) const {
  const Index n = static_cast<Index>(rows.size());
  MatrixXd y(n, n_visits());
  MatrixXd x(n, n_occ_coef());
  DetectionDesign det = det_design_;
  std::vector<std::string> labels;
  for (auto& block : det.visits) block.resize(n, n_det_coef());
  for (Index i = 0; i < n; ++i) {
    const Index s = rows[static_cast<std::size_t>(i)];
    y.row(i) = detections_.row(s);
    x.row(i) = occ_design_.row(s);
    for (Index j = 0; j < n_visits(); ++j) det.visits[j].row(i) = det_design_.visits[j].row(s);
    if (!site_labels_.empty()) labels.push_back(site_labels_[static_cast<std::size_t>(s)]);
  }
  return Dataset(std::move(y), std::move(x), std::move(det), occ_names_, std::move(labels));
}

VectorXd occupancy_probs(const Dataset& data, const VectorXd& alpha) {
  if (alpha.size() != data.n_occ_coef())
    throw Error(ErrorCode::DimensionMismatch,
                "alpha has length " + std::to_string(alpha.size()) + ", expected " +
                    std::to_string(data.n_occ_coef()));
  return (data.occ_design() * alpha).unaryExpr([](double v) { return logistic(v); });
}

MatrixXd detection_probs(const Dataset& data, const VectorXd& beta) {
  if (beta.size() != data.n_det_coef())
    throw Error(ErrorCode::DimensionMismatch,
                "beta has length " + std::to_string(beta.size()) + ", expected " +
                    std::to_string(data.n_det_coef()));
  MatrixXd p(data.n_sites(), data.n_visits());
  for (Index j = 0; j < data.n_visits(); ++j)
    p.col(j) = (data.det_block(j) * beta).unaryExpr([](double v) { return logistic(v); });
  return p;
}

ProbabilitySurface probability_surface(const Dataset& data, const Coefficients& coefs) {
  ProbabilitySurface out;
  out.p = detection_probs(data, coefs.beta);
  out.theta = theta_from_p_rows(out.p);
  out.psi = occupancy_probs(data, coefs.alpha);
  out.eta = out.psi.cwiseProduct(out.theta);
  return out;
}

double full_log_likelihood(const Dataset& data, const Coefficients& coefs) {
  const VectorXd psi = occupancy_probs(data, coefs.alpha);
  const MatrixXd p = detection_probs(data, coefs.beta);
  const MatrixXd& y = data.detections();
  double ll = 0.0;
  for (Index s = 0; s < data.n_sites(); ++s) {
    const double log_miss = log_miss_all(p.row(s));
    if (data.detected()(s) == 0.0) {
      ll += std::log(one_minus_eta(psi(s), std::exp(log_miss)));
      continue;
    }
    ll += std::log(psi(s));
    for (Index j = 0; j < data.n_visits(); ++j)
      ll += y(s, j) == 1.0 ? std::log(p(s, j)) : std::log1p(-p(s, j));
  }
  return ll;
}

VectorXd full_score(const Dataset& data, const Coefficients& coefs) {
  const VectorXd psi = occupancy_probs(data, coefs.alpha);
  const MatrixXd p = detection_probs(data, coefs.beta);
  const MatrixXd& y = data.detections();
  const MatrixXd& X = data.occ_design();
  const Index np = data.n_occ_coef();
  const Index nq = data.n_det_coef();
  VectorXd grad = VectorXd::Zero(np + nq);
  for (Index s = 0; s < data.n_sites(); ++s) {
    if (data.detected()(s) == 0.0) {
      const double miss = std::exp(log_miss_all(p.row(s)));
      const double theta = 1.0 - miss;
      const double denom = one_minus_eta(psi(s), miss);
      grad.head(np) -= (theta * psi(s) * (1.0 - psi(s)) / denom) * X.row(s).transpose();
      const double c = psi(s) * miss / denom;
      for (Index j = 0; j < data.n_visits(); ++j)
        grad.tail(nq) -= (c * p(s, j)) * data.det_block(j).row(s).transpose();
    } else {
      grad.head(np) += (1.0 - psi(s)) * X.row(s).transpose();
      for (Index j = 0; j < data.n_visits(); ++j)
        grad.tail(nq) += (y(s, j) - p(s, j)) * data.det_block(j).row(s).transpose();
    }
  }
  return grad;
}

double conditional_detection_loglik(const Dataset& data, const VectorXd& beta) {
  if (data.n_detected() == 0)
    throw Error(ErrorCode::NoDetectedSites,
                "conditional likelihood undefined: no site has a detection");
  const MatrixXd p = detection_probs(data, beta);
  const MatrixXd& y = data.detections();
  double ll = 0.0;
  for (Index s = 0; s < data.n_sites(); ++s) {
    if (data.detected()(s) == 0.0) continue;
    for (Index j = 0; j < data.n_visits(); ++j)
      ll += y(s, j) == 1.0 ? std::log(p(s, j)) : std::log1p(-p(s, j));
    ll -= std::log(theta_from_p(p.row(s)));
  }
  return ll;
}

VectorXd conditional_detection_score(const Dataset& data, const VectorXd& beta) {
  if (data.n_detected() == 0)
    throw Error(ErrorCode::NoDetectedSites,
                "conditional likelihood undefined: no site has a detection");
  const MatrixXd p = detection_probs(data, beta);
  const MatrixXd& y = data.detections();
  VectorXd grad = VectorXd::Zero(data.n_det_coef());
  for (Index s = 0; s < data.n_sites(); ++s) {
    if (data.detected()(s) == 0.0) continue;
    const double theta = theta_from_p(p.row(s));
    for (Index j = 0; j < data.n_visits(); ++j)
      grad += (y(s, j) - p(s, j) / theta) * data.det_block(j).row(s).transpose();
  }
  return grad;
}

MatrixXd conditional_detection_hessian(const Dataset& data, const VectorXd& beta) {
  if (data.n_detected() == 0)
    throw Error(ErrorCode::NoDetectedSites,
                "conditional likelihood undefined: no site has a detection");
  const MatrixXd p = detection_probs(data, beta);
  const Index q = data.n_det_coef();
  MatrixXd hess = MatrixXd::Zero(q, q);
  VectorXd pu(q);
  for (Index s = 0; s < data.n_sites(); ++s) {
    if (data.detected()(s) == 0.0) continue;
    const double theta = theta_from_p(p.row(s));
    pu.setZero();
    for (Index j = 0; j < data.n_visits(); ++j) {
      const auto u = data.det_block(j).row(s).transpose();
      hess.noalias() -= (p(s, j) * (1.0 - p(s, j)) / theta) * u * u.transpose();
      pu += p(s, j) * u;
    }
    hess.noalias() += ((1.0 - theta) / (theta * theta)) * pu * pu.transpose();
  }
  return hess;
}

double partial_occupancy_loglik(const Dataset& data, const VectorXd& alpha,
                                const VectorXd& theta_hat) {
  if (theta_hat.size() != data.n_sites())
    throw Error(ErrorCode::DimensionMismatch, "theta_hat length does not match site count");
  const VectorXd psi = occupancy_probs(data, alpha);
  double ll = 0.0;
  for (Index s = 0; s < data.n_sites(); ++s) {
    if (data.detected()(s) == 0.0)
      ll += std::log(one_minus_eta(psi(s), 1.0 - theta_hat(s)));
    else
      ll += std::log(psi(s));
  }
  return ll;
}

VectorXd partial_occupancy_score(const Dataset& data, const VectorXd& alpha,
                                 const VectorXd& theta_hat) {
  if (theta_hat.size() != data.n_sites())
    throw Error(ErrorCode::DimensionMismatch, "theta_hat length does not match site count");
  const VectorXd psi = occupancy_probs(data, alpha);
  const VectorXd& w = data.detected();
  VectorXd grad = VectorXd::Zero(data.n_occ_coef());
  for (Index s = 0; s < data.n_sites(); ++s) {
    const double eta = psi(s) * theta_hat(s);
    const double denom = one_minus_eta(psi(s), 1.0 - theta_hat(s));
    grad += ((w(s) - eta) * (1.0 - psi(s)) / denom) * data.occ_design().row(s).transpose();
  }
  return grad;
}

}  // namespace occupancy
