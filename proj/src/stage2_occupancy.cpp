#include "occupancy/stage2_occupancy.hpp"

#include <cmath>
#include <limits>

namespace occupancy {

const char* to_string(OccupancyMethod m) noexcept {
  switch (m) {
    case OccupancyMethod::IWLS: return "IWLS";
    case OccupancyMethod::Direct: return "Direct";
    case OccupancyMethod::Offset: return "Offset";
  }
  return "Unknown";
}

namespace {

constexpr double kWeightFloor = 1e-12;
constexpr double kDivergence = 1e4;

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

void check_theta(const Dataset& data, const VectorXd& theta_hat) {
  if (theta_hat.size() != data.n_sites())
    throw Error(ErrorCode::DimensionMismatch, "theta_hat length does not match site count");
}

double softplus(double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

// log theta - log(1 + exp(gamma)(1 - theta)), the theta-dependent offset.
double theta_offset(double gamma, double theta) {
  const double miss = 1.0 - theta;
  const double tail = gamma > 0.0 ? gamma + std::log(std::exp(-gamma) + miss)
                                  : std::log1p(std::exp(gamma) * miss);
  return std::log(theta) - tail;
}

struct MethodResult {
  VectorXd alpha;
  bool converged = false;
  int iterations = 0;
};

MethodResult run_iwls(const Dataset& data, const VectorXd& theta, const OccupancyFitOptions& opts) {
  MethodResult r;
  r.alpha = VectorXd::Zero(data.n_occ_coef());
  for (r.iterations = 1; r.iterations <= opts.max_iter; ++r.iterations) {
    VectorXd next;
    try {
      next = iwls_update(data, iwls_state(data, r.alpha, theta));
    } catch (const Error&) {
      return r;
    }
    if (!next.allFinite() || next.lpNorm<Eigen::Infinity>() > kDivergence) return r;
    const double moved = (next - r.alpha).lpNorm<Eigen::Infinity>();
    r.alpha = std::move(next);
    if (moved <= opts.tol ||
        partial_occupancy_score(data, r.alpha, theta).lpNorm<Eigen::Infinity>() <= opts.tol) {
      r.converged = true;
      return r;
    }
  }
  r.iterations = opts.max_iter;
  return r;
}

MethodResult run_direct(const Dataset& data, const VectorXd& theta,
                        const OccupancyFitOptions& opts) {
  const auto f = [&](const VectorXd& a) { return partial_occupancy_loglik(data, a, theta); };
  const auto g = [&](const VectorXd& a) { return partial_occupancy_score(data, a, theta); };
  const OptimResult opt = quasi_newton_maximize(
      f, g, VectorXd::Zero(data.n_occ_coef()),
      OptimOptions{.max_iter = opts.direct_max_iter, .grad_tol = opts.tol, .step_tol = 1e-14});
  return {opt.argmax, opt.converged, opt.iterations};
}

// Logistic regression of w on X with a fixed offset, by Newton from alpha0.
VectorXd offset_logistic(const Dataset& data, const VectorXd& offset, const VectorXd& alpha0) {
  const MatrixXd& X = data.occ_design();
  const VectorXd& w = data.detected();
  const auto f = [&](const VectorXd& a) {
    const VectorXd v = X * a + offset;
    double ll = 0.0;
    for (Index s = 0; s < v.size(); ++s) ll -= w(s) > 0.0 ? softplus(-v(s)) : softplus(v(s));
    return ll;
  };
  const auto mean = [&](const VectorXd& a) {
    return VectorXd((X * a + offset).unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); }));
  };
  const auto g = [&](const VectorXd& a) { return VectorXd(X.transpose() * (w - mean(a))); };
  const auto h = [&](const VectorXd& a) {
    const VectorXd m = mean(a);
    const VectorXd wt = m.cwiseProduct(VectorXd::Ones(m.size()) - m);
    return MatrixXd(-(X.transpose() * wt.asDiagonal() * X));
  };
  return newton_maximize(f, g, h, alpha0, OptimOptions{.max_iter = 100, .grad_tol = 1e-10}).argmax;
}

MethodResult run_offset(const Dataset& data, const VectorXd& theta,
                        const OccupancyFitOptions& opts) {
  MethodResult r;
  r.alpha = VectorXd::Zero(data.n_occ_coef());
  VectorXd offset(data.n_sites());
  for (r.iterations = 1; r.iterations <= opts.max_iter; ++r.iterations) {
    const VectorXd gamma = data.occ_design() * r.alpha;
    for (Index s = 0; s < data.n_sites(); ++s) offset(s) = theta_offset(gamma(s), theta(s));
    VectorXd next;
    try {
      next = offset_logistic(data, offset, r.alpha);
    } catch (const Error&) {
      return r;
    }
    if (!next.allFinite() || next.lpNorm<Eigen::Infinity>() > kDivergence) return r;
    const double moved = (next - r.alpha).lpNorm<Eigen::Infinity>();
    r.alpha = std::move(next);
    if (moved <= opts.tol) {
      r.converged = true;
      return r;
    }
  }
  r.iterations = opts.max_iter;
  return r;
}

}  // namespace

IwlsState iwls_state(const Dataset& data, const VectorXd& alpha, const VectorXd& theta_hat) {
  check_theta(data, theta_hat);
  const VectorXd psi = occupancy_probs(data, alpha);
  const VectorXd gamma = data.occ_design() * alpha;
  IwlsState st;
  st.alpha = alpha;
  const Index S = data.n_sites();
  st.working_response.resize(S);
  st.weight_v.resize(S);
  st.weight_u.resize(S);
  for (Index s = 0; s < S; ++s) {
    const double eta = psi(s) * theta_hat(s);
    const double one_minus_eta = (1.0 - psi(s)) + psi(s) * (1.0 - theta_hat(s));
    st.weight_v(s) = std::max(one_minus_eta * eta, kWeightFloor);
    st.weight_u(s) = std::max(theta_hat(s) * psi(s) * (1.0 - psi(s)), kWeightFloor);
    st.working_response(s) = st.weight_u(s) * gamma(s) + data.detected()(s) - eta;
  }
  return st;
}

VectorXd iwls_update(const Dataset& data, const IwlsState& state) {
  const MatrixXd& X = data.occ_design();
  const VectorXd u_over_v = state.weight_u.cwiseQuotient(state.weight_v);
  const VectorXd normal_w = u_over_v.cwiseProduct(state.weight_u);
  const MatrixXd lhs = X.transpose() * normal_w.asDiagonal() * X;
  const VectorXd rhs = X.transpose() * u_over_v.cwiseProduct(state.working_response);
  return solve_spd(lhs, rhs);
}

MatrixXd occupancy_information(const Dataset& data, const VectorXd& alpha,
                               const VectorXd& theta_hat) {
  check_theta(data, theta_hat);
  const VectorXd psi = occupancy_probs(data, alpha);
  const MatrixXd& X = data.occ_design();
  VectorXd c(data.n_sites());
  for (Index s = 0; s < data.n_sites(); ++s) {
    const double th = theta_hat(s);
    const double ps = psi(s);
    const double denom = (1.0 - ps) + ps * (1.0 - th);
    const double bracket =
        th - 2.0 * ps * th + ps * ps * th * th + data.detected()(s) * (1.0 - th);
    c(s) = bracket / (denom * denom) * ps * (1.0 - ps);
  }
  const MatrixXd info = X.transpose() * c.asDiagonal() * X;
  return 0.5 * (info + info.transpose());
}

MatrixXd occupancy_information(const Dataset& data, const VectorXd& alpha,
                               const DetectionFit& det) {
  return occupancy_information(data, alpha, det.theta_hat);
}

MatrixXd expected_occupancy_information(const Dataset& data, const VectorXd& alpha,
                                        const VectorXd& theta_hat) {
  const IwlsState st = iwls_state(data, alpha, theta_hat);
  const VectorXd wt = st.weight_u.cwiseProduct(st.weight_u).cwiseQuotient(st.weight_v);
  return data.occ_design().transpose() * wt.asDiagonal() * data.occ_design();
}

MatrixXd cross_term_B(const Dataset& data, const VectorXd& alpha, const MatrixXd& p_hat,
                      bool use_expected_w) {
  if (p_hat.rows() != data.n_sites() || p_hat.cols() != data.n_visits())
    throw Error(ErrorCode::DimensionMismatch, "p_hat must be S x tau");
  const VectorXd psi = occupancy_probs(data, alpha);
  const MatrixXd& X = data.occ_design();
  const Index q = data.n_det_coef();
  MatrixXd B = MatrixXd::Zero(data.n_occ_coef(), q);
  VectorXd pu(q);
  for (Index s = 0; s < data.n_sites(); ++s) {
    const double miss = std::exp(log_miss_all(p_hat.row(s)));
    const double th = 1.0 - miss;
    const double ps = psi(s);
    const double w = use_expected_w ? ps * th : data.detected()(s);
    const double denom = (1.0 - ps) + ps * miss;
    const double c = ps * (1.0 - ps) * (1.0 - w) * miss / (denom * denom);
    if (c == 0.0) continue;
    pu.setZero();
    for (Index j = 0; j < data.n_visits(); ++j)
      pu += p_hat(s, j) * data.det_block(j).row(s).transpose();
    B.noalias() -= c * X.row(s).transpose() * pu.transpose();
  }
  return B;
}

MatrixXd cross_term_B(const Dataset& data, const VectorXd& alpha, const DetectionFit& det,
                      bool use_expected_w) {
  return cross_term_B(data, alpha, det.p_hat, use_expected_w);
}

MatrixXd sandwich_variance(const MatrixXd& info, const MatrixXd& B, const MatrixXd& v_beta) {
  if (B.rows() != info.rows() || B.cols() != v_beta.rows() || v_beta.rows() != v_beta.cols())
    throw Error(ErrorCode::DimensionMismatch, "sandwich inputs are not conformable");
  const MatrixXd info_inv = inverse_spd(info);
  const MatrixXd lever = info_inv * B;
  const MatrixXd var = info_inv + lever * v_beta * lever.transpose();
  return 0.5 * (var + var.transpose());
}

PsiEstimate psi_with_se(const Dataset& data, const VectorXd& alpha_hat,
                        const MatrixXd& var_alpha) {
  PsiEstimate out;
  out.psi = occupancy_probs(data, alpha_hat);
  out.se.resize(data.n_sites());
  for (Index s = 0; s < data.n_sites(); ++s) {
    const auto x = data.occ_design().row(s);
    const double slope = out.psi(s) * (1.0 - out.psi(s));
    const double v = slope * slope * (x * var_alpha * x.transpose())(0, 0);
    out.se(s) = std::sqrt(std::max(v, 0.0));
  }
  return out;
}

OccupancyFit fit_occupancy(const Dataset& data, const VectorXd& theta_hat, const MatrixXd& p_hat,
                           const MatrixXd& v_beta, OccupancyMethod method,
                           const OccupancyFitOptions& opts) {
  check_theta(data, theta_hat);
  if (column_rank(data.occ_design()) < data.n_occ_coef())
    throw Error(ErrorCode::RankDeficientDesign, "occupancy design is rank deficient");

  OccupancyFit fit;
  fit.method = method;
  MethodResult r;
  switch (method) {
    case OccupancyMethod::IWLS: r = run_iwls(data, theta_hat, opts); break;
    case OccupancyMethod::Direct: r = run_direct(data, theta_hat, opts); break;
    case OccupancyMethod::Offset: r = run_offset(data, theta_hat, opts); break;
  }
  if (method == OccupancyMethod::IWLS && !r.converged && opts.fallback) {
    const int spent = r.iterations;
    r = run_direct(data, theta_hat, opts);
    r.iterations += spent;
    fit.method = OccupancyMethod::Direct;
    fit.fallback_used = true;
  }
  fit.alpha_hat = r.alpha;
  fit.converged = r.converged;
  fit.iterations = r.iterations;

  const Index p = data.n_occ_coef();
  const MatrixXd info = occupancy_information(data, fit.alpha_hat, theta_hat);
  try {
    fit.var_naive = inverse_spd(info);
    fit.var_sandwich =
        sandwich_variance(info, cross_term_B(data, fit.alpha_hat, p_hat, opts.use_expected_w),
                          v_beta);
  } catch (const Error&) {
    fit.var_naive = MatrixXd::Constant(p, p, nan());
    fit.var_sandwich = fit.var_naive;
  }
  const PsiEstimate est = psi_with_se(data, fit.alpha_hat, fit.var_sandwich);
  fit.psi_hat = est.psi;
  fit.psi_se = est.se;
  fit.boundary_estimate = (fit.psi_hat.array() > 1.0 - 1e-8).all() ||
                          fit.alpha_hat.lpNorm<Eigen::Infinity>() > opts.boundary_threshold;
  return fit;
}

OccupancyFit fit_occupancy(const Dataset& data, const DetectionFit& det, OccupancyMethod method,
                           const OccupancyFitOptions& opts) {
  return fit_occupancy(data, det.theta_hat, det.p_hat, det.v_beta, method, opts);
}

}  // namespace occupancy
