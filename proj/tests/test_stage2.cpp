#include <doctest.h>

#include <cmath>

#include "occupancy/stage2_occupancy.hpp"
#include "support.hpp"

using namespace occupancy;
using namespace occupancy::testing;

namespace {

// Plain logistic regression by IRLS, independent of the library solvers.
VectorXd logistic_mle(const MatrixXd& X, const VectorXd& w) {
  VectorXd b = VectorXd::Zero(X.cols());
  for (int it = 0; it < 100; ++it) {
    const VectorXd mu = (X * b).unaryExpr([](double e) { return 1.0 / (1.0 + std::exp(-e)); });
    const VectorXd wt = mu.array() * (1.0 - mu.array());
    const MatrixXd H = X.transpose() * wt.asDiagonal() * X;
    const VectorXd step = H.ldlt().solve(X.transpose() * (w - mu));
    b += step;
    if (step.norm() < 1e-14) break;
  }
  return b;
}

Dataset with_occ_design(const Dataset& d, const MatrixXd& X) {
  return Dataset(d.detections(), X, d.det_design());
}

// Time-constant cross-derivative: -sum x u' psi(1-psi)(1-w) tau (1-theta) p / (1-psi theta)^2.
MatrixXd homogeneous_B(const Dataset& d, const VectorXd& alpha, const VectorXd& p, bool expected) {
  const VectorXd psi = occupancy_probs(d, alpha);
  const double tau = static_cast<double>(d.n_visits());
  MatrixXd B = MatrixXd::Zero(d.n_occ_coef(), d.n_det_coef());
  for (Index s = 0; s < d.n_sites(); ++s) {
    const double theta = 1.0 - std::pow(1.0 - p(s), tau);
    const double eta = psi(s) * theta;
    const double one_minus_w = expected ? 1.0 - eta : 1.0 - d.detected()(s);
    const double c = psi(s) * (1 - psi(s)) * one_minus_w * tau * (1 - theta) * p(s) / ((1 - eta) * (1 - eta));
    B -= c * d.occ_design().row(s).transpose() * d.det_block(0).row(s);
  }
  return B;
}

}  // namespace

TEST_CASE("theta = 1 gives ordinary logistic regression") {
  Xoshiro256pp rng(4);
  const auto inst = random_instance(rng, 200, 3, 3, 2);
  const VectorXd ones = VectorXd::Ones(200);
  const MatrixXd p = MatrixXd::Ones(200, 3);
  const MatrixXd v0 = MatrixXd::Zero(2, 2);
  const VectorXd oracle = logistic_mle(inst.data.occ_design(), inst.data.detected());
  for (auto m : {OccupancyMethod::IWLS, OccupancyMethod::Direct, OccupancyMethod::Offset}) {
    const auto fit = fit_occupancy(inst.data, ones, p, v0, m);
    CHECK(fit.converged);
    CHECK((fit.alpha_hat - oracle).cwiseAbs().maxCoeff() < 1e-6);
  }
  const auto half = fit_occupancy(indicator_dataset(10, 5), VectorXd::Ones(10), MatrixXd::Ones(10, 2),
                                  MatrixXd::Zero(1, 1), OccupancyMethod::IWLS);
  CHECK(std::abs(half.alpha_hat(0)) < 1e-6);
}

TEST_CASE("constant theta closed form psi = wbar / theta") {
  const Dataset d = indicator_dataset(20, 9);
  const VectorXd theta = VectorXd::Constant(20, 0.9);
  const MatrixXd p = MatrixXd::Constant(20, 2, 1 - std::sqrt(0.1));
  for (auto m : {OccupancyMethod::IWLS, OccupancyMethod::Direct, OccupancyMethod::Offset}) {
    const auto fit = fit_occupancy(d, theta, p, MatrixXd::Zero(1, 1), m);
    CHECK(fit.converged);
    CHECK(std::abs(logistic(fit.alpha_hat(0)) - 0.5) < 1e-8);
  }
  // 1-d grid confirmation
  double best = -1e300, arg = 0.0;
  for (int i = -5000; i <= 5000; ++i) {
    const double a = i * 1e-4;
    const double ll = partial_occupancy_loglik(d, VectorXd::Constant(1, a), theta);
    if (ll > best) best = ll, arg = a;
  }
  CHECK(std::abs(arg) <= 1e-4);
}

TEST_CASE("IWLS and direct maximisation agree") {
  Xoshiro256pp rng(8);
  for (int rep = 0; rep < 5; ++rep) {
    const auto inst = random_instance(rng, 300, 4, 3, 3);
    const DetectionFit det = fit_detection(inst.data);
    const auto a = fit_occupancy(inst.data, det, OccupancyMethod::IWLS);
    const auto b = fit_occupancy(inst.data, det, OccupancyMethod::Direct);
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    CHECK((a.alpha_hat - b.alpha_hat).cwiseAbs().maxCoeff() < 1e-4);
    CHECK(partial_occupancy_score(inst.data, a.alpha_hat, det.theta_hat).lpNorm<Eigen::Infinity>() < 1e-6);
    // fixed point of the update
    const VectorXd next = iwls_update(inst.data, iwls_state(inst.data, a.alpha_hat, det.theta_hat));
    CHECK((next - a.alpha_hat).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("offset method agrees when occupancy and detection are intercept-only") {
  // the offset fixed point solves sum x (w - eta) = 0, which matches the partial
  // score only when theta does not vary across sites
  Xoshiro256pp rng(9);
  const auto inst = random_instance(rng, 300, 4, 1, 1, true);
  const DetectionFit det = fit_detection(inst.data);
  const auto a = fit_occupancy(inst.data, det, OccupancyMethod::IWLS);
  const auto c = fit_occupancy(inst.data, det, OccupancyMethod::Offset);
  REQUIRE(c.converged);
  CHECK(std::abs(a.alpha_hat(0) - c.alpha_hat(0)) < 1e-4);
}

TEST_CASE("fallback from IWLS to direct") {
  Xoshiro256pp rng(12);
  const auto inst = random_instance(rng, 200, 4, 2, 2);
  const DetectionFit det = fit_detection(inst.data);
  OccupancyFitOptions opts;
  opts.max_iter = 1;
  const auto fit = fit_occupancy(inst.data, det, OccupancyMethod::IWLS, opts);
  CHECK(fit.fallback_used);
  CHECK(fit.method == OccupancyMethod::Direct);
  CHECK(fit.converged);
  opts.fallback = false;
  const auto nofb = fit_occupancy(inst.data, det, OccupancyMethod::IWLS, opts);
  CHECK_FALSE(nofb.converged);
  CHECK_FALSE(nofb.fallback_used);
}

TEST_CASE("rank deficiency and boundary") {
  Xoshiro256pp rng(13);
  const auto inst = random_instance(rng, 100, 3, 2, 2);
  MatrixXd X(100, 3);
  X << inst.data.occ_design(), 2.0 * inst.data.occ_design().col(1);
  const Dataset bad = with_occ_design(inst.data, X);
  const DetectionFit det = fit_detection(inst.data);
  CHECK_THROWS_AS(fit_occupancy(bad, det, OccupancyMethod::IWLS), Error);

  // every site detected with theta = 1: psi runs to 1
  const Dataset all = counts_dataset(std::vector<int>(12, 1), 2);
  const auto fit = fit_occupancy(all, VectorXd::Ones(12), MatrixXd::Ones(12, 2), MatrixXd::Zero(1, 1),
                                 OccupancyMethod::Direct);
  CHECK(fit.boundary_estimate);
}

TEST_CASE("information matches the partial score derivative") {
  Xoshiro256pp rng(14);
  for (int rep = 0; rep < 10; ++rep) {
    const auto inst = random_instance(rng, 80, 4, 3, 3);
    const VectorXd theta = theta_from_p_rows(detection_probs(inst.data, random_vector(rng, 3, 0.6)));
    const VectorXd a = random_vector(rng, 3, 0.8);
    const auto Q = [&](const VectorXd& x) { return partial_occupancy_score(inst.data, x, theta); };
    const MatrixXd fd = -fd_jacobian(Q, a);
    const MatrixXd I = occupancy_information(inst.data, a, theta);
    CHECK((I - fd).cwiseAbs().maxCoeff() / I.cwiseAbs().maxCoeff() < 1e-4);
  }
  // theta = 1: logistic information
  const auto inst = random_instance(rng, 50, 3, 2, 2);
  const VectorXd a = random_vector(rng, 2);
  const VectorXd psi = occupancy_probs(inst.data, a);
  const MatrixXd& X = inst.data.occ_design();
  const MatrixXd logit_info = X.transpose() * (psi.array() * (1 - psi.array())).matrix().asDiagonal() * X;
  CHECK((occupancy_information(inst.data, a, VectorXd::Ones(50)) - logit_info).cwiseAbs().maxCoeff() < 1e-12);

  // two sites, psi = 0.5, theta = 0.875, w = (1, 0): per-site bracket by hand
  const Dataset two = counts_dataset({1, 0}, 3);
  const double th = 0.875, ps = 0.5;
  double hand = 0.0;
  for (double w : {1.0, 0.0})
    hand += (th - 2 * ps * th + ps * ps * th * th + w * (1 - th)) / std::pow(1 - ps * th, 2) * ps * (1 - ps);
  CHECK(occupancy_information(two, VectorXd::Zero(1), VectorXd::Constant(2, th))(0, 0) ==
        doctest::Approx(hand).epsilon(1e-14));
}

TEST_CASE("cross-derivative") {
  Xoshiro256pp rng(15);
  for (int rep = 0; rep < 10; ++rep) {
    const auto inst = random_instance(rng, 80, 4, 2, 3);
    const VectorXd a = random_vector(rng, 2, 0.8), b = random_vector(rng, 3, 0.6);
    const auto Qb = [&](const VectorXd& beta) {
      return partial_occupancy_score(inst.data, a, theta_from_p_rows(detection_probs(inst.data, beta)));
    };
    const MatrixXd fd = fd_jacobian(Qb, b);
    const MatrixXd B = cross_term_B(inst.data, a, detection_probs(inst.data, b), false);
    CHECK((B - fd).cwiseAbs().maxCoeff() / std::max(1e-8, B.cwiseAbs().maxCoeff()) < 1e-4);
  }

  const auto inst = random_instance(rng, 60, 5, 2, 3, true);
  const VectorXd a = random_vector(rng, 2), b = random_vector(rng, 3, 0.5);
  const MatrixXd p = detection_probs(inst.data, b);
  for (bool expected : {false, true}) {
    const MatrixXd het = cross_term_B(inst.data, a, p, expected);
    const MatrixXd hom = homogeneous_B(inst.data, a, p.col(0), expected);
    CHECK((het - hom).cwiseAbs().maxCoeff() <= 1e-12);
  }
  const MatrixXd p_one = MatrixXd::Constant(60, 5, 1 - 1e-12);
  CHECK(cross_term_B(inst.data, a, p_one).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sandwich variance") {
  Xoshiro256pp rng(16);
  MatrixXd M(3, 3);
  for (Index i = 0; i < 9; ++i) M.data()[i] = rng.normal();
  const MatrixXd I = M * M.transpose() + MatrixXd::Identity(3, 3);
  const MatrixXd Iinv = inverse_spd(I);
  MatrixXd B(3, 2);
  for (Index i = 0; i < 6; ++i) B.data()[i] = rng.normal();
  MatrixXd N(2, 2);
  for (Index i = 0; i < 4; ++i) N.data()[i] = rng.normal();
  const MatrixXd V = N * N.transpose();
  CHECK((sandwich_variance(I, B, MatrixXd::Zero(2, 2)) - Iinv).cwiseAbs().maxCoeff() == 0.0);
  CHECK((sandwich_variance(I, MatrixXd::Zero(3, 2), V) - Iinv).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sandwich_variance(I, B, V) - Iinv);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  CHECK_THROWS_AS(sandwich_variance(I, B, MatrixXd::Zero(3, 3)), Error);
}

TEST_CASE("occupancy with standard errors") {
  const Dataset d = indicator_dataset(4, 2);
  const auto est = psi_with_se(d, VectorXd::Zero(1), MatrixXd::Constant(1, 1, 0.04));
  CHECK(est.psi(0) == doctest::Approx(0.5));
  CHECK(est.se(0) == doctest::Approx(0.05).epsilon(1e-14));
  const auto zero = psi_with_se(d, VectorXd::Constant(1, 0.3), MatrixXd::Zero(1, 1));
  CHECK(zero.se.cwiseAbs().maxCoeff() == 0.0);

  Xoshiro256pp rng(18);
  const auto inst = random_instance(rng, 300, 4, 2, 3);
  const DetectionFit det = fit_detection(inst.data);
  const auto fit = fit_occupancy(inst.data, det, OccupancyMethod::IWLS);
  CHECK((fit.psi_hat.array() > 0).all());
  CHECK((fit.psi_hat.array() < 1).all());
  CHECK((fit.psi_se.array() >= 0).all());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(fit.var_sandwich - fit.var_naive);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10);
}
