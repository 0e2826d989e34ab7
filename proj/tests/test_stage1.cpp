#include <doctest.h>

#include <cmath>

#include "occupancy/stage1_detection.hpp"
#include "support.hpp"

using namespace occupancy;
using namespace occupancy::testing;

TEST_CASE("intercept-only closed form") {
  const Dataset d = counts_dataset({1, 1, 2, 0, 0}, 2);
  const DetectionFit fit = fit_detection(d);
  CHECK(fit.converged);
  CHECK(std::abs(fit.beta_hat(0)) < 1e-8);
  CHECK(std::abs(fit.p_hat(0, 0) - 0.5) < 1e-6);

  // grid over p at 1e-5 resolution
  double best_p = 0.0, best = -1e300;
  for (int i = 1; i < 100000; ++i) {
    const double p = i * 1e-5;
    double ll = 0.0;
    for (int y : {1, 1, 2}) ll += y * std::log(p) + (2 - y) * std::log1p(-p) - std::log(1 - (1 - p) * (1 - p));
    if (ll > best) best = ll, best_p = p;
  }
  CHECK(std::abs(best_p - 0.5) <= 1e-5);
  CHECK(fit.cond_loglik == doctest::Approx(best).epsilon(1e-9));
  CHECK(fit.theta_hat(3) == doctest::Approx(0.75).epsilon(1e-8));
}

TEST_CASE("every detected site seen on every visit suggests separation") {
  const Dataset d = counts_dataset({2, 2, 2, 0}, 2);
  const DetectionFit fit = fit_detection(d);
  CHECK(fit.separation_suspected);
  CHECK(fit.beta_hat(0) > 5.0);
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(fit_detection(counts_dataset({0, 0, 0}, 3)), Error);
  MatrixXd U(4, 2);
  U << 1, 2, 1, 2, 1, 2, 1, 2;
  const Dataset d(MatrixXd::Ones(4, 2), MatrixXd::Ones(4, 1), DetectionDesign::time_independent(U, 2));
  try {
    fit_detection(d);
    FAIL("expected RankDeficientDesign");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficientDesign);
  }
}

TEST_CASE("fit invariants") {
  Xoshiro256pp rng(31);
  const auto inst = random_instance(rng, 400, 4, 2, 3);
  const DetectionFit fit = fit_detection(inst.data);
  REQUIRE(fit.converged);
  CHECK((fit.v_beta - fit.v_beta.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(fit.v_beta);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  for (Index s = 0; s < inst.data.n_sites(); ++s)
    CHECK(std::abs(fit.theta_hat(s) - theta_from_p(fit.p_hat.row(s))) < 1e-12);
  CHECK(fit.aic == doctest::Approx(-2 * fit.cond_loglik + 2 * 3).epsilon(1e-14));
  CHECK(conditional_detection_score(inst.data, fit.beta_hat).lpNorm<Eigen::Infinity>() < 1e-6);

  // undetected sites carry no information about beta
  const Dataset sub = inst.data.subset(inst.data.detected_sites());
  const DetectionFit fit_sub = fit_detection(sub);
  CHECK((fit_sub.beta_hat - fit.beta_hat).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("detection AIC") {
  DetectionFit f;
  f.beta_hat = VectorXd(0);
  f.cond_loglik = -10.0;
  CHECK(detection_aic(f) == 20.0);

  // adding a noise covariate: AIC changes by 2 - 2 * (loglik gain)
  Xoshiro256pp rng(41);
  const auto inst = random_instance(rng, 300, 3, 1, 2, true);
  const Dataset& base = inst.data;
  DetectionDesign noisy = base.det_design();
  for (auto& block : noisy.visits) block.conservativeResize(Eigen::NoChange, 3);
  noisy.names.push_back("noise");
  for (Index s = 0; s < base.n_sites(); ++s) {
    const double z = rng.normal();
    for (auto& block : noisy.visits) block(s, 2) = z;
  }
  const Dataset bigger(base.detections(), base.occ_design(), noisy);
  const auto f1 = fit_detection(base), f2 = fit_detection(bigger);
  CHECK(f2.cond_loglik >= f1.cond_loglik - 1e-9);
  CHECK(f2.aic - f1.aic == doctest::Approx(2.0 - 2.0 * (f2.cond_loglik - f1.cond_loglik)).epsilon(1e-9));
}

TEST_CASE("AIC ranks the generating detection structure first") {
  Xoshiro256pp rng(77);
  const Index S = 3000, tau = 3;
  const VectorXd a_visit = Eigen::Vector3d(0.9, 0.2, -0.6);
  VectorXd site(S);
  MatrixXd survey(S, tau);
  MatrixXd y = MatrixXd::Zero(S, tau);
  for (Index s = 0; s < S; ++s) {
    site(s) = rng.normal();
    for (Index j = 0; j < tau; ++j) survey(s, j) = rng.normal();
    if (!rng.bernoulli(0.7)) continue;
    for (Index j = 0; j < tau; ++j)
      y(s, j) = rng.bernoulli(logistic(a_visit(j) + 0.6 * site(s) - 0.5 * survey(s, j))) ? 1.0 : 0.0;
  }
  auto design = [&](bool with_survey, bool visit_int) {
    DetectionDesign d;
    const Index n_int = visit_int ? tau : 1;
    for (Index j = 0; j < tau; ++j) {
      MatrixXd b = MatrixXd::Zero(S, n_int + 1 + (with_survey ? 1 : 0));
      b.col(visit_int ? j : 0).setOnes();
      b.col(n_int) = site;
      if (with_survey) b.col(n_int + 1) = survey.col(j);
      d.visits.push_back(b);
    }
    return Dataset(y, MatrixXd::Ones(S, 1), d);
  };
  const std::vector<std::string> labels{"site", "site+survey", "site+visit", "site+survey+visit"};
  const auto ranked = rank_detection_models(
      labels, {design(false, false), design(true, false), design(false, true), design(true, true)});
  REQUIRE(ranked.size() == 4);
  CHECK(ranked.front().label == "site+survey+visit");
  for (std::size_t i = 1; i < ranked.size(); ++i) CHECK(ranked[i - 1].aic <= ranked[i].aic);
}
