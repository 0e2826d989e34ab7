#include <doctest.h>

#include <cmath>
#include <vector>

#include "occupancy/full_likelihood.hpp"
#include "occupancy/stage2_occupancy.hpp"
#include "support.hpp"

using namespace occupancy;
using namespace occupancy::testing;

TEST_CASE("intercept-only fit matches a brute-force grid") {
  const Dataset d = counts_dataset({1, 2, 0, 1, 0, 0}, 2);
  const FullFit fit = fit_full(d);
  REQUIRE(fit.converged);

  // counts (1,2,0,1,0,0), tau = 2: three detected sites with 4 detections out of 6 visits
  const int n_undetected = 3, n_detected = 3, hits = 4, misses = 2;
  std::vector<double> log_psi, psi, log_p, log_q, theta;
  for (int i = -5000; i <= 5000; ++i) {
    const double ps = 1.0 / (1.0 + std::exp(-i * 1e-3));
    psi.push_back(ps);
    log_psi.push_back(std::log(ps));
    log_p.push_back(std::log(ps));
    log_q.push_back(std::log1p(-ps));
    theta.push_back(1.0 - (1.0 - ps) * (1.0 - ps));
  }
  double best = -1e300, ga = 0.0, gb = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i)
    for (std::size_t k = 0; k < psi.size(); ++k) {
      const double ll = n_undetected * std::log1p(-psi[i] * theta[k]) + n_detected * log_psi[i] +
                        hits * log_p[k] + misses * log_q[k];
      if (ll > best) best = ll, ga = (static_cast<double>(i) - 5000) * 1e-3, gb = (static_cast<double>(k) - 5000) * 1e-3;
    }
  CHECK(std::abs(fit.alpha_hat(0) - ga) <= 2e-3);
  CHECK(std::abs(fit.beta_hat(0) - gb) <= 2e-3);
  CHECK(fit.loglik >= best - 1e-9);
}

TEST_CASE("all sites detected on every visit drifts to the boundary") {
  const Dataset d = counts_dataset(std::vector<int>(8, 3), 3);
  const FullFit fit = fit_full(d);
  CHECK(fit.extreme_flag);
}

TEST_CASE("joint maximum dominates the two-stage point") {
  Xoshiro256pp rng(21);
  for (int rep = 0; rep < 3; ++rep) {
    const auto inst = random_instance(rng, 300, 4, 2, 3);
    const DetectionFit det = fit_detection(inst.data);
    const OccupancyFit occ = fit_occupancy(inst.data, det, OccupancyMethod::IWLS);
    const FullFit fit = fit_full(inst.data);
    REQUIRE(fit.converged);
    CHECK(fit.loglik >= full_log_likelihood(inst.data, {occ.alpha_hat, det.beta_hat}) - 1e-9);
    CHECK(full_score(inst.data, {fit.alpha_hat, fit.beta_hat}).lpNorm<Eigen::Infinity>() < 1e-5);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(fit.var_joint);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("rank-deficient designs are rejected") {
  Xoshiro256pp rng(22);
  const auto inst = random_instance(rng, 50, 3, 2, 2);
  MatrixXd X(50, 3);
  X << inst.data.occ_design(), inst.data.occ_design().col(1);
  CHECK_THROWS_AS(fit_full(Dataset(inst.data.detections(), X, inst.data.det_design())), Error);
}
