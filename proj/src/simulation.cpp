#include "occupancy/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <thread>

#include "occupancy/full_likelihood.hpp"
#include "occupancy/rng.hpp"
#include "occupancy/stage1_detection.hpp"
#include "occupancy/stage2_occupancy.hpp"

namespace occupancy {

const char* to_string(Estimator e) noexcept {
  switch (e) {
    case Estimator::IWLS: return "iwls";
    case Estimator::Direct: return "direct";
    case Estimator::Offset: return "offset";
    case Estimator::Full: return "full";
  }
  return "unknown";
}

std::optional<Estimator> parse_estimator(const std::string& name) {
  for (Estimator e : {Estimator::IWLS, Estimator::Direct, Estimator::Offset, Estimator::Full})
    if (name == to_string(e)) return e;
  return std::nullopt;
}

void SimConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
  if (n_sites < 1) fail("need at least one site");
  if (n_visits < 2) fail("need at least two visits (got " + std::to_string(n_visits) + ")");
  if (alpha_true.size() < 1) fail("alpha needs an intercept");
  if (beta_true.size() < 2) fail("beta needs an intercept and the time coefficient");
  if (!alpha_true.allFinite() || !beta_true.allFinite()) fail("non-finite coefficients");
  if (n_reps < 1) fail("need at least one replicate");
  if (methods.empty()) fail("no estimators requested");
}

std::vector<std::string> SimConfig::parameter_names() const {
  std::vector<std::string> names;
  for (Index k = 0; k < alpha_true.size(); ++k) names.push_back("alpha" + std::to_string(k));
  for (Index k = 0; k + 1 < beta_true.size(); ++k) names.push_back("beta" + std::to_string(k));
  names.push_back("beta_t");
  return names;
}

VectorXd SimConfig::truth() const {
  VectorXd t(alpha_true.size() + beta_true.size());
  t << alpha_true, beta_true;
  return t;
}

namespace {

constexpr std::uint64_t kCovariateStream = 0x8000000000000000ULL;

void fill_normal(Xoshiro256pp& rng, MatrixXd& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rng.normal();
}

}  // namespace

SimCovariates draw_covariates(const SimConfig& cfg, int replicate) {
  const std::uint64_t index =
      cfg.regenerate_covariates ? kCovariateStream + 1 + static_cast<std::uint64_t>(replicate)
                                : kCovariateStream;
  Xoshiro256pp rng = Xoshiro256pp::stream(cfg.seed, index);
  SimCovariates cov;
  cov.occ.resize(cfg.n_sites, cfg.alpha_true.size() - 1);
  cov.det_site.resize(cfg.n_sites, cfg.beta_true.size() - 2);
  cov.time.resize(cfg.n_sites, cfg.n_visits);
  fill_normal(rng, cov.occ);
  fill_normal(rng, cov.det_site);
  fill_normal(rng, cov.time);
  return cov;
}

Dataset assemble_dataset(const SimCovariates& cov, MatrixXd detections) {
  const Index S = cov.time.rows();
  const Index tau = cov.time.cols();
  MatrixXd X(S, cov.occ.cols() + 1);
  X << VectorXd::Ones(S), cov.occ;
  std::vector<std::string> occ_names{"(Intercept)"};
  for (Index k = 0; k < cov.occ.cols(); ++k) occ_names.push_back("x" + std::to_string(k + 1));

  DetectionDesign det;
  det.model = DetectionModel::TimeVaryingCovariates;
  det.names = {"(Intercept)"};
  for (Index k = 0; k < cov.det_site.cols(); ++k)
    det.names.push_back("u" + std::to_string(k + 1));
  det.names.push_back("time");
  for (Index j = 0; j < tau; ++j) {
    MatrixXd block(S, cov.det_site.cols() + 2);
    block << VectorXd::Ones(S), cov.det_site, cov.time.col(j);
    det.visits.push_back(std::move(block));
  }
  return Dataset(std::move(detections), std::move(X), std::move(det), std::move(occ_names));
}

SimulatedData simulate_replicate(const SimConfig& cfg, int replicate) {
  cfg.validate();
  const SimCovariates cov = draw_covariates(cfg, replicate);
  const Index S = cfg.n_sites;
  const Index tau = cfg.n_visits;
  const Index n_site_det = cov.det_site.cols();

  VectorXd psi(S);
  VectorXd theta(S);
  MatrixXd p(S, tau);
  for (Index s = 0; s < S; ++s) {
    double lin = cfg.alpha_true(0);
    for (Index k = 0; k < cov.occ.cols(); ++k) lin += cfg.alpha_true(k + 1) * cov.occ(s, k);
    psi(s) = logistic(lin);
    double site_lin = cfg.beta_true(0);
    for (Index k = 0; k < n_site_det; ++k) site_lin += cfg.beta_true(k + 1) * cov.det_site(s, k);
    for (Index j = 0; j < tau; ++j)
      p(s, j) = logistic(site_lin + cfg.beta_true(n_site_det + 1) * cov.time(s, j));
    theta(s) = theta_from_p(p.row(s));
  }

  Xoshiro256pp rng = Xoshiro256pp::stream(cfg.seed, static_cast<std::uint64_t>(replicate));
  Eigen::VectorXi occupied(S);
  for (Index s = 0; s < S; ++s) occupied(s) = rng.bernoulli(psi(s)) ? 1 : 0;
  MatrixXd y = MatrixXd::Zero(S, tau);
  for (Index s = 0; s < S; ++s)
    for (Index j = 0; j < tau; ++j) {
      const bool hit = rng.bernoulli(p(s, j));
      if (occupied(s) && hit) y(s, j) = 1.0;
    }
  return {assemble_dataset(cov, std::move(y)), std::move(psi), std::move(theta),
          std::move(occupied)};
}

Dataset generate_dataset(const SimConfig& cfg, int replicate) {
  return simulate_replicate(cfg, replicate).data;
}

namespace {

VectorXd concat(const VectorXd& a, const VectorXd& b) {
  VectorXd v(a.size() + b.size());
  v << a, b;
  return v;
}

std::vector<ReplicateRecord> fit_replicate(const SimConfig& cfg, int r) {
  const Dataset data = generate_dataset(cfg, r);
  std::vector<ReplicateRecord> out;

  std::optional<DetectionFit> det;
  std::string det_error;
  std::optional<Coefficients> two_stage;
  const bool needs_stage1 = std::any_of(cfg.methods.begin(), cfg.methods.end(),
                                        [](Estimator e) { return e != Estimator::Full; });
  if (needs_stage1) {
    try {
      det = fit_detection(data);
    } catch (const Error& e) {
      det_error = e.what();
    }
  }

  for (Estimator method : cfg.methods) {
    ReplicateRecord rec;
    rec.replicate = r;
    rec.method = method;
    try {
      if (method == Estimator::Full) {
        const FullFit fit = fit_full(data, {}, two_stage);
        rec.estimate = concat(fit.alpha_hat, fit.beta_hat);
        rec.var_alpha = fit.var_joint.topLeftCorner(data.n_occ_coef(), data.n_occ_coef());
        rec.converged = fit.converged;
        rec.flagged = fit.extreme_flag;
      } else if (!det) {
        rec.error = det_error;
      } else {
        const OccupancyMethod m = method == Estimator::IWLS     ? OccupancyMethod::IWLS
                                  : method == Estimator::Direct ? OccupancyMethod::Direct
                                                                : OccupancyMethod::Offset;
        const OccupancyFit fit = fit_occupancy(data, *det, m);
        rec.estimate = concat(fit.alpha_hat, det->beta_hat);
        rec.var_alpha = fit.var_sandwich;
        rec.converged = fit.converged && det->converged;
        rec.fallback_used = fit.fallback_used;
        rec.flagged = fit.boundary_estimate || det->separation_suspected;
        if (method == Estimator::IWLS && fit.converged)
          two_stage = Coefficients{fit.alpha_hat, det->beta_hat};
      }
    } catch (const Error& e) {
      rec.estimate.resize(0);
      rec.error = e.what();
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

std::vector<ReplicateRecord> run_study(const SimConfig& cfg) {
  cfg.validate();
  const std::size_t n = static_cast<std::size_t>(cfg.n_reps);
  std::vector<std::vector<ReplicateRecord>> per_rep(n);
  unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(n));

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t r = next++; r < n; r = next++)
      per_rep[r] = fit_replicate(cfg, static_cast<int>(r));
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  std::vector<ReplicateRecord> records;
  records.reserve(n * cfg.methods.size());
  for (auto& rep : per_rep)
    for (auto& rec : rep) records.push_back(std::move(rec));
  return records;
}

double median(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorCode::EmptyInput, "median of an empty sample");
  std::vector<double> v(x.begin(), x.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double robust_mad(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorCode::EmptyInput, "mad of an empty sample");
  constexpr double kConsistency = 1.482602218505602;  // 1 / Phi^-1(3/4)
  const double m = median(x);
  std::vector<double> dev(x.size());
  std::transform(x.begin(), x.end(), dev.begin(), [m](double v) { return std::abs(v - m); });
  return kConsistency * median(dev);
}

std::vector<double> estimates_of(const std::vector<ReplicateRecord>& records, Estimator method,
                                 Index parameter) {
  std::vector<double> out;
  for (const auto& rec : records)
    if (rec.method == method && rec.usable()) out.push_back(rec.estimate(parameter));
  return out;
}

const ParameterSummary& MethodSummary::param(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return p;
  throw Error(ErrorCode::InvalidConfig, "no parameter named " + name);
}

const MethodSummary& StudySummary::method(Estimator e) const {
  for (const auto& m : methods)
    if (m.method == e) return m;
  throw Error(ErrorCode::InvalidConfig, std::string("no summary for method ") + to_string(e));
}

StudySummary summarize_study(const std::vector<ReplicateRecord>& records, const VectorXd& truth,
                             const std::vector<std::string>& names, Estimator reference) {
  if (static_cast<Index>(names.size()) != truth.size())
    throw Error(ErrorCode::LengthMismatch, "one name is needed per parameter");
  std::vector<Estimator> order;
  for (const auto& rec : records)
    if (std::find(order.begin(), order.end(), rec.method) == order.end())
      order.push_back(rec.method);
  if (std::find(order.begin(), order.end(), reference) == order.end())
    throw Error(ErrorCode::InvalidConfig,
                std::string("reference method ") + to_string(reference) + " is not in the study");

  StudySummary summary;
  summary.reference = reference;
  int max_rep = -1;
  for (const auto& rec : records) max_rep = std::max(max_rep, rec.replicate);
  summary.n_reps = max_rep + 1;

  for (Estimator m : order) {
    MethodSummary ms;
    ms.method = m;
    for (const auto& rec : records) {
      if (rec.method != m) continue;
      if (!rec.usable()) ++ms.n_failed;
      else if (rec.converged) ++ms.n_converged;
      else ++ms.n_not_converged;
      ms.n_fallback += rec.fallback_used ? 1 : 0;
      ms.n_flagged += rec.flagged ? 1 : 0;
    }
    for (Index k = 0; k < truth.size(); ++k) {
      const std::vector<double> x = estimates_of(records, m, k);
      if (x.size() < 2)
        throw Error(ErrorCode::InsufficientReplicates,
                    std::string("fewer than two usable replicates for ") + to_string(m));
      ParameterSummary ps;
      ps.name = names[static_cast<std::size_t>(k)];
      ps.truth = truth(k);
      ps.n = static_cast<Index>(x.size());
      ps.median = median(x);
      ps.mad = robust_mad(x);
      const Eigen::Map<const VectorXd> v(x.data(), static_cast<Index>(x.size()));
      ps.mean = v.mean();
      ps.sd = std::sqrt((v.array() - ps.mean).square().sum() / static_cast<double>(x.size() - 1));
      ms.params.push_back(ps);
    }
    summary.methods.push_back(std::move(ms));
  }

  const MethodSummary& ref = summary.method(reference);
  for (auto& ms : summary.methods)
    for (std::size_t k = 0; k < ms.params.size(); ++k) {
      auto& ps = ms.params[k];
      const auto& rp = ref.params[k];
      ps.efficiency = 100.0 * (rp.sd * rp.sd) / (ps.sd * ps.sd);
      ps.efficiency_mad = 100.0 * (rp.mad * rp.mad) / (ps.mad * ps.mad);
    }
  return summary;
}

AgreementTable agreement_table(std::span<const double> a, std::span<const double> b,
                               double threshold) {
  if (a.size() != b.size())
    throw Error(ErrorCode::LengthMismatch, "agreement table needs equal-length samples");
  AgreementTable t;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool a_gt = a[i] > threshold;
    const bool b_gt = b[i] > threshold;
    if (!a_gt && !b_gt) ++t.both_le;
    else if (!a_gt) ++t.a_le_b_gt;
    else if (!b_gt) ++t.a_gt_b_le;
    else ++t.both_gt;
  }
  return t;
}

void write_study_csv(std::ostream& out, const std::vector<ReplicateRecord>& records,
                     const std::vector<std::string>& names) {
  out << "replicate,method,parameter,estimate,converged,fallback_used,flagged,error\n";
  out << std::setprecision(17);
  for (const auto& rec : records) {
    std::string err = rec.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    for (std::size_t k = 0; k < names.size(); ++k) {
      out << rec.replicate << ',' << to_string(rec.method) << ',' << names[k] << ',';
      if (rec.usable()) out << rec.estimate(static_cast<Index>(k));
      else out << "NA";
      out << ',' << rec.converged << ',' << rec.fallback_used << ',' << rec.flagged << ','
          << err << '\n';
    }
  }
}

nlohmann::json summary_to_json(const StudySummary& summary) {
  nlohmann::json j;
  j["reference"] = to_string(summary.reference);
  j["n_reps"] = summary.n_reps;
  j["methods"] = nlohmann::json::array();
  for (const auto& ms : summary.methods) {
    nlohmann::json m;
    m["method"] = to_string(ms.method);
    m["counts"] = {{"converged", ms.n_converged},
                   {"not_converged", ms.n_not_converged},
                   {"failed", ms.n_failed},
                   {"fallback", ms.n_fallback},
                   {"flagged", ms.n_flagged}};
    m["parameters"] = nlohmann::json::array();
    for (const auto& ps : ms.params)
      m["parameters"].push_back({{"name", ps.name},
                                 {"truth", ps.truth},
                                 {"median", ps.median},
                                 {"mad", ps.mad},
                                 {"mean", ps.mean},
                                 {"sd", ps.sd},
                                 {"efficiency", ps.efficiency},
                                 {"efficiency_mad", ps.efficiency_mad},
                                 {"n", ps.n}});
    j["methods"].push_back(std::move(m));
  }
  return j;
}

}  // namespace occupancy
