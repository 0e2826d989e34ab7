// occupancy: fit site-occupancy models to survey CSVs and run simulation studies.

#include <CLI11.hpp>

#include <iostream>
#include <map>

#include "occupancy/cli.hpp"
#include "occupancy/model_spec.hpp"

using namespace occupancy;

namespace {

constexpr const char* kVersion = "0.1.0";

VectorXd parse_vector(const std::string& text, const char* flag) {
  const auto parts = split_list(text, ',');
  VectorXd v(static_cast<Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    try {
      std::size_t used = 0;
      v(static_cast<Index>(i)) = std::stod(parts[i], &used);
      if (used != parts[i].size()) throw std::invalid_argument(parts[i]);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::InvalidConfig,
                  std::string(flag) + ": '" + parts[i] + "' is not a number");
    }
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage and full-likelihood estimation for site-occupancy models"};
  app.require_subcommand(1);

  FitArgs fit;
  std::string detect_cols, method = "two-stage", stage2 = "iwls";
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model to a one-row-per-site CSV");
  fit_cmd->add_option("--data", fit.data, "Input CSV")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--detect-cols", detect_cols, "Detection columns, e.g. y1,y2,y3")->required();
  fit_cmd->add_option("--occ-model", fit.occ_model, "Occupancy covariates, e.g. elev+forest");
  fit_cmd->add_option("--det-model", fit.det_models,
                      "Detection model; repeat to rank candidates by AIC")
      ->take_all();
  fit_cmd->add_flag("--visit-intercepts", fit.visit_intercepts, "One detection intercept per visit");
  fit_cmd->add_option("--method", method, "two-stage, full or both")
      ->check(CLI::IsMember({"two-stage", "full", "both"}));
  fit_cmd->add_option("--stage2", stage2, "iwls, direct or offset")
      ->check(CLI::IsMember({"iwls", "direct", "offset"}));
  fit_cmd->add_flag("--standardize", fit.standardize, "Centre and scale covariate columns");
  fit_cmd->add_option("--site-col", fit.site_col, "Column holding site labels");
  fit_cmd->add_option("--out", fit.out, "Write the report as JSON");

  SimulateArgs sim;
  std::string alpha = "1,1", beta = "-1.5,-0.5,-0.5", methods = "iwls,direct,offset,full",
              reference = "direct";
  long long sites = 500, visits = 5;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo study of the estimators");
  sim_cmd->add_option("--sites", sites, "Sites per dataset");
  sim_cmd->add_option("--visits", visits, "Visits per site");
  sim_cmd->add_option("--alpha", alpha, "Occupancy coefficients a0,a1,...");
  sim_cmd->add_option("--beta", beta, "Detection coefficients b0,b1,...,bt");
  sim_cmd->add_option("--reps", sim.config.n_reps, "Replicates");
  sim_cmd->add_option("--seed", sim.config.seed, "Random seed");
  sim_cmd->add_option("--methods", methods, "Subset of iwls,direct,offset,full");
  sim_cmd->add_option("--reference", reference, "Method efficiencies are relative to");
  sim_cmd->add_option("--threads", sim.config.threads, "Worker threads (0 = all cores)");
  sim_cmd->add_flag("--regenerate-covariates", sim.config.regenerate_covariates,
                    "Draw fresh covariates for every replicate");
  sim_cmd->add_option("--out-prefix", sim.out_prefix, "Writes PREFIX.csv and PREFIX_summary.json");

  app.add_subcommand("version", "Print the version");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit_cmd) {
      fit.detect_cols = split_list(detect_cols, ',');
      if (fit.det_models.empty()) fit.det_models = {""};
      const std::map<std::string, FitMethod> methods_by_name{
          {"two-stage", FitMethod::TwoStage}, {"full", FitMethod::Full}, {"both", FitMethod::Both}};
      const std::map<std::string, OccupancyMethod> stage2_by_name{
          {"iwls", OccupancyMethod::IWLS},
          {"direct", OccupancyMethod::Direct},
          {"offset", OccupancyMethod::Offset}};
      fit.method = methods_by_name.at(method);
      fit.stage2 = stage2_by_name.at(stage2);
      const auto reports = run_fit(fit);
      for (std::size_t i = 0; i < reports.size(); ++i) {
        if (i) std::cout << '\n';
        write_text(std::cout, reports[i]);
      }
    } else if (*sim_cmd) {
      sim.config.n_sites = static_cast<Index>(sites);
      sim.config.n_visits = static_cast<Index>(visits);
      sim.config.alpha_true = parse_vector(alpha, "--alpha");
      sim.config.beta_true = parse_vector(beta, "--beta");
      sim.config.methods.clear();
      for (const auto& name : split_list(methods, ',')) {
        const auto e = parse_estimator(name);
        if (!e) throw Error(ErrorCode::InvalidConfig, "--methods: unknown method '" + name + "'");
        sim.config.methods.push_back(*e);
      }
      const auto ref = parse_estimator(reference);
      if (!ref) throw Error(ErrorCode::InvalidConfig, "--reference: unknown method '" + reference + "'");
      sim.reference = *ref;
      const StudySummary summary = run_simulate(sim);
      std::cout << "wrote " << sim.out_prefix << ".csv and " << sim.out_prefix
                << "_summary.json\n";
      for (const auto& m : summary.methods)
        std::cout << to_string(m.method) << ": converged " << m.n_converged << ", not converged "
                  << m.n_not_converged << ", failed " << m.n_failed << ", flagged " << m.n_flagged
                  << '\n';
    } else {
      std::cout << "occupancy " << kVersion << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    const std::string hint = error_hint(e.code());
    if (!hint.empty()) std::cerr << "hint: " << hint << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
