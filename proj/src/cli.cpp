#include "occupancy/cli.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include "occupancy/dataset_io.hpp"
#include "occupancy/model_spec.hpp"

namespace occupancy {

std::vector<FitReport> run_fit(const FitArgs& args) { return run_fit(read_csv(args.data), args); }

std::vector<FitReport> run_fit(const CsvTable& table, const FitArgs& args) {
  if (args.detect_cols.size() < 2)
    throw Error(ErrorCode::InvalidConfig, "--detect-cols needs at least two columns");
  if (args.det_models.empty()) throw Error(ErrorCode::InvalidConfig, "no detection model given");
  const auto occ = parse_occupancy_model(args.occ_model);

  std::vector<Dataset> candidates;
  for (const auto& formula : args.det_models) {
    auto det = parse_detection_model(formula);
    det.visit_intercepts = det.visit_intercepts || args.visit_intercepts;
    auto schema = make_schema(args.detect_cols, occ, det, args.standardize);
    schema.site_label_col = args.site_col;
    candidates.push_back(dataset_from_table(table, schema));
  }

  std::vector<AicEntry> aic;
  std::size_t chosen = 0;
  if (candidates.size() > 1) {
    aic = rank_detection_models(args.det_models, candidates);
    const auto it = std::find(args.det_models.begin(), args.det_models.end(), aic.front().label);
    chosen = static_cast<std::size_t>(it - args.det_models.begin());
  }
  const Dataset& data = candidates[chosen];
  const std::string model = "psi(" + (args.occ_model.empty() ? "1" : args.occ_model) + ") p(" +
                            (args.det_models[chosen].empty() ? "1" : args.det_models[chosen]) +
                            (args.visit_intercepts ? "+visit" : "") + ")";

  std::vector<FitReport> reports;
  const DetectionFit det = fit_detection(data);
  const OccupancyFit occ_fit = fit_occupancy(data, det, args.stage2);
  if (args.method != FitMethod::Full) {
    reports.push_back(make_two_stage_report(data, det, occ_fit, model));
    reports.back().aic = aic;
  }
  if (args.method != FitMethod::TwoStage) {
    const FullFit full = fit_full(data, {}, Coefficients{occ_fit.alpha_hat, det.beta_hat});
    reports.push_back(make_full_report(data, full, model));
    reports.back().aic = aic;
  }

  if (!args.out.empty()) {
    std::ofstream out(args.out);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + args.out + "'");
    out << fit_output_json(reports).dump(2) << '\n';
  }
  return reports;
}

nlohmann::json fit_output_json(const std::vector<FitReport>& reports) {
  if (reports.size() == 1) return to_json(reports.front());
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  return arr;
}

StudySummary run_simulate(const SimulateArgs& args) {
  args.config.validate();
  if (std::find(args.config.methods.begin(), args.config.methods.end(), args.reference) ==
      args.config.methods.end())
    throw Error(ErrorCode::InvalidConfig,
                std::string("reference method '") + to_string(args.reference) + "' is not run");
  const auto records = run_study(args.config);
  const auto names = args.config.parameter_names();
  const StudySummary summary = summarize_study(records, args.config.truth(), names, args.reference);

  const std::string csv_path = args.out_prefix + ".csv";
  std::ofstream csv(csv_path);
  if (!csv) throw Error(ErrorCode::IoError, "cannot write '" + csv_path + "'");
  write_study_csv(csv, records, names);

  const std::string json_path = args.out_prefix + "_summary.json";
  std::ofstream js(json_path);
  if (!js) throw Error(ErrorCode::IoError, "cannot write '" + json_path + "'");
  auto j = summary_to_json(summary);
  j["config"] = {{"sites", args.config.n_sites},
                 {"visits", args.config.n_visits},
                 {"alpha", std::vector<double>(args.config.alpha_true.begin(),
                                               args.config.alpha_true.end())},
                 {"beta", std::vector<double>(args.config.beta_true.begin(),
                                              args.config.beta_true.end())},
                 {"reps", args.config.n_reps},
                 {"seed", args.config.seed},
                 {"regenerate_covariates", args.config.regenerate_covariates}};
  js << j.dump(2) << '\n';
  return summary;
}

std::string error_hint(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoDetectedSites:
      return "check --detect-cols; every detection history is all zeros";
    case ErrorCode::RankDeficientDesign:
      return "drop a redundant or constant covariate, or check detected sites carry variation";
    case ErrorCode::MissingColumn:
      return "column names are case sensitive; compare with the CSV header";
    case ErrorCode::NonBinaryDetection:
      return "detection cells must be 0 or 1 with no missing values";
    case ErrorCode::RaggedSurveyGroup:
      return "list one column per visit in each timevar(...) term";
    case ErrorCode::InvalidModel:
      return "models look like a+b+timevar(name:c1,c2,c3)";
    case ErrorCode::InvalidConfig:
      return "see --help for valid values";
    case ErrorCode::NotPositiveDefinite:
      return "the information matrix is singular; try --standardize or a smaller model";
    default:
      return "";
  }
}

}  // namespace occupancy
