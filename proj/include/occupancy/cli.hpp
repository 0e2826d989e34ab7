#pragma once

// Command implementations behind the `occupancy` executable. Argument parsing
// lives in the tool; these take already-parsed options.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "occupancy/dataset_io.hpp"
#include "occupancy/report.hpp"
#include "occupancy/simulation.hpp"

namespace occupancy {

enum class FitMethod { TwoStage, Full, Both };

struct FitArgs {
  std::string data;
  std::vector<std::string> detect_cols;
  std::string occ_model;
  /// More than one model triggers AIC ranking; the lowest AIC is used.
  std::vector<std::string> det_models{""};
  bool visit_intercepts = false;
  FitMethod method = FitMethod::TwoStage;
  OccupancyMethod stage2 = OccupancyMethod::IWLS;
  bool standardize = false;
  std::string site_col;
  std::string out;  // JSON path; empty to skip
};

/// Fits the selected model(s). Returns one report per method run.
std::vector<FitReport> run_fit(const FitArgs& args);
std::vector<FitReport> run_fit(const CsvTable& table, const FitArgs& args);

/// JSON written by `fit`: a single report object, or an array for `both`.
nlohmann::json fit_output_json(const std::vector<FitReport>& reports);

struct SimulateArgs {
  SimConfig config;
  Estimator reference = Estimator::Direct;
  std::string out_prefix = "study";
};

/// Runs the study and writes <prefix>.csv and <prefix>_summary.json.
StudySummary run_simulate(const SimulateArgs& args);

/// Short hint appended to an error message for the user.
std::string error_hint(ErrorCode code);

}  // namespace occupancy
