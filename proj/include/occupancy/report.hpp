#pragma once

// Coefficient tables in the (Estimate, se, t, p) layout, as JSON or text.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "occupancy/full_likelihood.hpp"
#include "occupancy/stage1_detection.hpp"
#include "occupancy/stage2_occupancy.hpp"

namespace occupancy {

struct CoefficientRow {
  std::string block;  // "Occupancy" or "Detection"
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  std::optional<double> t;  // null when se is zero or not finite
  std::optional<double> p;
  bool degenerate = false;
};

/// Wald row: t = estimate / se, p = 2 (1 - Phi(|t|)).
CoefficientRow make_row(std::string block, std::string name, double estimate, double se);

struct FitDiagnostics {
  bool converged = false;
  int iterations = 0;
  bool fallback_used = false;
  bool extreme_flag = false;
};

struct FitReport {
  std::string model;
  std::string method;
  std::vector<CoefficientRow> coefficients;
  FitDiagnostics diagnostics;
  std::vector<AicEntry> aic;
};

FitReport make_two_stage_report(const Dataset& data, const DetectionFit& det,
                                const OccupancyFit& occ, std::string model);
FitReport make_full_report(const Dataset& data, const FullFit& fit, std::string model);

nlohmann::json to_json(const FitReport& report);
void write_text(std::ostream& out, const FitReport& report);

}  // namespace occupancy
