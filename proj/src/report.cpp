#include "occupancy/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace occupancy {

CoefficientRow make_row(std::string block, std::string name, double estimate, double se) {
  CoefficientRow row{std::move(block), std::move(name), estimate, se, std::nullopt, std::nullopt,
                     false};
  if (std::isfinite(se) && se > 0.0) {
    const double t = estimate / se;
    row.t = t;
    row.p = std::erfc(std::abs(t) / std::sqrt(2.0));
  } else {
    row.degenerate = true;
  }
  return row;
}

namespace {

double se_of(const MatrixXd& v, Index i) {
  if (i >= v.rows() || i >= v.cols()) return std::nan("");
  const double d = v(i, i);
  return d >= 0.0 ? std::sqrt(d) : std::nan("");
}

}  // namespace

FitReport make_two_stage_report(const Dataset& data, const DetectionFit& det,
                                const OccupancyFit& occ, std::string model) {
  FitReport r;
  r.model = std::move(model);
  r.method = std::string("two-stage/") + to_string(occ.method);
  for (Index k = 0; k < occ.alpha_hat.size(); ++k)
    r.coefficients.push_back(make_row("Occupancy", data.occ_names()[static_cast<std::size_t>(k)],
                                      occ.alpha_hat(k), se_of(occ.var_sandwich, k)));
  for (Index k = 0; k < det.beta_hat.size(); ++k)
    r.coefficients.push_back(make_row("Detection", det.names[static_cast<std::size_t>(k)],
                                      det.beta_hat(k), se_of(det.v_beta, k)));
  r.diagnostics = {det.converged && occ.converged, det.iterations + occ.iterations,
                   occ.fallback_used, det.separation_suspected || occ.boundary_estimate};
  return r;
}

FitReport make_full_report(const Dataset& data, const FullFit& fit, std::string model) {
  FitReport r;
  r.model = std::move(model);
  r.method = "full";
  const Index p = fit.alpha_hat.size();
  for (Index k = 0; k < p; ++k)
    r.coefficients.push_back(make_row("Occupancy", data.occ_names()[static_cast<std::size_t>(k)],
                                      fit.alpha_hat(k), se_of(fit.var_joint, k)));
  for (Index k = 0; k < fit.beta_hat.size(); ++k)
    r.coefficients.push_back(make_row("Detection", data.det_names()[static_cast<std::size_t>(k)],
                                      fit.beta_hat(k), se_of(fit.var_joint, p + k)));
  r.diagnostics = {fit.converged, fit.iterations, false, fit.extreme_flag};
  return r;
}

nlohmann::json to_json(const FitReport& report) {
  auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  auto opt = [&](const std::optional<double>& x) { return x ? num(*x) : nlohmann::json(nullptr); };
  nlohmann::json coefs = nlohmann::json::array();
  for (const auto& c : report.coefficients)
    coefs.push_back({{"block", c.block},
                     {"name", c.name},
                     {"estimate", num(c.estimate)},
                     {"se", num(c.se)},
                     {"t", opt(c.t)},
                     {"p", opt(c.p)},
                     {"degenerate", c.degenerate}});
  nlohmann::json j{{"model", report.model},
                   {"method", report.method},
                   {"coefficients", coefs},
                   {"diagnostics",
                    {{"converged", report.diagnostics.converged},
                     {"iterations", report.diagnostics.iterations},
                     {"fallback_used", report.diagnostics.fallback_used},
                     {"extreme_flag", report.diagnostics.extreme_flag}}}};
  if (!report.aic.empty()) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& e : report.aic)
      a.push_back({{"model", e.label}, {"aic", num(e.aic)}, {"converged", e.converged}});
    j["aic"] = a;
  }
  return j;
}

void write_text(std::ostream& out, const FitReport& report) {
  auto fmt = [](const std::optional<double>& x, const char* spec) {
    if (!x || !std::isfinite(*x)) return std::string("NA");
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, *x);
    return std::string(buf);
  };
  std::size_t width = 4;
  for (const auto& c : report.coefficients) width = std::max(width, c.name.size());
  const int w = static_cast<int>(width);

  out << "Model:  " << report.model << "\nMethod: " << report.method << '\n';
  std::string block;
  char line[256];
  for (const auto& c : report.coefficients) {
    if (c.block != block) {
      block = c.block;
      out << '\n' << block << '\n';
      std::snprintf(line, sizeof line, "  %-*s %12s %10s %9s %10s\n", w, "", "Estimate", "se", "t",
                    "p");
      out << line;
    }
    std::snprintf(line, sizeof line, "  %-*s %12s %10s %9s %10s%s\n", w, c.name.c_str(),
                  fmt(c.estimate, "%.4f").c_str(), fmt(c.se, "%.4f").c_str(),
                  fmt(c.t, "%.3f").c_str(), fmt(c.p, "%.4g").c_str(),
                  c.degenerate ? "  (degenerate)" : "");
    out << line;
  }
  if (!report.aic.empty()) {
    out << "\nDetection models by AIC\n";
    for (const auto& e : report.aic) {
      std::snprintf(line, sizeof line, "  %12.3f  %s%s\n", e.aic, e.label.c_str(),
                    e.converged ? "" : "  (not converged)");
      out << line;
    }
  }
  const auto& d = report.diagnostics;
  out << "\nconverged: " << (d.converged ? "yes" : "no") << "  iterations: " << d.iterations
      << "  fallback: " << (d.fallback_used ? "yes" : "no")
      << "  extreme: " << (d.extreme_flag ? "yes" : "no") << '\n';
}

}  // namespace occupancy
