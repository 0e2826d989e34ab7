#pragma once

// Wide CSV ingestion: one row per site, tau detection columns, site covariates
// as single columns and survey covariates as groups of tau columns.

#include <iosfwd>
#include <string>
#include <vector>

#include "occupancy/core_model.hpp"
#include "occupancy/model_spec.hpp"

namespace occupancy {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index; throws MissingColumn.
  std::size_t column(const std::string& name) const;
};

/// Throws IoError when the file cannot be opened and EmptyFile when it has no
/// header or no data rows.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(std::istream& in);

struct CsvSchema {
  std::vector<std::string> detect_cols;
  std::vector<std::string> occ_site_cols;
  std::vector<std::string> det_site_cols;
  std::vector<SurveyGroup> survey_groups;
  bool visit_intercepts = false;
  /// (x - mean) / sd on every covariate column used.
  bool standardize = false;
  /// Optional column used for site labels.
  std::string site_label_col;
};

CsvSchema make_schema(const std::vector<std::string>& detect_cols,
                      const OccupancyModelSpec& occ, const DetectionModelSpec& det,
                      bool standardize);

Dataset dataset_from_table(const CsvTable& table, const CsvSchema& schema);
Dataset load_dataset_csv(const std::string& path, const CsvSchema& schema);

/// Writes a dataset whose detection design begins with a common intercept;
/// returns the schema that reloads it.
CsvSchema write_dataset_csv(std::ostream& out, const Dataset& data);

}  // namespace occupancy
