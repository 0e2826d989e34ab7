#include "occupancy/dataset_io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

namespace occupancy {

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error(ErrorCode::MissingColumn, "no column named '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return fields;
}

bool parse_number(const std::string& text, double& out) {
  if (text.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(text.c_str(), &end);
  return errno == 0 && end == text.c_str() + text.size() && std::isfinite(out);
}

std::string row_label(const CsvTable& table, const CsvSchema& schema, std::size_t r) {
  std::string label = "row " + std::to_string(r + 1);
  if (!schema.site_label_col.empty())
    label += " (site " + table.rows[r][table.column(schema.site_label_col)] + ")";
  return label;
}

VectorXd numeric_column(const CsvTable& table, const CsvSchema& schema, const std::string& name) {
  const std::size_t c = table.column(name);
  VectorXd v(static_cast<Index>(table.rows.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    double x = 0.0;
    if (!parse_number(table.rows[r][c], x))
      throw Error(ErrorCode::InvalidData, row_label(table, schema, r) + ", column " + name +
                                              ": '" + table.rows[r][c] + "' is not a number");
    v(static_cast<Index>(r)) = x;
  }
  if (schema.standardize) {
    const double mean = v.mean();
    const double sd = std::sqrt((v.array() - mean).square().sum() /
                                std::max<double>(1.0, static_cast<double>(v.size() - 1)));
    if (!(sd > 0.0))
      throw Error(ErrorCode::InvalidData, "column " + name + " is constant and cannot be standardised");
    v = (v.array() - mean) / sd;
  }
  return v;
}

}  // namespace

CsvTable parse_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto fields = split_csv_line(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size())
      throw Error(ErrorCode::InvalidData, "line " + std::to_string(line_no) + " has " +
                                              std::to_string(fields.size()) + " fields, header has " +
                                              std::to_string(table.header.size()));
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) throw Error(ErrorCode::EmptyFile, "no header row");
  if (table.rows.empty()) throw Error(ErrorCode::EmptyFile, "no data rows");
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  return parse_csv(in);
}

CsvSchema make_schema(const std::vector<std::string>& detect_cols, const OccupancyModelSpec& occ,
                      const DetectionModelSpec& det, bool standardize) {
  CsvSchema schema;
  schema.detect_cols = detect_cols;
  schema.occ_site_cols = occ.site_covs;
  schema.det_site_cols = det.site_covs;
  schema.survey_groups = det.survey;
  schema.visit_intercepts = det.visit_intercepts;
  schema.standardize = standardize;
  return schema;
}

Dataset dataset_from_table(const CsvTable& table, const CsvSchema& schema) {
  const Index S = static_cast<Index>(table.rows.size());
  const Index tau = static_cast<Index>(schema.detect_cols.size());
  if (tau < 2) throw Error(ErrorCode::InvalidData, "at least two detection columns are required");

  MatrixXd y(S, tau);
  for (Index j = 0; j < tau; ++j) {
    const std::string& name = schema.detect_cols[static_cast<std::size_t>(j)];
    const std::size_t c = table.column(name);
    for (Index s = 0; s < S; ++s) {
      const std::string& cell = table.rows[static_cast<std::size_t>(s)][c];
      double v = -1.0;
      if (!parse_number(cell, v) || (v != 0.0 && v != 1.0))
        throw Error(ErrorCode::NonBinaryDetection,
                    row_label(table, schema, static_cast<std::size_t>(s)) + ", column " + name +
                        ": '" + cell + "' is not 0 or 1");
      y(s, j) = v;
    }
  }

  MatrixXd X(S, static_cast<Index>(schema.occ_site_cols.size()) + 1);
  X.col(0).setOnes();
  std::vector<std::string> occ_names{"(Intercept)"};
  for (std::size_t k = 0; k < schema.occ_site_cols.size(); ++k) {
    X.col(static_cast<Index>(k) + 1) = numeric_column(table, schema, schema.occ_site_cols[k]);
    occ_names.push_back(schema.occ_site_cols[k]);
  }

  for (const auto& group : schema.survey_groups)
    if (static_cast<Index>(group.columns.size()) != tau)
      throw Error(ErrorCode::RaggedSurveyGroup,
                  "survey covariate '" + group.name + "' has " +
                      std::to_string(group.columns.size()) + " columns for " +
                      std::to_string(tau) + " visits");

  const Index n_int = schema.visit_intercepts ? tau : 1;
  const Index q = n_int + static_cast<Index>(schema.det_site_cols.size()) +
                  static_cast<Index>(schema.survey_groups.size());
  DetectionDesign det;
  det.visits.assign(static_cast<std::size_t>(tau), MatrixXd::Zero(S, q));
  if (schema.visit_intercepts) {
    for (Index j = 0; j < tau; ++j) {
      det.visits[static_cast<std::size_t>(j)].col(j).setOnes();
      det.names.push_back("(Intercept):" + std::to_string(j + 1));
    }
  } else {
    for (auto& block : det.visits) block.col(0).setOnes();
    det.names.push_back("(Intercept)");
  }
  Index col = n_int;
  for (const auto& name : schema.det_site_cols) {
    const VectorXd v = numeric_column(table, schema, name);
    for (auto& block : det.visits) block.col(col) = v;
    det.names.push_back(name);
    ++col;
  }
  for (const auto& group : schema.survey_groups) {
    for (Index j = 0; j < tau; ++j)
      det.visits[static_cast<std::size_t>(j)].col(col) =
          numeric_column(table, schema, group.columns[static_cast<std::size_t>(j)]);
    det.names.push_back(group.name);
    ++col;
  }
  const bool survey = !schema.survey_groups.empty();
  det.model = schema.visit_intercepts ? (survey ? DetectionModel::Both
                                                : DetectionModel::TimeVaryingIntercepts)
                                      : (survey ? DetectionModel::TimeVaryingCovariates
                                                : DetectionModel::TimeIndependent);

  std::vector<std::string> labels;
  if (!schema.site_label_col.empty()) {
    const std::size_t c = table.column(schema.site_label_col);
    for (const auto& row : table.rows) labels.push_back(row[c]);
  }
  return Dataset(std::move(y), std::move(X), std::move(det), std::move(occ_names),
                 std::move(labels));
}

Dataset load_dataset_csv(const std::string& path, const CsvSchema& schema) {
  return dataset_from_table(read_csv(path), schema);
}

CsvSchema write_dataset_csv(std::ostream& out, const Dataset& data) {
  const Index S = data.n_sites();
  const Index tau = data.n_visits();
  for (Index j = 0; j < tau; ++j)
    if (!(data.det_block(j).col(0).array() == 1.0).all())
      throw Error(ErrorCode::InvalidModel, "writer needs a common detection intercept");

  CsvSchema schema;
  std::vector<std::string> header{"site"};
  std::vector<VectorXd> columns;
  std::set<std::string> used{"site"};
  auto add = [&](std::string name, const VectorXd& v) {
    while (used.count(name)) name = "v_" + name;
    used.insert(name);
    header.push_back(name);
    columns.push_back(v);
    return name;
  };

  for (Index j = 0; j < tau; ++j)
    schema.detect_cols.push_back(add("y" + std::to_string(j + 1), data.detections().col(j)));
  for (Index k = 1; k < data.n_occ_coef(); ++k)
    schema.occ_site_cols.push_back(
        add(data.occ_names()[static_cast<std::size_t>(k)], data.occ_design().col(k)));
  for (Index k = 1; k < data.n_det_coef(); ++k) {
    const std::string& name = data.det_names()[static_cast<std::size_t>(k)];
    bool constant = true;
    for (Index j = 1; j < tau; ++j)
      constant = constant && data.det_block(j).col(k) == data.det_block(0).col(k);
    if (constant) {
      schema.det_site_cols.push_back(add(name, data.det_block(0).col(k)));
      continue;
    }
    SurveyGroup group{name, {}};
    for (Index j = 0; j < tau; ++j)
      group.columns.push_back(add(name + std::to_string(j + 1), data.det_block(j).col(k)));
    schema.survey_groups.push_back(std::move(group));
  }

  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n' << std::setprecision(17);
  for (Index s = 0; s < S; ++s) {
    out << (data.site_labels().empty() ? std::to_string(s + 1)
                                       : data.site_labels()[static_cast<std::size_t>(s)]);
    for (const auto& col : columns) out << ',' << col(s);
    out << '\n';
  }
  schema.site_label_col = "site";
  return schema;
}

}  // namespace occupancy
