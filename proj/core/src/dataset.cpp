#include "biasbench/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "biasbench/errors.hpp"
#include "biasbench/rng.hpp"

namespace biasbench {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

// Splits one CSV line. Double quotes delimit fields that contain commas;
// a doubled quote inside a quoted field is an escaped quote.
std::vector<std::string> split_csv_line(const std::string& line, int line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"' && trim(cur).empty()) {
      quoted = true;
      cur.clear();
    } else if (ch == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (quoted) {
    throw DataError("unterminated quote on line " + std::to_string(line_no));
  }
  fields.push_back(trim(cur));
  return fields;
}

double parse_number(const std::string& field, const std::string& column, int line_no) {
  if (field.empty()) {
    throw DataError("missing value in column '" + column + "' on line " + std::to_string(line_no));
  }
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw DataError("cannot parse '" + field + "' in column '" + column + "' on line " +
                    std::to_string(line_no));
  }
  return value;
}

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

}  // namespace

int Dataset::label_of(int row) const {
  for (int c = 0; c < n_classes(); ++c) {
    if (labels(row, c) == 1) return c;
  }
  throw std::invalid_argument("row " + std::to_string(row) + " has no label set");
}

std::vector<int> Dataset::class_counts() const {
  std::vector<int> counts(static_cast<std::size_t>(n_classes()), 0);
  for (int i = 0; i < n_samples(); ++i) counts[static_cast<std::size_t>(label_of(i))]++;
  return counts;
}

std::vector<std::vector<int>> Dataset::rows_by_class() const {
  std::vector<std::vector<int>> rows(static_cast<std::size_t>(n_classes()));
  for (int i = 0; i < n_samples(); ++i) rows[static_cast<std::size_t>(label_of(i))].push_back(i);
  return rows;
}

Dataset Dataset::subset(const std::vector<int>& rows) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.resize(static_cast<Eigen::Index>(rows.size()), labels.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int r = rows[i];
    if (r < 0 || r >= n_samples()) {
      throw std::invalid_argument("subset row " + std::to_string(r) + " out of range");
    }
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(r);
    out.labels.row(static_cast<Eigen::Index>(i)) = labels.row(r);
  }
  out.feature_names = feature_names;
  out.class_names = class_names;
  out.column_kinds = column_kinds;
  return out;
}

void Dataset::validate() const {
  if (n_samples() < 1) throw std::invalid_argument("dataset has no rows");
  if (labels.rows() != features.rows()) {
    throw std::invalid_argument("label rows do not match feature rows");
  }
  if (n_classes() < 2) throw std::invalid_argument("dataset needs at least two classes");
  if (static_cast<int>(feature_names.size()) != n_features()) {
    throw std::invalid_argument("feature name count does not match feature columns");
  }
  if (static_cast<int>(column_kinds.size()) != n_features()) {
    throw std::invalid_argument("column kind count does not match feature columns");
  }
  if (static_cast<int>(class_names.size()) != n_classes()) {
    throw std::invalid_argument("class name count does not match label columns");
  }
  if (!features.allFinite()) throw std::invalid_argument("features contain non-finite values");
  for (int i = 0; i < n_samples(); ++i) {
    int sum = 0;
    for (int c = 0; c < n_classes(); ++c) {
      const int v = labels(i, c);
      if (v != 0 && v != 1) throw std::invalid_argument("labels must be 0/1");
      sum += v;
    }
    if (sum != 1) {
      throw std::invalid_argument("row " + std::to_string(i) + " is not one-hot");
    }
  }
}

void SplitPlan::validate() const {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("test_fraction must be in (0,1)");
  }
  if (!(labeled_fraction > 0.0 && labeled_fraction < 1.0)) {
    throw std::invalid_argument("labeled_fraction must be in (0,1)");
  }
  if (runs < 1) throw std::invalid_argument("runs must be positive");
}

Dataset load_csv(const std::string& path, const std::string& label_column,
                 const std::vector<std::string>& categorical_columns) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lines.empty() && !line.empty() && line.front() == '#') continue;
    lines.push_back(line);
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.size() < 2) throw DataError("'" + path + "' has no data rows");

  const std::vector<std::string> header = split_csv_line(lines[0], 1);
  {
    std::set<std::string> seen;
    for (const auto& name : header) {
      if (!seen.insert(name).second) throw DataError("duplicate column '" + name + "'");
    }
  }

  const auto column_index = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("column '" + name + "' not in header");
    return static_cast<int>(it - header.begin());
  };

  const int label_idx = column_index(label_column);
  std::set<int> categorical;
  for (const auto& name : categorical_columns) {
    const int idx = column_index(name);
    if (idx == label_idx) {
      throw std::invalid_argument("label column '" + name + "' listed as categorical");
    }
    categorical.insert(idx);
  }

  const int n_rows = static_cast<int>(lines.size()) - 1;
  const int n_cols = static_cast<int>(header.size());
  std::vector<std::vector<std::string>> cells(static_cast<std::size_t>(n_rows));
  for (int r = 0; r < n_rows; ++r) {
    auto fields = split_csv_line(lines[static_cast<std::size_t>(r) + 1], r + 2);
    if (static_cast<int>(fields.size()) != n_cols) {
      throw DataError("line " + std::to_string(r + 2) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(n_cols));
    }
    cells[static_cast<std::size_t>(r)] = std::move(fields);
  }

  // Distinct values of the label and of each categorical column, sorted so
  // that class and indicator order does not depend on row order.
  std::vector<std::string> class_names;
  std::map<int, std::vector<std::string>> categories;
  {
    std::set<std::string> label_values;
    std::map<int, std::set<std::string>> cat_values;
    for (int r = 0; r < n_rows; ++r) {
      const auto& row = cells[static_cast<std::size_t>(r)];
      const std::string& lv = row[static_cast<std::size_t>(label_idx)];
      if (lv.empty()) throw DataError("missing label on line " + std::to_string(r + 2));
      label_values.insert(lv);
      for (int c : categorical) {
        const std::string& cv = row[static_cast<std::size_t>(c)];
        if (cv.empty()) {
          throw DataError("missing value in column '" + header[static_cast<std::size_t>(c)] +
                          "' on line " + std::to_string(r + 2));
        }
        cat_values[c].insert(cv);
      }
    }
    class_names.assign(label_values.begin(), label_values.end());
    for (auto& [col, values] : cat_values) categories[col] = {values.begin(), values.end()};
  }
  if (class_names.size() < 2) throw DataError("'" + path + "' has fewer than two classes");

  Dataset out;
  out.class_names = class_names;
  for (int c = 0; c < n_cols; ++c) {
    if (c == label_idx) continue;
    if (categorical.count(c)) {
      for (const auto& value : categories[c]) {
        out.feature_names.push_back(header[static_cast<std::size_t>(c)] + "=" + value);
        out.column_kinds.push_back(ColumnKind::indicator);
      }
    } else {
      out.feature_names.push_back(header[static_cast<std::size_t>(c)]);
      out.column_kinds.push_back(ColumnKind::continuous);
    }
  }

  const int n_features = static_cast<int>(out.feature_names.size());
  out.features.setZero(n_rows, n_features);
  out.labels.setZero(n_rows, static_cast<int>(class_names.size()));
  for (int r = 0; r < n_rows; ++r) {
    const auto& row = cells[static_cast<std::size_t>(r)];
    int f = 0;
    for (int c = 0; c < n_cols; ++c) {
      if (c == label_idx) continue;
      const std::string& field = row[static_cast<std::size_t>(c)];
      if (categorical.count(c)) {
        const auto& values = categories[c];
        const auto it = std::find(values.begin(), values.end(), field);
        out.features(r, f + static_cast<int>(it - values.begin())) = 1.0;
        f += static_cast<int>(values.size());
      } else {
        out.features(r, f) = parse_number(field, header[static_cast<std::size_t>(c)], r + 2);
        ++f;
      }
    }
    const std::string& lv = row[static_cast<std::size_t>(label_idx)];
    const auto it = std::lower_bound(class_names.begin(), class_names.end(), lv);
    out.labels(r, static_cast<int>(it - class_names.begin())) = 1;
  }

  out.validate();
  return out;
}

void write_csv(const Dataset& data, std::ostream& out, const std::string& label_column) {
  for (const auto& name : data.feature_names) out << name << ',';
  out << label_column << '\n';
  char buf[64];
  for (int i = 0; i < data.n_samples(); ++i) {
    for (int f = 0; f < data.n_features(); ++f) {
      std::snprintf(buf, sizeof buf, "%.17g", data.features(i, f));
      out << buf << ',';
    }
    out << data.class_names[static_cast<std::size_t>(data.label_of(i))] << '\n';
  }
}

void write_csv(const Dataset& data, const std::string& path, const std::string& label_column) {
  std::ofstream outf(path);
  if (!outf) throw DataError("cannot write '" + path + "'");
  write_csv(data, outf, label_column);
  if (!outf) throw DataError("failed writing '" + path + "'");
}

StandardizeResult standardize(const Dataset& train, const std::vector<Dataset>& rest) {
  train.validate();
  const int f = train.n_features();
  const double n = static_cast<double>(train.n_samples());

  Standardization stats;
  stats.mean = Eigen::VectorXd::Zero(f);
  stats.scale = Eigen::VectorXd::Ones(f);
  for (int j = 0; j < f; ++j) {
    if (train.column_kinds[static_cast<std::size_t>(j)] == ColumnKind::indicator) continue;
    const double mean = train.features.col(j).mean();
    const double var = (train.features.col(j).array() - mean).square().sum() / n;
    stats.mean(j) = mean;
    if (var > 0.0) stats.scale(j) = std::sqrt(var);
  }

  const auto apply = [&](const Dataset& d) {
    if (d.n_features() != f) {
      throw std::invalid_argument("standardize: feature count mismatch");
    }
    Dataset out = d;
    out.features = (d.features.rowwise() - stats.mean.transpose()).array().rowwise() /
                   stats.scale.transpose().array();
    return out;
  };

  StandardizeResult result;
  result.train = apply(train);
  result.rest.reserve(rest.size());
  for (const auto& d : rest) result.rest.push_back(apply(d));
  result.stats = std::move(stats);
  return result;
}

SplitIndices stratified_split_indices(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("split fraction must be in (0,1)");
  }
  Rng rng(seed);
  SplitIndices out;
  const auto by_class = data.rows_by_class();
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto rows = by_class[c];
    const int n_c = static_cast<int>(rows.size());
    if (n_c == 0) continue;  // a class absent from this subset splits trivially
    if (n_c < 2) {
      throw InfeasibleDataError("class '" + data.class_names[c] + "' has " +
                                std::to_string(n_c) + " rows, cannot split");
    }
    const int want = std::clamp(round_half_up(fraction * n_c), 1, n_c - 1);
    rng.shuffle(rows);
    out.part.insert(out.part.end(), rows.begin(), rows.begin() + want);
    out.rest.insert(out.rest.end(), rows.begin() + want, rows.end());
  }
  std::sort(out.part.begin(), out.part.end());
  std::sort(out.rest.begin(), out.rest.end());
  return out;
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& data, double fraction,
                                             std::uint64_t seed) {
  const SplitIndices idx = stratified_split_indices(data, fraction, seed);
  return {data.subset(idx.part), data.subset(idx.rest)};
}

std::vector<RunSplit> make_runs(const Dataset& train, const SplitPlan& plan) {
  plan.validate();
  std::vector<RunSplit> runs;
  runs.reserve(static_cast<std::size_t>(plan.runs));
  for (int i = 0; i < plan.runs; ++i) {
    const std::uint64_t run_seed =
        derive_seed(plan.seed, seed_tag("run"), static_cast<std::uint64_t>(i));
    SplitIndices idx = stratified_split_indices(train, plan.labeled_fraction, run_seed);
    runs.push_back({std::move(idx.part), std::move(idx.rest)});
  }
  return runs;
}

}  // namespace biasbench
