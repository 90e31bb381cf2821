#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace biasbench {

enum class ColumnKind { continuous, indicator };

// Feature matrix plus one-hot labels. Rows are samples. Treated as immutable:
// every operation takes a const dataset and returns a new one.
struct Dataset {
  Eigen::MatrixXd features;               // n x f
  Eigen::MatrixXi labels;                 // n x c, exact one-hot rows
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;   // sorted, defines class indices
  std::vector<ColumnKind> column_kinds;   // per feature column

  int n_samples() const { return static_cast<int>(features.rows()); }
  int n_features() const { return static_cast<int>(features.cols()); }
  int n_classes() const { return static_cast<int>(labels.cols()); }

  int label_of(int row) const;
  std::vector<int> class_counts() const;
  std::vector<std::vector<int>> rows_by_class() const;

  // New dataset holding the given rows, in the given order.
  Dataset subset(const std::vector<int>& rows) const;

  // Throws std::invalid_argument if any structural invariant is broken.
  void validate() const;
};

struct SplitPlan {
  double test_fraction = 0.2;
  double labeled_fraction = 0.3;
  int runs = 30;
  std::uint64_t seed = 0;

  void validate() const;
};

// Loads a headered CSV. label_column picks the class column; categorical
// columns are expanded into 0/1 indicator columns named "column=value" with
// values in sorted order. Classes are the sorted distinct label values.
// '#' comment lines before the header are skipped. Missing fields,
// non-numeric or non-finite values in continuous columns, fewer than two
// classes, and ragged rows raise DataError.
Dataset load_csv(const std::string& path, const std::string& label_column,
                 const std::vector<std::string>& categorical_columns = {});

// Writes features plus a final label column (class names as values).
void write_csv(const Dataset& data, std::ostream& out, const std::string& label_column = "label");
void write_csv(const Dataset& data, const std::string& path,
               const std::string& label_column = "label");

struct Standardization {
  Eigen::VectorXd mean;   // 0 for indicator columns
  Eigen::VectorXd scale;  // 1 for indicator and zero-variance columns
};

struct StandardizeResult {
  Dataset train;
  std::vector<Dataset> rest;
  Standardization stats;
};

// Centers and scales continuous columns by the training set's population
// mean and standard deviation; the same transform is applied to every
// dataset in `rest`. Zero-variance columns come out all zero; indicator
// columns pass through untouched.
StandardizeResult standardize(const Dataset& train, const std::vector<Dataset>& rest);

struct SplitIndices {
  std::vector<int> part;  // receives the requested fraction, per class
  std::vector<int> rest;
  // Both ascending; together they partition 0..n-1.
};

// Per class, moves round(fraction * count) rows into `part`, clamped so both
// sides keep at least one row. Classes with fewer than two rows make the
// split infeasible.
SplitIndices stratified_split_indices(const Dataset& data, double fraction, std::uint64_t seed);
std::pair<Dataset, Dataset> stratified_split(const Dataset& data, double fraction, std::uint64_t seed);

struct RunSplit {
  std::vector<int> labeled;
  std::vector<int> unlabeled;
};

// One labeled/unlabeled split per run, each drawn with a seed derived from
// plan.seed and the run index, so any run can be reproduced in isolation.
std::vector<RunSplit> make_runs(const Dataset& train, const SplitPlan& plan);

}  // namespace biasbench
