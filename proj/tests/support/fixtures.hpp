#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "biasbench/dataset.hpp"

namespace testsupport {

// Builds a dataset from row-major feature values and integer class labels.
inline biasbench::Dataset make_dataset(const std::vector<std::vector<double>>& rows,
                                       const std::vector<int>& labels, int n_classes) {
  biasbench::Dataset d;
  const int n = static_cast<int>(rows.size());
  const int f = n > 0 ? static_cast<int>(rows[0].size()) : 0;
  d.features.resize(n, f);
  d.labels.setZero(n, n_classes);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < f; ++j) d.features(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    d.labels(i, labels[static_cast<std::size_t>(i)]) = 1;
  }
  for (int j = 0; j < f; ++j) {
    d.feature_names.push_back("f" + std::to_string(j));
    d.column_kinds.push_back(biasbench::ColumnKind::continuous);
  }
  for (int c = 0; c < n_classes; ++c) d.class_names.push_back("c" + std::to_string(c));
  d.validate();
  return d;
}

class TempFile {
 public:
  explicit TempFile(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / name) {}
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  void write(const std::string& text) {
    std::ofstream out(path_);
    out << text;
  }
  std::string path() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace testsupport
