#pragma once

#include <stdexcept>
#include <string>

namespace biasbench {

// File or parse problem: missing file, malformed CSV, bad row.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// The data cannot satisfy a requested operation: a class too small for the
// requested split or selection, an empty complement, a degenerate cut.
// Distinct from std::invalid_argument, which is reserved for bad parameters.
class InfeasibleDataError : public std::runtime_error {
 public:
  explicit InfeasibleDataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace biasbench
