#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace pnf {

/// Dense row-major matrix; rows are nodes or samples throughout the library.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// One categorical column expanded to indicator columns
/// [first_column, first_column + categories.size()).
struct OneHotGroup {
  std::string name;
  std::vector<std::string> categories;
  std::size_t first_column = 0;
};

/// A numeric feature matrix with per-entry missing flags and named columns.
struct FeatureTable {
  std::vector<std::string> names;
  Matrix values;
  std::vector<std::uint8_t> missing;  // row-major, same shape as values
  std::vector<OneHotGroup> groups;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }

  bool is_missing(std::size_t r, std::size_t c) const {
    return !missing.empty() && missing[r * cols() + c] != 0;
  }
  void set_missing(std::size_t r, std::size_t c, bool flag) {
    if (missing.empty()) missing.assign(rows() * cols(), 0);
    missing[r * cols() + c] = flag ? 1 : 0;
  }
  bool any_missing() const {
    for (auto m : missing)
      if (m) return true;
    return false;
  }
  /// Column index of `name`, or cols() when absent.
  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    return cols();
  }
};

}  // namespace pnf
