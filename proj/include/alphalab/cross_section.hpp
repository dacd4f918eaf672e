#ifndef ALPHALAB_CROSS_SECTION_HPP
#define ALPHALAB_CROSS_SECTION_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "alphalab/date.hpp"

namespace alphalab {

/// One date's complete-case block: every entry is finite, rows of
/// `signal_matrix`, `companies` and `returns` are aligned.
struct CrossSection {
  Date date;
  std::vector<std::string> companies;
  std::vector<std::string> columns;
  Eigen::MatrixXd signal_matrix;  // companies x columns
  Eigen::VectorXd returns;

  std::size_t size() const noexcept { return companies.size(); }

  std::optional<std::size_t> column_index(const std::string& label) const {
    for (std::size_t j = 0; j < columns.size(); ++j)
      if (columns[j] == label) return j;
    return std::nullopt;
  }
};

}  // namespace alphalab

#endif  // ALPHALAB_CROSS_SECTION_HPP
