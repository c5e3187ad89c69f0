#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace latis {

/// Row-major table of outcomes: one row per draw, one column per node.
struct Dataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::uint64_t seed = 0;

  Dataset() = default;
  Dataset(std::size_t r, std::size_t c, std::uint64_t s = 0)
      : rows(r), cols(c), values(r * c, 0.0), seed(s) {}

  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  const double* row(std::size_t r) const { return values.data() + r * cols; }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows);
    for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, c);
    return out;
  }
};

/// Writes one row per outcome with a header x0,x1,...
inline void write_dataset_csv(const Dataset& d, std::ostream& os) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t c = 0; c < d.cols; ++c) os << (c ? "," : "") << 'x' << c;
  os << '\n';
  for (std::size_t r = 0; r < d.rows; ++r) {
    for (std::size_t c = 0; c < d.cols; ++c) os << (c ? "," : "") << d.at(r, c);
    os << '\n';
  }
}

/// Reads a dataset CSV; the first line is a header if it does not parse as numbers.
inline Dataset read_dataset_csv(std::istream& is) {
  Dataset d;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size() && cell.find_first_not_of(" \t", used) != std::string::npos)
          numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (first && !numeric) {
      first = false;
      continue;
    }
    first = false;
    if (!numeric) throw std::runtime_error("malformed dataset row: " + line);
    if (d.cols == 0) d.cols = row.size();
    if (row.size() != d.cols) throw std::runtime_error("ragged dataset row: " + line);
    d.values.insert(d.values.end(), row.begin(), row.end());
    ++d.rows;
  }
  if (d.rows == 0) throw std::runtime_error("empty dataset");
  return d;
}

}  // namespace latis
