#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace latis {

/// Right-continuous step cdf over a fixed sample, F(x) = #{s <= x} / n.
///
/// The raw samples are kept sorted, so evaluation and the pseudo-inverse
/// are exact binary searches. Duplicate samples accumulate mass.
class EmpiricalCdf {
public:
  static EmpiricalCdf build(std::span<const double> samples) {
    if (samples.empty()) throw std::invalid_argument("no samples");
    std::vector<double> sorted(samples.begin(), samples.end());
    for (double v : sorted)
      if (!std::isfinite(v)) throw std::invalid_argument("invalid sample");
    std::sort(sorted.begin(), sorted.end());
    return EmpiricalCdf(std::move(sorted));
  }

  double eval(double x) const {
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return fraction(static_cast<std::size_t>(it - sorted_.begin()));
  }
  double operator()(double x) const { return eval(x); }

  /// inf{x in samples | eval(x) >= q}; q = 0 gives the minimum sample.
  double quantile(double q) const {
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("invalid probability");
    return sorted_[quantile_index(q)];
  }

  double median() const { return quantile(0.5); }

  /// Index into sorted_samples() of quantile(q).
  std::size_t quantile_index(double q) const {
    const std::size_t n = sorted_.size();
    // Smallest count c >= 1 with c/n >= q, compared the same way eval divides.
    double guess = std::ceil(q * static_cast<double>(n));
    std::size_t c = guess < 1.0 ? 1 : std::min(n, static_cast<std::size_t>(guess));
    while (c > 1 && fraction(c - 1) >= q) --c;
    while (c < n && fraction(c) < q) ++c;
    // Step back over ties so the infimum lands on the first copy.
    std::size_t idx = c - 1;
    while (idx > 0 && sorted_[idx - 1] == sorted_[idx]) --idx;
    return idx;
  }

  std::size_t size() const { return sorted_.size(); }
  double min() const { return sorted_.front(); }
  double max() const { return sorted_.back(); }
  std::span<const double> sorted_samples() const { return sorted_; }

  /// Number of samples <= x.
  std::size_t count_le(double x) const {
    return static_cast<std::size_t>(
        std::upper_bound(sorted_.begin(), sorted_.end(), x) - sorted_.begin());
  }

private:
  explicit EmpiricalCdf(std::vector<double> sorted) : sorted_(std::move(sorted)) {}

  double fraction(std::size_t count) const {
    return static_cast<double>(count) / static_cast<double>(sorted_.size());
  }

  std::vector<double> sorted_;
};

using CdfPtr = std::shared_ptr<const EmpiricalCdf>;

inline CdfPtr make_cdf(std::span<const double> samples) {
  return std::make_shared<const EmpiricalCdf>(EmpiricalCdf::build(samples));
}

}  // namespace latis
