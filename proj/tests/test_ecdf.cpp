#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "latis/ecdf.hpp"

using latis::EmpiricalCdf;

TEST(Ecdf, CountsSamplesAtOrBelow) {
  const std::vector<double> s{0.1, 0.4, 0.7, 0.9};
  const auto f = EmpiricalCdf::build(s);
  EXPECT_DOUBLE_EQ(f.eval(0.4), 0.5);
  EXPECT_DOUBLE_EQ(f.eval(0.05), 0.0);
  EXPECT_DOUBLE_EQ(f.eval(0.9), 1.0);

  const std::vector<double> one{5};
  const auto g = EmpiricalCdf::build(one);
  EXPECT_DOUBLE_EQ(g.eval(4.9), 0.0);
  EXPECT_DOUBLE_EQ(g.eval(5), 1.0);

  const std::vector<double> unsorted{3, 1, 2};
  EXPECT_DOUBLE_EQ(EmpiricalCdf::build(unsorted).eval(2), 2.0 / 3.0);
}

TEST(Ecdf, QuantileIsPseudoInverse) {
  const std::vector<double> s{0.1, 0.4, 0.7, 0.9};
  const auto f = EmpiricalCdf::build(s);
  EXPECT_DOUBLE_EQ(f.quantile(0.5), 0.4);
  EXPECT_DOUBLE_EQ(f.quantile(1.0), 0.9);
  EXPECT_DOUBLE_EQ(f.quantile(0.51), 0.7);
  EXPECT_DOUBLE_EQ(f.quantile(0.0), 0.1);
}

TEST(Ecdf, MedianTakesLowerValue) {
  EXPECT_DOUBLE_EQ(EmpiricalCdf::build(std::vector<double>{1, 2, 3}).median(), 2);
  EXPECT_DOUBLE_EQ(EmpiricalCdf::build(std::vector<double>{1, 2, 3, 4}).median(), 2);
  EXPECT_DOUBLE_EQ(EmpiricalCdf::build(std::vector<double>{7}).median(), 7);
}

TEST(Ecdf, RejectsBadInput) {
  EXPECT_THROW(EmpiricalCdf::build(std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(EmpiricalCdf::build(std::vector<double>{1, std::nan("")}), std::invalid_argument);
  EXPECT_THROW(EmpiricalCdf::build(std::vector<double>{1, INFINITY}), std::invalid_argument);
  const auto f = EmpiricalCdf::build(std::vector<double>{1, 2});
  EXPECT_THROW(f.quantile(-0.1), std::invalid_argument);
  EXPECT_THROW(f.quantile(1.5), std::invalid_argument);
}

// Brute-force scan: smallest sample x with eval(x) >= q.
static double scan_quantile(const EmpiricalCdf& f, double q) {
  for (double x : f.sorted_samples())
    if (f.eval(x) >= q) return x;
  return f.max();
}

TEST(Ecdf, GaloisInequalitiesOnRandomData) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> small(0, 20);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(1 + trial * 3);
    for (auto& v : s) v = small(rng) * 0.5;  // many ties
    const auto f = EmpiricalCdf::build(s);
    for (double x : s) {
      EXPECT_LE(f.quantile(f.eval(x)), x);
    }
    for (int k = 1; k <= 200; ++k) {
      const double q = k / 200.0;
      EXPECT_GE(f.eval(f.quantile(q)), q - 1e-15);
      EXPECT_EQ(f.quantile(q), scan_quantile(f, q));
    }
    // non-decreasing and right-continuous at the samples
    double prev = 0.0;
    for (double x : f.sorted_samples()) {
      EXPECT_GE(f.eval(x), prev);
      prev = f.eval(x);
    }
    EXPECT_DOUBLE_EQ(f.eval(f.max()), 1.0);
  }
}

TEST(Ecdf, QuantileAtExactFractions) {
  // q = k/n must land on the k-th order statistic despite rounding in k/n.
  for (std::size_t n : {3, 7, 10, 49, 1000}) {
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<double>(i);
    const auto f = EmpiricalCdf::build(s);
    for (std::size_t k = 1; k <= n; ++k)
      EXPECT_EQ(f.quantile(static_cast<double>(k) / static_cast<double>(n)), static_cast<double>(k - 1)) << n << " " << k;
  }
}
