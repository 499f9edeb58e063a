#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <map>

#include "ysm/oracle.hpp"

using ysm::oracle::enumerate_exact;
using ysm::oracle::geometric_pmf;

namespace {

void expect_values(double p, double alpha, std::uint64_t n, const std::map<std::uint64_t, long double>& want) {
  const auto e = enumerate_exact(p, alpha, n);
  EXPECT_NEAR(static_cast<double>(e.total_probability), 1.0, 1e-15);
  for (const auto& [ell, v] : want) {
    const auto it = e.expected_nu.find(ell);
    const long double got = it == e.expected_nu.end() ? 0.0L : it->second;
    EXPECT_NEAR(static_cast<double>(got), static_cast<double>(v), 1e-14) << "p=" << p << " alpha=" << alpha << " n=" << n
                                                                       << " l=" << ell;
  }
}

}  // namespace

TEST(Oracle, LengthTwo) {
  for (double p : {0.1, 0.5, 0.8}) expect_values(p, 1.0, 2, {{1, 2.0L * p}, {2, 1.0L - p}});
}

TEST(Oracle, FrozenRationalValues) {
  expect_values(0.5, 1.0, 3, {{1, 1.25L}, {2, 0.5L}, {3, 0.25L}});
  expect_values(0.5, 0.0, 2, {{1, 1.0L}, {2, 0.5L}});
  expect_values(0.25, 1.0, 4, {{1, 85.0L / 128}, {2, 11.0L / 32}, {3, 41.0L / 128}, {4, 27.0L / 64}});
  expect_values(0.75, 2.0, 5,
                {{1, 576087.0L / 179200}, {2, 108999.0L / 179200}, {3, 3663.0L / 25600}, {4, 5373.0L / 179200},
                 {5, 1.0L / 256}});
  expect_values(0.5, 0.0, 6,
                {{1, 277.0L / 128}, {2, 85.0L / 128}, {3, 219.0L / 640}, {4, 127.0L / 640}, {5, 1.0L / 10},
                 {6, 1.0L / 32}});
}

TEST(Oracle, MassIsConserved) {
  for (std::uint64_t n = 2; n <= 10; ++n) {
    const auto e = enumerate_exact(0.3, 1.5, n);
    long double mass = 0;
    for (const auto& [ell, v] : e.expected_nu) mass += static_cast<long double>(ell) * v;
    EXPECT_NEAR(static_cast<double>(mass), static_cast<double>(n), 1e-12);
  }
}

TEST(Oracle, NearCertainInnovation) {
  const auto e = enumerate_exact(1.0 - 1e-12, 1.0, 8);
  EXPECT_NEAR(static_cast<double>(e.expected_nu.at(1)), 8.0, 1e-9);
}

TEST(Oracle, Guards) {
  EXPECT_THROW(enumerate_exact(0.5, 1.0, 1), std::out_of_range);
  EXPECT_THROW(enumerate_exact(0.5, 1.0, 13), std::out_of_range);
  EXPECT_THROW(enumerate_exact(0.0, 1.0, 4), std::invalid_argument);
  EXPECT_THROW(enumerate_exact(0.5, -1.0, 4), std::invalid_argument);
}

TEST(Geometric, Values) {
  EXPECT_NEAR(geometric_pmf(std::log(2.0), 2), 0.25, 1e-15);
  EXPECT_NEAR(geometric_pmf(1e-12, 1), 1.0, 1e-11);
  EXPECT_EQ(geometric_pmf(std::numeric_limits<double>::infinity(), 1), 0.0);
  double s = 0.0;
  for (std::uint64_t k = 1; k < 2000; ++k) s += geometric_pmf(1.0, k);
  EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_THROW(geometric_pmf(0.0, 1), std::invalid_argument);
}
