#pragma once

// Small statistics toolkit used by the estimators and the acceptance checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace ysm::stats {

/// Welford accumulator; merge() follows Chan et al. so chunked sums can be
/// combined in a fixed order.
class RunningStats {
 public:
  void add(double x) noexcept {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }

  void merge(const RunningStats& o) noexcept {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double n = static_cast<double>(n_ + o.n_);
    const double d = o.mean_ - mean_;
    mean_ += d * static_cast<double>(o.n_) / n;
    m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
    n_ += o.n_;
  }

  std::uint64_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double stddev() const noexcept { return std::sqrt(variance()); }
  double stderr_mean() const noexcept { return n_ > 0 ? stddev() / std::sqrt(static_cast<double>(n_)) : 0.0; }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Exact binomial interval for k successes in n trials.
inline Interval clopper_pearson(std::uint64_t k, std::uint64_t n, double confidence = 0.95) {
  if (n == 0) return {0.0, 1.0};
  if (k > n) throw std::invalid_argument("clopper_pearson: k > n");
  const double a = 1.0 - confidence;
  const double kd = static_cast<double>(k), nd = static_cast<double>(n);
  Interval out;
  out.lo = k == 0 ? 0.0 : boost::math::ibeta_inv(kd, nd - kd + 1.0, a / 2.0);
  out.hi = k == n ? 1.0 : boost::math::ibeta_inv(kd + 1.0, nd - kd, 1.0 - a / 2.0);
  return out;
}

/// Upper tail of the Kolmogorov distribution, P(K > lambda).
inline double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t dof = 0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// (Stephens' small-sample correction on the effective size).
inline TestResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  const double sq = std::sqrt(ne);
  return {d, kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d), 0};
}

/// Chi-square test of homogeneity for two samples of nonnegative integers.
/// Adjacent values are pooled left to right until each bin has expected
/// count >= min_expected in both samples; the remainder joins the last bin.
inline TestResult chi2_two_sample(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                                  double min_expected = 5.0) {
  if (a.empty() || b.empty()) throw std::invalid_argument("chi2_two_sample: empty sample");
  std::map<std::uint64_t, std::pair<double, double>> table;
  for (const auto x : a) table[x].first += 1.0;
  for (const auto x : b) table[x].second += 1.0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size()), n = na + nb;

  std::vector<std::pair<double, double>> bins;
  std::pair<double, double> cur{0.0, 0.0};
  for (const auto& [value, c] : table) {
    cur.first += c.first;
    cur.second += c.second;
    const double total = cur.first + cur.second;
    if (total * std::min(na, nb) / n >= min_expected) {
      bins.push_back(cur);
      cur = {0.0, 0.0};
    }
  }
  if (cur.first + cur.second > 0.0) {
    if (bins.empty()) {
      bins.push_back(cur);
    } else {
      bins.back().first += cur.first;
      bins.back().second += cur.second;
    }
  }
  if (bins.size() < 2) return {0.0, 1.0, 0};

  double chi2 = 0.0;
  for (const auto& [oa, ob] : bins) {
    const double total = oa + ob;
    const double ea = total * na / n, eb = total * nb / n;
    chi2 += (oa - ea) * (oa - ea) / ea + (ob - eb) * (ob - eb) / eb;
  }
  const std::size_t dof = bins.size() - 1;
  return {chi2, boost::math::gamma_q(static_cast<double>(dof) / 2.0, chi2 / 2.0), dof};
}

/// Total variation distance between two pmfs on the integers (missing keys are 0).
template <class MapA, class MapB>
double total_variation(const MapA& p, const MapB& q) {
  double sum = 0.0;
  for (const auto& [k, v] : p) {
    const auto it = q.find(k);
    sum += std::abs(v - (it == q.end() ? 0.0 : static_cast<double>(it->second)));
  }
  for (const auto& [k, v] : q)
    if (p.find(k) == p.end()) sum += std::abs(static_cast<double>(v));
  return 0.5 * sum;
}

/// Empirical pmf of integer samples.
inline std::map<std::uint64_t, double> empirical_pmf(std::span<const std::uint64_t> samples) {
  std::map<std::uint64_t, double> out;
  if (samples.empty()) return out;
  const double w = 1.0 / static_cast<double>(samples.size());
  for (const auto x : samples) out[x] += w;
  return out;
}

}  // namespace ysm::stats
