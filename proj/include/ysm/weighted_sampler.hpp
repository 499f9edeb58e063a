#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ysm {

/// Append-only prefix sums s_j = sum_{i<=j} i^alpha, giving exact inverse-CDF
/// sampling of an index J with P(J = j) = j^alpha / s_k over 1..k.
///
/// Indices are 1-based to match the string positions they weight. The table
/// is read-only safe to share across threads once built; extend() is not.
class PowerWeightTable {
 public:
  explicit PowerWeightTable(double alpha, std::size_t capacity = 1) : alpha_(alpha) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
      throw std::invalid_argument("PowerWeightTable: alpha must be a finite nonnegative real");
    if (capacity < 1) throw std::invalid_argument("PowerWeightTable: capacity must be >= 1");
    prefix_.reserve(capacity + 1);
    prefix_.push_back(0.0);
    prefix_.push_back(1.0);
    reserve_to(capacity);
  }

  double alpha() const noexcept { return alpha_; }
  std::size_t capacity() const noexcept { return prefix_.size() - 1; }

  /// s_j for 0 <= j <= capacity (s_0 = 0).
  double prefix(std::size_t j) const {
    if (j > capacity()) throw std::out_of_range("PowerWeightTable::prefix: index beyond capacity");
    return prefix_[j];
  }

  /// Weight of index j, i.e. j^alpha.
  double weight(std::size_t j) const {
    if (j == 0) throw std::out_of_range("PowerWeightTable::weight: indices start at 1");
    return alpha_ == 0.0 ? 1.0 : std::pow(static_cast<double>(j), alpha_);
  }

  /// Grow capacity by one: s_{k+1} = s_k + (k+1)^alpha.
  void extend() { prefix_.push_back(prefix_.back() + weight(prefix_.size())); }

  void reserve_to(std::size_t capacity) {
    if (capacity + 1 > prefix_.capacity()) prefix_.reserve(capacity + 1);
    while (this->capacity() < capacity) extend();
  }

  /// Smallest j in 1..k with s_j >= u * s_k. Deterministic in (table, k, u).
  std::size_t sample_index(std::size_t k, double u) const {
    check_k(k, "sample_index");
    if (k == 1) return 1;
    const double target = u * prefix_[k];
    const auto first = prefix_.begin() + 1;
    const auto it = std::lower_bound(first, prefix_.begin() + static_cast<std::ptrdiff_t>(k) + 1, target);
    // u < 1 keeps target < s_k up to rounding; clamp guards the u -> 1 edge.
    const auto j = static_cast<std::size_t>(it - prefix_.begin());
    return std::min(std::max<std::size_t>(j, 1), k);
  }

  /// Probability vector (P(J=1), ..., P(J=k)).
  std::vector<double> pmf(std::size_t k) const {
    check_k(k, "pmf");
    std::vector<double> out(k);
    const double total = prefix_[k];
    for (std::size_t j = 1; j <= k; ++j) out[j - 1] = weight(j) / total;
    return out;
  }

  std::span<const double> prefix_sums() const noexcept { return prefix_; }

 private:
  void check_k(std::size_t k, const char* what) const {
    if (k < 1 || k > capacity())
      throw std::out_of_range(std::string("PowerWeightTable::") + what + ": k=" + std::to_string(k) +
                              " outside 1.." + std::to_string(capacity()));
  }

  double alpha_;
  std::vector<double> prefix_;
};

}  // namespace ysm
