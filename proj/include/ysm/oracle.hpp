#pragma once

// Exact small-n ground truth, written independently of the samplers: the
// expected occurrence histogram E[nu_n(l)] by enumerating every string up to
// relabelling of words, and the geometric law of the Yule process.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

namespace ysm::oracle {

struct ExactExpectation {
  std::uint64_t n = 0;
  double p = 0.0;
  double alpha = 0.0;
  std::map<std::uint64_t, long double> expected_nu;
  std::uint64_t path_count = 0;  ///< canonical strings (set partitions of 1..n) enumerated
  long double total_probability = 0.0L;
};

namespace detail {

class Enumerator {
 public:
  Enumerator(long double p, long double alpha, std::size_t n) : p_(p), pbar_(1.0L - p), n_(n) {
    // weights_[j] = j^alpha, prefix_[k] = sum_{j<=k} j^alpha, both 1-based.
    weights_.assign(n + 1, 0.0L);
    prefix_.assign(n + 1, 0.0L);
    for (std::size_t j = 1; j <= n; ++j) {
      weights_[j] = alpha == 0.0L ? 1.0L : std::pow(static_cast<long double>(j), alpha);
      prefix_[j] = prefix_[j - 1] + weights_[j];
    }
    counts_.reserve(n);
    mass_.reserve(n);
  }

  void run(ExactExpectation& out) {
    out_ = &out;
    // w_1 is always a new word.
    counts_.push_back(1);
    mass_.push_back(weights_[1]);
    visit(1, 1.0L);
  }

 private:
  // Strings that only differ by word labels have identical futures, so we branch
  // on the word copied rather than on the copied position.
  void visit(std::size_t k, long double prob) {
    if (k == n_) {
      ++out_->path_count;
      out_->total_probability += prob;
      for (const auto c : counts_) out_->expected_nu[c] += prob;
      return;
    }
    const long double next_w = weights_[k + 1];

    counts_.push_back(1);
    mass_.push_back(next_w);
    visit(k + 1, prob * p_);
    counts_.pop_back();
    mass_.pop_back();

    const long double total = prefix_[k];
    for (std::size_t w = 0; w < counts_.size(); ++w) {
      const long double q = pbar_ * mass_[w] / total;
      ++counts_[w];
      mass_[w] += next_w;
      visit(k + 1, prob * q);
      --counts_[w];
      mass_[w] -= next_w;
    }
  }

  long double p_, pbar_;
  std::size_t n_;
  std::vector<long double> weights_, prefix_;
  std::vector<std::uint64_t> counts_;  // occurrences of each word so far
  std::vector<long double> mass_;      // sum of j^alpha over positions holding the word
  ExactExpectation* out_ = nullptr;
};

}  // namespace detail

inline constexpr std::uint64_t kMaxEnumerationLength = 12;

/// E[nu_n(l)] for every l, exact up to extended-precision rounding. 2 <= n <= 12.
inline ExactExpectation enumerate_exact(double p, double alpha, std::uint64_t n) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("enumerate_exact: p must lie in (0,1]");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("enumerate_exact: alpha must be >= 0");
  if (n < 2 || n > kMaxEnumerationLength)
    throw std::out_of_range("enumerate_exact: n must lie in 2..12 (the string count grows like the Bell numbers)");
  ExactExpectation out;
  out.n = n;
  out.p = p;
  out.alpha = alpha;
  detail::Enumerator(p, alpha, static_cast<std::size_t>(n)).run(out);
  return out;
}

/// e^{-t} (1 - e^{-t})^{k-1}: the law of a standard Yule process at time t.
inline double geometric_pmf(double t, std::uint64_t k) {
  if (!(t > 0.0)) throw std::invalid_argument("geometric_pmf: t must be > 0");
  if (k < 1) throw std::invalid_argument("geometric_pmf: k must be >= 1");
  if (t == INFINITY) return 0.0;
  const double q = -std::expm1(-t);  // 1 - e^{-t}
  return std::exp(-t + static_cast<double>(k - 1) * std::log(q));
}

}  // namespace ysm::oracle
