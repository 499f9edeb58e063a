#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ysm/rng.hpp"
#include "ysm/weighted_sampler.hpp"

namespace ysm {

struct ModelParams {
  double p = 0.5;      ///< innovation probability
  double alpha = 0.0;  ///< exponent of the copy weights i^alpha
  std::uint64_t n = 1;
  std::uint64_t seed = 0;

  double p_bar() const noexcept { return 1.0 - p; }

  void validate() const {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("ModelParams: p must lie in (0,1)");
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
      throw std::invalid_argument("ModelParams: alpha must be a finite nonnegative real");
    if (n < 1) throw std::invalid_argument("ModelParams: n must be >= 1");
    if (n > std::numeric_limits<std::uint32_t>::max())
      throw std::invalid_argument("ModelParams: n exceeds the 32-bit word id range");
  }
};

/// The string w_1..w_k. Positions are 1-based in the API, 0-based in storage.
struct StringState {
  std::vector<std::uint32_t> word_of_index;
  std::vector<std::uint64_t> count_of_word;

  std::size_t length() const noexcept { return word_of_index.size(); }
  std::size_t distinct() const noexcept { return count_of_word.size(); }
  std::uint32_t word_at(std::size_t j) const { return word_of_index.at(j - 1); }

  /// Reset to the one-word string w_1 (always new), keeping allocations.
  void start() {
    word_of_index.clear();
    count_of_word.clear();
    word_of_index.push_back(0);
    count_of_word.push_back(1);
  }

  void reserve(std::size_t n) {
    word_of_index.reserve(n);
    count_of_word.reserve(n);
  }

  /// True iff position j holds the first occurrence of its word.
  bool is_new(std::size_t j) const {
    const std::uint32_t w = word_at(j);
    for (std::size_t i = 0; i + 1 < j; ++i)
      if (word_of_index[i] == w) return false;
    return true;
  }
};

/// nu_n(l): number of distinct words occurring exactly l times.
struct OccurrenceHistogram {
  std::uint64_t n = 0;
  std::uint64_t distinct = 0;
  std::map<std::uint64_t, std::uint64_t> counts;

  /// Commutative merge of independent replicates (sums n, distinct and counts).
  void merge(const OccurrenceHistogram& other) {
    n += other.n;
    distinct += other.distinct;
    for (const auto& [ell, c] : other.counts) counts[ell] += c;
  }

  std::uint64_t at(std::uint64_t ell) const {
    const auto it = counts.find(ell);
    return it == counts.end() ? 0 : it->second;
  }

  /// Sum nu(l) == distinct and sum l*nu(l) == n.
  bool conserved() const {
    std::uint64_t words = 0, mass = 0;
    for (const auto& [ell, c] : counts) {
      words += c;
      mass += ell * c;
    }
    return words == distinct && mass == n;
  }
};

/// One step of the q-weighted dynamics: w_{k+1} is new with probability p,
/// otherwise a copy of w_J with P(J = j) = j^alpha / s_k.
/// Consumes exactly two uniforms per step, so streams stay aligned.
template <class Gen>
void step(StringState& state, PowerWeightTable& table, const ModelParams& params, Gen& rng) {
  const std::size_t k = state.length();
  if (k < 1) throw std::logic_error("step: state must hold at least w_1; call start()");
  if (table.capacity() < k) table.reserve_to(k);
  const double innovate = rng.uniform();
  const double pick = rng.uniform();
  if (innovate < params.p) {
    const auto w = static_cast<std::uint32_t>(state.count_of_word.size());
    state.count_of_word.push_back(1);
    state.word_of_index.push_back(w);
  } else {
    const std::uint32_t w = state.word_of_index[table.sample_index(k, pick) - 1];
    ++state.count_of_word[w];
    state.word_of_index.push_back(w);
  }
  if (table.capacity() < k + 1) table.extend();
}

inline OccurrenceHistogram histogram_of(const StringState& state) {
  OccurrenceHistogram h;
  h.n = state.length();
  h.distinct = state.distinct();
  for (const auto c : state.count_of_word) ++h.counts[c];
  return h;
}

/// Adds nu(l) of `state` into dense[l] (dense grown as needed).
template <class T>
void accumulate_histogram(const StringState& state, std::vector<T>& dense) {
  for (const auto c : state.count_of_word) {
    if (dense.size() <= c) dense.resize(c + 1, T{});
    dense[c] += T{1};
  }
}

/// Grows a fresh string to length params.n using a caller-owned table.
template <class Gen>
void grow(StringState& state, PowerWeightTable& table, const ModelParams& params, Gen& rng) {
  state.start();
  while (state.length() < params.n) step(state, table, params, rng);
}

/// Single realization of length n, seeded from params.seed.
inline OccurrenceHistogram run(const ModelParams& params) {
  params.validate();
  Rng rng(params.seed);
  PowerWeightTable table(params.alpha, static_cast<std::size_t>(params.n));
  StringState state;
  state.reserve(static_cast<std::size_t>(params.n));
  grow(state, table, params, rng);
  return histogram_of(state);
}

/// nu_n(l) / (n p) for every l present.
inline std::map<std::uint64_t, double> normalized_histogram(const OccurrenceHistogram& h, double p) {
  if (h.n < 1) throw std::invalid_argument("normalized_histogram: empty histogram");
  std::map<std::uint64_t, double> out;
  const double scale = static_cast<double>(h.n) * p;
  for (const auto& [ell, c] : h.counts) out[ell] = static_cast<double>(c) / scale;
  return out;
}

/// N_j(n) straight from the definition (0 when w_j is a repetition).
inline std::uint64_t occurrence_count(const StringState& state, std::size_t j, std::size_t n) {
  if (j < 1 || j > state.length() || n > state.length())
    throw std::out_of_range("occurrence_count: index outside the string");
  if (!state.is_new(j) || n < j) return 0;
  const std::uint32_t w = state.word_at(j);
  std::uint64_t c = 0;
  for (std::size_t k = 0; k < n; ++k) c += state.word_of_index[k] == w;
  return c;
}

/// A_j(n) = n^-alpha * sum_{k<=n} k^alpha 1{w_k = w_j} straight from the definition.
inline double attraction(const StringState& state, std::size_t j, std::size_t n, double alpha) {
  if (j < 1 || j > state.length() || n > state.length())
    throw std::out_of_range("attraction: index outside the string");
  if (!state.is_new(j) || n < j) return 0.0;
  const std::uint32_t w = state.word_at(j);
  double sum = 0.0;
  for (std::size_t k = 1; k <= n; ++k)
    if (state.word_of_index[k - 1] == w) sum += std::pow(static_cast<double>(k) / static_cast<double>(n), alpha);
  return sum;
}

struct TrajectorySample {
  double t = 0.0;
  double attraction = 0.0;
  std::uint64_t count = 0;
};

struct TaggedTrajectory {
  std::uint64_t j = 0;  ///< birth index ceil(u n)
  double u = 0.0;
  std::vector<TrajectorySample> samples;
};

struct TaggedRun {
  std::vector<TaggedTrajectory> trajectories;
  std::uint64_t attempts = 0;  ///< replicates drawn until all tags were new; acceptance ~ p^m
};

struct TaggedOptions {
  /// Record every step k = 1..n (t = k/n) instead of the grid.
  bool full_resolution = false;
};

/// Grid time t -> step index floor(t n), tolerant of t*n landing a hair below an integer.
inline std::uint64_t grid_step(double t, std::uint64_t n) {
  return static_cast<std::uint64_t>(std::floor(t * static_cast<double>(n) + 1e-9));
}

/// Tracks (A_j(floor(tn)), N_j(floor(tn))) for words born at j = ceil(u n), conditioned on
/// every tagged word being new. A replicate where any tagged position is a repetition is
/// discarded whole and attempt a+1 restarts from stream_seed(params.seed, a+1).
inline TaggedRun run_tagged(const ModelParams& params, std::span<const double> tag_fractions,
                            std::span<const double> grid, TaggedOptions options = {}) {
  params.validate();
  if (tag_fractions.empty()) throw std::invalid_argument("run_tagged: no tags");
  if (!options.full_resolution) {
    if (grid.empty()) throw std::invalid_argument("run_tagged: empty grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!(grid[i] > 0.0 && grid[i] <= 1.0)) throw std::invalid_argument("run_tagged: grid times must lie in (0,1]");
      if (i > 0 && grid[i] < grid[i - 1]) throw std::invalid_argument("run_tagged: grid must be sorted ascending");
    }
  }

  const std::uint64_t n = params.n;
  struct Tag {
    std::size_t slot;
    std::uint64_t j;
    double u;
    std::uint32_t word = 0;
    double a = 0.0;
    std::uint64_t count = 0;
  };
  std::vector<Tag> tags;
  for (std::size_t i = 0; i < tag_fractions.size(); ++i) {
    const double u = tag_fractions[i];
    if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("run_tagged: tag fractions must lie in (0,1)");
    const auto j = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(u * static_cast<double>(n) - 1e-9)));
    for (const auto& t : tags)
      if (t.j == j) throw std::invalid_argument("run_tagged: two tags map to the same position");
    tags.push_back({i, j, u});
  }

  std::vector<std::uint64_t> record_at;
  if (options.full_resolution) {
    for (std::uint64_t k = 1; k <= n; ++k) record_at.push_back(k);
  } else {
    for (const double t : grid) record_at.push_back(grid_step(t, n));
  }
  auto time_of = [&](std::size_t g) {
    return options.full_resolution ? static_cast<double>(record_at[g]) / static_cast<double>(n) : grid[g];
  };

  PowerWeightTable table(params.alpha, static_cast<std::size_t>(n));
  StringState state;
  state.reserve(static_cast<std::size_t>(n));
  TaggedRun out;

  for (std::uint64_t attempt = 0;; ++attempt) {
    out.attempts = attempt + 1;
    Rng rng(stream_seed(params.seed, attempt));
    std::vector<TaggedTrajectory> trajectories(tags.size());
    for (auto& t : tags) {
      t.a = 0.0;
      t.count = 0;
      trajectories[t.slot].j = t.j;
      trajectories[t.slot].u = t.u;
    }

    std::size_t g = 0;
    auto record = [&](std::uint64_t k) {
      while (g < record_at.size() && record_at[g] <= k) {
        for (const auto& t : tags) {
          if (record_at[g] < t.j)
            trajectories[t.slot].samples.push_back({time_of(g), 0.0, 0});
          else
            trajectories[t.slot].samples.push_back({time_of(g), t.a, t.count});
        }
        ++g;
      }
    };

    bool rejected = false;
    state.start();
    for (std::uint64_t k = 1;; ++k) {
      // Update every tag for the string of length k.
      const std::uint32_t wk = state.word_of_index[k - 1];
      for (auto& t : tags) {
        if (k < t.j) continue;
        if (k == t.j) {
          if (state.count_of_word[wk] != 1) {
            rejected = true;
            break;
          }
          t.word = wk;
          t.a = 1.0;
          t.count = 1;
        } else {
          if (params.alpha != 0.0)
            t.a *= std::pow(static_cast<double>(k - 1) / static_cast<double>(k), params.alpha);
          if (wk == t.word) {
            t.a += 1.0;
            ++t.count;
          }
        }
      }
      if (rejected) break;
      record(k);
      if (k == n) break;
      step(state, table, params, rng);
    }
    if (rejected) continue;
    out.trajectories = std::move(trajectories);
    return out;
  }
}

}  // namespace ysm
