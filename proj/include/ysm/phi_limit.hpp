#pragma once

// The limit occurrence pmf phi(l) = lim nu_n(l) / (n p), estimated two ways:
//  * model route: average nu_n(l)/(np) over independent strings of length n;
//  * branching route: phi is the law of B(tau * eps), eps ~ Exp(1) independent of B,
//    with time scale tau = pbar (1 + alpha).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "ysm/csbp.hpp"
#include "ysm/parallel.hpp"
#include "ysm/rng.hpp"
#include "ysm/simon_model.hpp"
#include "ysm/stats.hpp"

namespace ysm {

enum class TailRegime { power, critical, exponential };

inline const char* to_string(TailRegime r) noexcept {
  switch (r) {
    case TailRegime::power: return "power";
    case TailRegime::critical: return "critical";
    case TailRegime::exponential: return "exponential";
  }
  return "unknown";
}

struct RegimeParams {
  double p = 0.5;
  double alpha = 0.0;
  double p_bar = 0.5;
  double b = 0.0;          ///< alpha / (pbar (1 + alpha))
  double tau_scale = 0.5;  ///< pbar (1 + alpha), equal to alpha / b when alpha > 0
  TailRegime regime = TailRegime::power;
  double tail_exponent = 0.0;  ///< 1 / (pbar (1 + alpha) - alpha), power regime only
  double rate = 0.0;           ///< ln b + 1/b - 1, exponential regime only
  double rho = 2.0;            ///< 1 / pbar, the Yule-Simon parameter at alpha = 0
};

/// The regime is decided on the sign of pbar (1 + alpha) - alpha, which is the
/// same comparison as b < 1 without dividing.
inline RegimeParams derive_regime(double p, double alpha) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("derive_regime: p must lie in (0,1)");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("derive_regime: alpha must be >= 0");
  RegimeParams r;
  r.p = p;
  r.alpha = alpha;
  r.p_bar = 1.0 - p;
  r.tau_scale = r.p_bar * (1.0 + alpha);
  r.b = alpha / r.tau_scale;
  r.rho = 1.0 / r.p_bar;
  const double gap = r.tau_scale - alpha;
  if (gap > 0.0) {
    r.regime = TailRegime::power;
    r.tail_exponent = 1.0 / gap;
  } else if (gap < 0.0) {
    r.regime = TailRegime::exponential;
    r.rate = std::log(r.b) + 1.0 / r.b - 1.0;
  } else {
    r.regime = TailRegime::critical;
  }
  return r;
}

/// rho * B(l, rho + 1).
inline double yule_simon_pmf(double rho, std::uint64_t ell) {
  if (!(rho > 0.0)) throw std::invalid_argument("yule_simon_pmf: rho must be > 0");
  if (ell < 1) throw std::invalid_argument("yule_simon_pmf: ell must be >= 1");
  return rho * boost::math::beta(static_cast<double>(ell), rho + 1.0);
}

// ----------------------------------------------------------------------------

struct PhiBin {
  double estimate = 0.0;
  double stderr = 0.0;
  stats::Interval ci{0.0, 0.0};
  std::uint64_t count = 0;  ///< raw occurrences behind the estimate
};

struct PhiEstimate {
  std::string method;  ///< "model" or "csbp"
  std::map<std::uint64_t, PhiBin> pmf;
  std::uint64_t n_samples = 0;  ///< csbp: draws of B; model: replicates
  std::uint64_t trials = 0;     ///< binomial denominator behind the counts
  double scale = 1.0;           ///< estimate = (count / trials) * scale
  std::uint64_t truncated = 0;  ///< csbp draws cut by the event cap (recorded at their lower bound)

  /// Bin for l; absent values read as 0 with the zero-count exact interval.
  PhiBin at(std::uint64_t ell) const {
    const auto it = pmf.find(ell);
    if (it != pmf.end()) return it->second;
    PhiBin zero;
    const auto ci = stats::clopper_pearson(0, trials);
    zero.ci = {0.0, ci.hi * scale};
    return zero;
  }

  double total() const {
    double s = 0.0;
    for (const auto& [ell, bin] : pmf) s += bin.estimate;
    return s;
  }
};

namespace detail {

/// Normal interval, or Clopper-Pearson when the bin holds fewer than 30 counts.
inline stats::Interval bin_interval(const PhiBin& bin, std::uint64_t trials, double scale) {
  if (bin.count < 30) {
    const auto ci = stats::clopper_pearson(bin.count, trials);
    return {ci.lo * scale, ci.hi * scale};
  }
  return {std::max(0.0, bin.estimate - 1.959963984540054 * bin.stderr), bin.estimate + 1.959963984540054 * bin.stderr};
}

inline constexpr std::uint64_t kChunk = 8192;

}  // namespace detail

struct SamplingOptions {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::uint64_t event_cap = kDefaultEventCap;
};

struct BirthSamples {
  std::vector<std::uint64_t> values;  ///< B(tau eps), one per draw
  std::uint64_t truncated = 0;
};

/// Draws B(tau_scale * eps). Chunk c of 8192 draws uses stream_seed(seed, c), so the
/// output is identical for any thread count.
inline BirthSamples sample_births_at_exponential_time(const RegimeParams& regime, std::uint64_t n_samples,
                                                      const SamplingOptions& opt = {}) {
  if (n_samples < 1) throw std::invalid_argument("estimate_phi_csbp: n_samples must be >= 1");
  const std::uint64_t chunks = (n_samples + detail::kChunk - 1) / detail::kChunk;
  BirthSamples out;
  out.values.resize(n_samples);
  std::vector<std::uint64_t> truncated(chunks, 0);
  parallel_for(chunks, opt.threads, [&](std::size_t c) {
    Rng rng(stream_seed(opt.seed, c));
    const std::uint64_t begin = c * detail::kChunk, end = std::min(n_samples, begin + detail::kChunk);
    for (std::uint64_t i = begin; i < end; ++i) {
      const double t = regime.tau_scale * rng.exponential();
      ZState s;
      advance(s, regime.b, t, rng, opt.event_cap);
      truncated[c] += s.truncated;
      out.values[i] = s.births;
    }
  });
  for (const auto t : truncated) out.truncated += t;
  return out;
}

inline PhiEstimate phi_from_samples(std::span<const std::uint64_t> values, std::uint64_t truncated = 0) {
  PhiEstimate est;
  est.method = "csbp";
  est.n_samples = values.size();
  est.trials = values.size();
  est.truncated = truncated;
  for (const auto v : values) ++est.pmf[v].count;
  const double n = static_cast<double>(values.size());
  for (auto& [ell, bin] : est.pmf) {
    bin.estimate = static_cast<double>(bin.count) / n;
    bin.stderr = std::sqrt(bin.estimate * (1.0 - bin.estimate) / n);
    bin.ci = detail::bin_interval(bin, est.trials, est.scale);
  }
  return est;
}

inline PhiEstimate estimate_phi_csbp(const RegimeParams& regime, std::uint64_t n_samples,
                                     const SamplingOptions& opt = {}) {
  const auto samples = sample_births_at_exponential_time(regime, n_samples, opt);
  return phi_from_samples(samples.values, samples.truncated);
}

struct ModelEstimate {
  PhiEstimate phi;
  OccurrenceHistogram merged;
};

/// Averages nu_n(l)/(np) over `replicates` strings; replicate r is seeded with
/// stream_seed(params.seed, r). Standard errors come from the spread across
/// replicates (Poisson approximation when there is a single replicate).
inline ModelEstimate estimate_phi_model(const ModelParams& params, std::uint64_t replicates, unsigned threads = 1) {
  params.validate();
  if (replicates < 1) throw std::invalid_argument("estimate_phi_model: replicates must be >= 1");
  std::vector<OccurrenceHistogram> per(replicates);
  parallel_for(replicates, threads, [&](std::size_t r) {
    ModelParams rp = params;
    rp.seed = stream_seed(params.seed, r);
    per[r] = run(rp);
  });

  ModelEstimate out;
  for (const auto& h : per) out.merged.merge(h);
  PhiEstimate& est = out.phi;
  est.method = "model";
  est.n_samples = replicates;
  est.trials = out.merged.distinct;
  const double np = static_cast<double>(params.n) * params.p;
  const double reps = static_cast<double>(replicates);
  est.scale = static_cast<double>(out.merged.distinct) / (reps * np);
  for (const auto& [ell, count] : out.merged.counts) {
    PhiBin bin;
    bin.count = count;
    bin.estimate = static_cast<double>(count) / (reps * np);
    if (replicates > 1) {
      stats::RunningStats rs;
      for (const auto& h : per) rs.add(static_cast<double>(h.at(ell)) / np);
      bin.stderr = rs.stderr_mean();
    } else {
      bin.stderr = std::sqrt(static_cast<double>(count)) / np;
    }
    bin.ci = detail::bin_interval(bin, est.trials, est.scale);
    est.pmf[ell] = bin;
  }
  return out;
}

// ----------------------------------------------------------------------------

class InsufficientTailMass : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TailFitPolicy {
  double k_min_quantile = 0.9;         ///< k_min = sample quantile at this level
  std::uint64_t min_tail_count = 100;  ///< k_max = largest k with #{X >= k} >= this
  double hill_fraction = 0.05;         ///< Hill uses (about) the top fraction of the sample
  std::size_t grid_points = 40;        ///< log-spaced fit abscissae between k_min and k_max
  std::optional<std::uint64_t> k_min;  ///< overrides the quantile rule
  std::optional<std::uint64_t> k_max;
};

struct CcdfPoint {
  std::uint64_t k;
  double ccdf;  ///< #{X >= k} / n
};

struct TailFit {
  std::string regime = "power";
  double exponent = 0.0;  ///< minus the least-squares slope of log ccdf on log k
  double stderr = 0.0;
  std::uint64_t k_min = 0, k_max = 0;
  double r_squared = 0.0;
  std::uint64_t tail_count = 0;  ///< samples >= k_min
  std::vector<CcdfPoint> points;
  double hill_exponent = 0.0;
  double hill_stderr = 0.0;
  std::uint64_t hill_threshold = 0;
  std::uint64_t hill_count = 0;
};

/// Empirical survival #{X >= k}/n at every k in 1..max.
inline std::vector<CcdfPoint> empirical_ccdf(std::span<const std::uint64_t> samples) {
  std::vector<std::uint64_t> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<CcdfPoint> out;
  if (sorted.empty()) return out;
  const double n = static_cast<double>(sorted.size());
  std::size_t i = 0;
  for (std::uint64_t k = std::max<std::uint64_t>(1, sorted.front()); k <= sorted.back(); ++k) {
    while (i < sorted.size() && sorted[i] < k) ++i;
    out.push_back({k, static_cast<double>(sorted.size() - i) / n});
  }
  return out;
}

/// Log-log least squares on the empirical CCDF plus a Hill cross-check.
///
/// The Hill estimator is adapted to integer data: threshold k0 is the smallest
/// integer with #{X >= k0} <= hill_fraction * n, and each exceedance X contributes
/// log((X + 1/2) / k0), i.e. X is read as the floor of a continuous variable.
inline TailFit fit_power_tail(std::span<const std::uint64_t> samples, const TailFitPolicy& policy = {}) {
  if (samples.empty()) throw InsufficientTailMass("fit_power_tail: no samples");
  std::vector<std::uint64_t> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  auto count_ge = [&](std::uint64_t k) {
    return static_cast<std::uint64_t>(x.end() - std::lower_bound(x.begin(), x.end(), k));
  };

  TailFit fit;
  const auto q_index = std::min(n - 1, static_cast<std::size_t>(policy.k_min_quantile * static_cast<double>(n)));
  fit.k_min = std::max<std::uint64_t>(1, policy.k_min.value_or(x[q_index]));
  const std::uint64_t beyond = n - static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), fit.k_min) - x.begin());
  if (beyond < policy.min_tail_count)
    throw InsufficientTailMass("fit_power_tail: only " + std::to_string(beyond) + " samples beyond k_min=" +
                               std::to_string(fit.k_min) + " (need " + std::to_string(policy.min_tail_count) + ")");
  if (policy.k_max) {
    fit.k_max = *policy.k_max;
  } else {
    // count_ge is nonincreasing in k: bisect for the last k with enough tail samples.
    std::uint64_t lo = fit.k_min, hi = x.back();
    while (lo < hi) {
      const std::uint64_t mid = lo + (hi - lo + 1) / 2;
      if (count_ge(mid) >= policy.min_tail_count) lo = mid; else hi = mid - 1;
    }
    fit.k_max = lo;
  }
  if (fit.k_max <= fit.k_min) throw InsufficientTailMass("fit_power_tail: empty fit range");

  std::vector<std::uint64_t> ks;
  const double lmin = std::log(static_cast<double>(fit.k_min)), lmax = std::log(static_cast<double>(fit.k_max));
  const std::size_t m = std::max<std::size_t>(policy.grid_points, 2);
  for (std::size_t i = 0; i < m; ++i) {
    const auto k = static_cast<std::uint64_t>(std::llround(std::exp(lmin + (lmax - lmin) * static_cast<double>(i) / static_cast<double>(m - 1))));
    if (ks.empty() || ks.back() != k) ks.push_back(k);
  }
  if (ks.size() < 3) throw InsufficientTailMass("fit_power_tail: fewer than 3 distinct abscissae in the fit range");

  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (const auto k : ks) {
    const double c = static_cast<double>(count_ge(k)) / static_cast<double>(n);
    fit.points.push_back({k, c});
    const double lx = std::log(static_cast<double>(k)), ly = std::log(c);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly; syy += ly * ly;
  }
  const double np = static_cast<double>(ks.size());
  const double vxx = sxx - sx * sx / np, vxy = sxy - sx * sy / np, vyy = syy - sy * sy / np;
  const double slope = vxy / vxx;
  const double rss = std::max(0.0, vyy - slope * vxy);
  fit.exponent = -slope;
  fit.stderr = std::sqrt(rss / (np - 2.0) / vxx);
  fit.r_squared = vyy > 0.0 ? 1.0 - rss / vyy : 1.0;
  fit.tail_count = count_ge(fit.k_min);

  // Hill cross-check.
  const double target = policy.hill_fraction * static_cast<double>(n);
  std::uint64_t k0 = x[std::min(n - 1, static_cast<std::size_t>((1.0 - policy.hill_fraction) * static_cast<double>(n)))];
  k0 = std::max<std::uint64_t>(k0, 1);
  while (static_cast<double>(count_ge(k0)) > target) ++k0;
  const auto first = std::lower_bound(x.begin(), x.end(), k0);
  double sum = 0.0;
  for (auto it = first; it != x.end(); ++it) sum += std::log((static_cast<double>(*it) + 0.5) / static_cast<double>(k0));
  fit.hill_threshold = k0;
  fit.hill_count = static_cast<std::uint64_t>(x.end() - first);
  if (fit.hill_count > 0 && sum > 0.0) {
    fit.hill_exponent = static_cast<double>(fit.hill_count) / sum;
    fit.hill_stderr = fit.hill_exponent / std::sqrt(static_cast<double>(fit.hill_count));
  }
  return fit;
}

struct ExponentialTailCheck {
  double statistic = 0.0;  ///< sum_l e^{c l} phi_hat(l)
  double bound = 0.0;      ///< b
  double slack = 0.05;
  bool pass = false;
};

inline ExponentialTailCheck check_exponential_tail(const PhiEstimate& phi, const RegimeParams& regime,
                                                   double slack = 0.05) {
  if (regime.regime != TailRegime::exponential)
    throw std::invalid_argument("check_exponential_tail: regime must be exponential (b > 1)");
  ExponentialTailCheck out;
  for (const auto& [ell, bin] : phi.pmf) out.statistic += std::exp(regime.rate * static_cast<double>(ell)) * bin.estimate;
  out.bound = regime.b;
  out.slack = slack;
  out.pass = out.statistic <= regime.b * (1.0 + slack);
  return out;
}

// ----------------------------------------------------------------------------

struct HorizonPolicy {
  std::optional<double> horizon;  ///< default 20 / (1 - b)
  /// Paths whose Z reaches this level stop early and report W at that jump.
  /// W is a martingale, so E[W_T | stop] equals the reported value.
  double z_stop = 2000.0;
};

struct ConstantEstimate {
  double estimate = 0.0;
  double stderr = 0.0;
  double horizon = 0.0;
  double half_horizon_estimate = 0.0;  ///< same estimator at T/2, a sensitivity reading
  double z_stop = 0.0;
  std::uint64_t n_paths = 0;
  std::uint64_t stopped_on_level = 0;
  std::uint64_t truncated = 0;
};

/// Monte Carlo mean of (W_T / (1 - b))^gamma with gamma the tail exponent.
inline ConstantEstimate constant_C(const RegimeParams& regime, std::uint64_t n_paths, const HorizonPolicy& policy = {},
                                   const SamplingOptions& opt = {}) {
  if (regime.regime != TailRegime::power) throw std::invalid_argument("constant_C: needs the power regime (b < 1)");
  if (n_paths < 1) throw std::invalid_argument("constant_C: n_paths must be >= 1");
  const double b = regime.b, gamma = regime.tail_exponent;
  ConstantEstimate out;
  out.horizon = policy.horizon.value_or(20.0 / (1.0 - b));
  out.z_stop = policy.z_stop;
  out.n_paths = n_paths;

  const std::uint64_t chunks = (n_paths + detail::kChunk - 1) / detail::kChunk;
  struct Partial {
    stats::RunningStats full, half;
    std::uint64_t stopped = 0, truncated = 0;
  };
  std::vector<Partial> parts(chunks);
  parallel_for(chunks, opt.threads, [&](std::size_t c) {
    Rng rng(stream_seed(opt.seed, c));
    const std::uint64_t begin = c * detail::kChunk, end = std::min(n_paths, begin + detail::kChunk);
    auto& part = parts[c];
    for (std::uint64_t i = begin; i < end; ++i) {
      ZState s;
      auto value = [&] { return std::pow(std::exp(-(1.0 - b) * s.t) * s.z / (1.0 - b), gamma); };
      advance(s, b, 0.5 * out.horizon, rng, opt.event_cap, policy.z_stop);
      part.half.add(value());
      if (!s.stopped_on_level && !s.truncated) advance(s, b, out.horizon, rng, opt.event_cap, policy.z_stop);
      part.full.add(value());
      part.stopped += s.stopped_on_level;
      part.truncated += s.truncated;
    }
  });
  stats::RunningStats full, half;
  for (const auto& p : parts) {
    full.merge(p.full);
    half.merge(p.half);
    out.stopped_on_level += p.stopped;
    out.truncated += p.truncated;
  }
  out.estimate = full.mean();
  out.stderr = full.stderr_mean();
  out.half_horizon_estimate = half.mean();
  return out;
}

}  // namespace ysm
