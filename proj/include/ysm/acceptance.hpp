#pragma once

// Acceptance criteria as callable checks, shared by the `validate` command and
// the acceptance test binary. Each check runs at its pinned sample size and
// tolerance and reports the numbers it compared.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ysm/csbp.hpp"
#include "ysm/oracle.hpp"
#include "ysm/phi_limit.hpp"
#include "ysm/simon_model.hpp"
#include "ysm/stats.hpp"

namespace ysm::acceptance {

using json = nlohmann::ordered_json;

inline constexpr std::uint64_t kDefaultSeed = 20240611;

struct CriterionResult {
  CriterionResult() = default;
  CriterionResult(int id_, std::string name_) : id(id_), name(std::move(name_)) {}

  int id = 0;
  std::string name;
  bool passed = false;
  double seconds = 0.0;
  json metrics = json::object();
  std::string summary;
};

struct Context {
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 1;
  /// Runs one cmd_simulate configuration and returns its output bytes; wired by the CLI layer.
  std::function<std::string(unsigned threads)> simulate_bytes;
};

namespace detail {

inline std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

inline std::uint64_t seed_for(const Context& ctx, int id, std::uint64_t sub = 0) {
  return stream_seed(stream_seed(ctx.seed, static_cast<std::uint64_t>(id)), sub);
}

}  // namespace detail

/// 1. B(t) = Z(t) + b int_0^t Z on every path, 100-point grid, b in {0, 2/3, 2}.
inline CriterionResult birth_identity(const Context& ctx) {
  CriterionResult r{1, "pathwise birth identity"};
  const double t_max = 5.0;
  double worst = 0.0;
  std::uint64_t paths = 0;
  for (const double b : {0.0, 2.0 / 3.0, 2.0}) {
    Rng rng(detail::seed_for(ctx, 1, static_cast<std::uint64_t>(b * 3)));
    for (int i = 0; i < 1000; ++i, ++paths) {
      const CsbpPath path = simulate_z(b, t_max, rng);
      for (int g = 0; g < 100; ++g) {
        const double t = t_max * g / 99.0;
        const double err = std::abs(static_cast<double>(count_births(path, t)) - path.z(t) - b * integrated_z(path, t));
        worst = std::max(worst, err);
      }
    }
  }
  r.passed = worst < 1e-9;
  r.metrics = {{"paths", paths}, {"grid_points", 100}, {"t_max", t_max}, {"max_abs_error", worst}, {"tolerance", 1e-9}};
  r.summary = "max |B - Z - b*intZ| = " + detail::fmt(worst) + " over " + std::to_string(paths) + " paths";
  return r;
}

/// 2. b = 0: Z(1) is geometric(e^-1); TV < 0.01 at 1e5 paths.
inline CriterionResult yule_law(const Context& ctx) {
  CriterionResult r{2, "Yule case law"};
  Rng rng(detail::seed_for(ctx, 2));
  std::vector<std::uint64_t> values;
  values.reserve(100000);
  for (int i = 0; i < 100000; ++i) {
    const CsbpPath path = simulate_z(0.0, 1.0, rng);
    values.push_back(static_cast<std::uint64_t>(std::llround(path.z(1.0))));
  }
  const auto emp = stats::empirical_pmf(values);
  double tv = 0.0, covered = 0.0;
  for (const auto& [k, f] : emp) {
    const double g = oracle::geometric_pmf(1.0, k);
    tv += std::abs(f - g);
    covered += g;
  }
  tv = 0.5 * (tv + (1.0 - covered));
  r.passed = tv < 0.01;
  r.metrics = {{"paths", 100000}, {"t", 1.0}, {"tv_distance", tv}, {"tolerance", 0.01}};
  r.summary = "TV(Z(1), geometric(e^-1)) = " + detail::fmt(tv);
  return r;
}

/// 3. W_t mean 1 within 4 s.e. (b = 2/3, t = 1,2,4), ODE m_1 exact to 1e-9, MC m_2 within 4 s.e. of the ODE.
inline CriterionResult martingale_moments(const Context& ctx) {
  CriterionResult r{3, "martingale and moments"};
  const double b = 2.0 / 3.0;
  const std::vector<double> times{1.0, 2.0, 4.0};
  std::vector<stats::RunningStats> w(times.size()), z2(times.size());
  Rng rng(detail::seed_for(ctx, 3));
  for (int i = 0; i < 100000; ++i) {
    const CsbpPath path = simulate_z(b, times.back(), rng);
    for (std::size_t k = 0; k < times.size(); ++k) {
      w[k].add(martingale_value(path, times[k]));
      const double z = path.z(times[k]);
      z2[k].add(z * z);
    }
  }
  bool ok = true;
  json rows = json::array();
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    const auto m = moment_ode(b, 2, t);
    const double m1_exact = std::exp((1.0 - b) * t);
    const double m1_err = std::abs(m[0] - m1_exact) / m1_exact;
    const double w_z = std::abs(w[k].mean() - 1.0) / w[k].stderr_mean();
    const double m2_z = std::abs(z2[k].mean() - m[1]) / z2[k].stderr_mean();
    ok = ok && w_z <= 4.0 && m1_err < 1e-9 && m2_z <= 4.0;
    rows.push_back({{"t", t}, {"mean_W", w[k].mean()}, {"se_W", w[k].stderr_mean()}, {"W_z", w_z},
                    {"ode_m1_rel_error", m1_err}, {"mc_m2", z2[k].mean()}, {"se_m2", z2[k].stderr_mean()},
                    {"ode_m2", m[1]}, {"m2_z", m2_z}});
  }
  r.passed = ok;
  r.metrics = {{"b", b}, {"paths", 100000}, {"rows", rows}};
  r.summary = "W mean z-scores " + detail::fmt(rows[0]["W_z"].get<double>(), 3) + ", " +
              detail::fmt(rows[1]["W_z"].get<double>(), 3) + ", " + detail::fmt(rows[2]["W_z"].get<double>(), 3) +
              "; m2 z-scores " + detail::fmt(rows[0]["m2_z"].get<double>(), 3) + ", " +
              detail::fmt(rows[1]["m2_z"].get<double>(), 3) + ", " + detail::fmt(rows[2]["m2_z"].get<double>(), 3);
  return r;
}

/// 4. b = 2: E[e^{c B(inf)}] = 2 within 4 s.e. at 1e5 runs; B(inf) = b int Z to 1e-9.
inline CriterionResult exponential_moment(const Context& ctx) {
  CriterionResult r{4, "exponential-moment identity"};
  const double b = 2.0;
  const double c = std::log(b) + 1.0 / b - 1.0;
  Rng rng(detail::seed_for(ctx, 4));
  stats::RunningStats moment;
  double worst = 0.0;
  std::uint64_t max_births = 0, truncated = 0;
  for (int i = 0; i < 100000; ++i) {
    const ExtinctionStats s = extinction_stats(b, rng);
    truncated += s.truncated;
    worst = std::max(worst, s.identity_error);
    max_births = std::max(max_births, s.births);
    moment.add(std::exp(c * static_cast<double>(s.births)));
  }
  const double z = std::abs(moment.mean() - b) / moment.stderr_mean();
  r.passed = z <= 4.0 && worst < 1e-9 && truncated == 0;
  r.metrics = {{"b", b}, {"c", c}, {"runs", 100000}, {"mean", moment.mean()}, {"se", moment.stderr_mean()},
               {"z_score", z}, {"max_identity_error", worst}, {"max_births", max_births}, {"truncated", truncated}};
  r.summary = "E[e^{cB}] = " + detail::fmt(moment.mean()) + " +/- " + detail::fmt(moment.stderr_mean(), 3) +
              " (target 2, z = " + detail::fmt(z, 3) + "), identity error " + detail::fmt(worst, 3);
  return r;
}

/// 5. alpha = 0, p = 0.5: (a) branching route vs Yule-Simon(2), TV < 0.01 at 1e6;
///    (b) one string of length 1e6 has nu(1)/(np) in [0.656, 0.677].
inline CriterionResult alpha_zero_reduction(const Context& ctx) {
  CriterionResult r{5, "alpha = 0 reduction"};
  const RegimeParams regime = derive_regime(0.5, 0.0);
  const PhiEstimate phi = estimate_phi_csbp(regime, 1000000, {detail::seed_for(ctx, 5, 0), ctx.threads});
  double tv = 0.0, covered = 0.0;
  for (const auto& [ell, bin] : phi.pmf) {
    const double ys = yule_simon_pmf(regime.rho, ell);
    tv += std::abs(bin.estimate - ys);
    covered += ys;
  }
  tv = 0.5 * (tv + std::max(0.0, 1.0 - covered));

  ModelParams mp{0.5, 0.0, 1000000, detail::seed_for(ctx, 5, 1)};
  const auto h = run(mp);
  const double ratio = static_cast<double>(h.at(1)) / (static_cast<double>(mp.n) * mp.p);
  r.passed = tv < 0.01 && ratio >= 0.656 && ratio <= 0.677;
  r.metrics = {{"tv_csbp_vs_yule_simon", tv}, {"samples", 1000000}, {"nu1_over_np", ratio},
               {"nu1_band", {0.656, 0.677}}, {"truncated", phi.truncated}};
  r.summary = "TV = " + detail::fmt(tv) + ", nu(1)/(np) = " + detail::fmt(ratio);
  return r;
}

/// 6. p = 0.25, alpha = 1: model route (n = 1e6, 20 replicates) and branching route (1e6 draws)
///    agree for every l <= 20 within 4 combined standard errors.
inline CriterionResult route_agreement(const Context& ctx) {
  CriterionResult r{6, "route agreement"};
  const double p = 0.25, alpha = 1.0;
  const RegimeParams regime = derive_regime(p, alpha);
  const PhiEstimate csbp = estimate_phi_csbp(regime, 1000000, {detail::seed_for(ctx, 6, 0), ctx.threads});
  const ModelEstimate model = estimate_phi_model({p, alpha, 1000000, detail::seed_for(ctx, 6, 1)}, 20, ctx.threads);
  double worst = 0.0;
  json rows = json::array();
  for (std::uint64_t ell = 1; ell <= 20; ++ell) {
    const PhiBin a = model.phi.at(ell), c = csbp.at(ell);
    const double se = std::sqrt(a.stderr * a.stderr + c.stderr * c.stderr);
    const double z = std::abs(a.estimate - c.estimate) / se;
    worst = std::max(worst, z);
    rows.push_back({{"ell", ell}, {"model", a.estimate}, {"model_se", a.stderr}, {"csbp", c.estimate},
                    {"csbp_se", c.stderr}, {"z", z}});
  }
  r.passed = worst <= 4.0;
  r.metrics = {{"p", p}, {"alpha", alpha}, {"max_z", worst}, {"rows", rows}};
  r.summary = "max |model - csbp| / se over l <= 20 = " + detail::fmt(worst, 3);
  return r;
}

/// 7. p = 0.25, alpha = 1 (exponent 2): CCDF fit on 1e6 branching draws in [1.8, 2.2],
///    Hill cross-check in [1.7, 2.3], default fit-range policy.
inline CriterionResult power_tail(const Context& ctx) {
  CriterionResult r{7, "power-tail exponent"};
  const RegimeParams regime = derive_regime(0.25, 1.0);
  const auto samples = sample_births_at_exponential_time(regime, 1000000, {detail::seed_for(ctx, 7), ctx.threads});
  const TailFit fit = fit_power_tail(samples.values);
  r.passed = fit.exponent >= 1.8 && fit.exponent <= 2.2 && fit.hill_exponent >= 1.7 && fit.hill_exponent <= 2.3;
  r.metrics = {{"predicted", regime.tail_exponent}, {"ccdf_exponent", fit.exponent}, {"ccdf_stderr", fit.stderr},
               {"k_min", fit.k_min}, {"k_max", fit.k_max}, {"r_squared", fit.r_squared},
               {"hill_exponent", fit.hill_exponent}, {"hill_stderr", fit.hill_stderr},
               {"hill_threshold", fit.hill_threshold}, {"hill_count", fit.hill_count},
               {"ccdf_band", {1.8, 2.2}}, {"hill_band", {1.7, 2.3}}};
  r.summary = "CCDF exponent " + detail::fmt(fit.exponent, 4) + " on k in [" + std::to_string(fit.k_min) + ", " +
              std::to_string(fit.k_max) + "], Hill " + detail::fmt(fit.hill_exponent, 4) + " (k0 = " +
              std::to_string(fit.hill_threshold) + ")";
  return r;
}

/// 8. p = 0.75, alpha = 1 (b = 2): sum_l e^{c l} phi_hat(l) <= 2.1 at 1e6 draws.
inline CriterionResult exponential_tail(const Context& ctx) {
  CriterionResult r{8, "exponential regime bound"};
  const RegimeParams regime = derive_regime(0.75, 1.0);
  const PhiEstimate phi = estimate_phi_csbp(regime, 1000000, {detail::seed_for(ctx, 8), ctx.threads});
  const auto check = check_exponential_tail(phi, regime);
  r.passed = check.pass && check.statistic <= 2.1;
  r.metrics = {{"b", regime.b}, {"c", regime.rate}, {"statistic", check.statistic}, {"limit", 2.1},
               {"samples", 1000000}};
  r.summary = "sum e^{cl} phi(l) = " + detail::fmt(check.statistic) + " (limit 2.1)";
  return r;
}

/// 9. alpha = 0, pbar = 0.5: C = Gamma(3) = 2 within 5% (1e5 paths, T = 40).
inline CriterionResult constant_c(const Context& ctx) {
  CriterionResult r{9, "constant C at alpha = 0"};
  const RegimeParams regime = derive_regime(0.5, 0.0);
  HorizonPolicy policy;
  policy.horizon = 40.0;
  const auto est = constant_C(regime, 100000, policy, {detail::seed_for(ctx, 9), ctx.threads});
  const double target = std::tgamma(1.0 + 1.0 / regime.p_bar);
  const double rel = std::abs(est.estimate - target) / target;
  r.passed = rel <= 0.05;
  r.metrics = {{"estimate", est.estimate}, {"stderr", est.stderr}, {"target", target}, {"relative_error", rel},
               {"horizon", est.horizon}, {"half_horizon_estimate", est.half_horizon_estimate},
               {"z_stop", est.z_stop}, {"stopped_on_level", est.stopped_on_level}, {"truncated", est.truncated}};
  r.summary = "C = " + detail::fmt(est.estimate) + " +/- " + detail::fmt(est.stderr, 3) + " (target 2, rel err " +
              detail::fmt(rel, 3) + ")";
  return r;
}

/// 10. Monte Carlo E[nu_n(l)] (1e6 strings) within 4 s.e. of exact enumeration for n <= 8,
///     (p, alpha) in {0.25, 0.5, 0.75} x {0, 1, 2}; exact spot values at n = 2, 3.
inline CriterionResult oracle_equivalence(const Context& ctx) {
  CriterionResult r{10, "oracle equivalence"};
  constexpr std::uint64_t replicates = 1000000;
  bool ok = true;
  double worst = 0.0;
  std::string worst_at;

  // Spot values.
  double spot_err = 0.0;
  for (const double p : {0.25, 0.5, 0.75})
    for (const double a : {0.0, 1.0, 2.0}) {
      const auto e2 = oracle::enumerate_exact(p, a, 2);
      spot_err = std::max(spot_err, static_cast<double>(std::abs(e2.expected_nu.at(1) - 2.0L * p)));
    }
  for (const double a : {0.0, 1.0, 2.0}) {
    const auto e3 = oracle::enumerate_exact(0.5, a, 3);
    spot_err = std::max({spot_err, static_cast<double>(std::abs(e3.expected_nu.at(1) - 1.25L)),
                         static_cast<double>(std::abs(e3.expected_nu.at(2) - 0.5L)),
                         static_cast<double>(std::abs(e3.expected_nu.at(3) - 0.25L))});
  }
  ok = ok && spot_err < 1e-15;

  std::uint64_t comparisons = 0, config = 0;
  for (const double p : {0.25, 0.5, 0.75})
    for (const double a : {0.0, 1.0, 2.0})
      for (std::uint64_t n = 2; n <= 8; ++n, ++config) {
        const auto exact = oracle::enumerate_exact(p, a, n);
        ModelParams mp{p, a, n, 0};
        PowerWeightTable table(a, n);
        StringState state;
        state.reserve(n);
        Rng rng(detail::seed_for(ctx, 10, config));
        std::vector<double> sum(n + 1, 0.0), sum2(n + 1, 0.0);
        std::vector<std::uint32_t> nu(n + 1, 0);
        for (std::uint64_t rep = 0; rep < replicates; ++rep) {
          grow(state, table, mp, rng);
          std::fill(nu.begin(), nu.end(), 0);
          for (const auto c : state.count_of_word) ++nu[c];
          for (std::uint64_t l = 1; l <= n; ++l) {
            sum[l] += nu[l];
            sum2[l] += static_cast<double>(nu[l]) * nu[l];
          }
        }
        for (std::uint64_t l = 1; l <= n; ++l) {
          const double mean = sum[l] / replicates;
          const double var = std::max(0.0, (sum2[l] - replicates * mean * mean) / (replicates - 1));
          const double se = std::sqrt(var / replicates);
          const auto it = exact.expected_nu.find(l);
          const double target = it == exact.expected_nu.end() ? 0.0 : static_cast<double>(it->second);
          const double diff = std::abs(mean - target);
          const double z = se > 0.0 ? diff / se : (diff < 1e-12 ? 0.0 : INFINITY);
          ++comparisons;
          if (z > worst) {
            worst = z;
            worst_at = "p=" + detail::fmt(p) + " alpha=" + detail::fmt(a) + " n=" + std::to_string(n) +
                       " l=" + std::to_string(l);
          }
          ok = ok && z <= 4.0;
        }
      }
  r.passed = ok;
  r.metrics = {{"replicates", replicates}, {"comparisons", comparisons}, {"max_z", worst}, {"max_z_at", worst_at},
               {"spot_value_error", spot_err}};
  r.summary = std::to_string(comparisons) + " comparisons, max z = " + detail::fmt(worst, 3) + " at " + worst_at +
              "; spot error " + detail::fmt(spot_err, 3);
  return r;
}

/// 11. N_j(k) equals the number of strict increases of A_j up to k, at every step.
inline CriterionResult occurrence_attraction_identity(const Context& ctx) {
  CriterionResult r{11, "occurrence/attraction identity"};
  const std::vector<double> tags{0.1, 0.5, 0.9};
  std::uint64_t checked = 0, mismatches = 0, trajectories = 0;
  int config = 0;
  for (const double p : {0.25, 0.5, 0.75})
    for (const double alpha : {0.0, 0.5, 1.0, 2.0})
      for (int rep = 0; rep < 5; ++rep, ++config) {
        ModelParams mp{p, alpha, 2000, detail::seed_for(ctx, 11, static_cast<std::uint64_t>(config))};
        const TaggedRun run = run_tagged(mp, tags, {}, {.full_resolution = true});
        for (const auto& tr : run.trajectories) {
          ++trajectories;
          double prev = 0.0;
          std::uint64_t increases = 0;
          for (const auto& s : tr.samples) {
            if (s.attraction > prev) ++increases;
            prev = s.attraction;
            ++checked;
            mismatches += increases != s.count;
          }
        }
      }
  r.passed = mismatches == 0 && checked > 0;
  r.metrics = {{"trajectories", trajectories}, {"steps_checked", checked}, {"mismatches", mismatches}};
  r.summary = std::to_string(mismatches) + " mismatches over " + std::to_string(checked) + " tracked steps";
  return r;
}

/// 12. b = 2/3, 1e4 draws each: Z(1) direct vs Lamperti (KS), B(2) direct vs CMJ (chi-square);
///     neither test rejects at level 0.01.
inline CriterionResult construction_equivalence(const Context& ctx) {
  CriterionResult r{12, "construction equivalence"};
  const double b = 2.0 / 3.0;
  const int draws = 10000;
  Rng direct_rng(detail::seed_for(ctx, 12, 0)), lamperti_rng(detail::seed_for(ctx, 12, 1)),
      births_rng(detail::seed_for(ctx, 12, 2)), cmj_rng(detail::seed_for(ctx, 12, 3));
  std::vector<double> z_direct, z_lamperti;
  std::vector<std::uint64_t> b_direct, b_cmj;
  for (int i = 0; i < draws; ++i) {
    z_direct.push_back(simulate_z(b, 1.0, direct_rng).z(1.0));
    z_lamperti.push_back(simulate_lamperti(b, lamperti_rng, {.clock_time = 1.0}).z(1.0));
    b_direct.push_back(count_births(simulate_z(b, 2.0, births_rng), 2.0));
    b_cmj.push_back(simulate_cmj(b, 2.0, cmj_rng).births(2.0));
  }
  const auto ks = stats::ks_two_sample(z_direct, z_lamperti);
  const auto chi = stats::chi2_two_sample(b_direct, b_cmj);
  r.passed = ks.p_value >= 0.01 && chi.p_value >= 0.01;
  r.metrics = {{"b", b}, {"draws", draws}, {"ks_statistic", ks.statistic}, {"ks_p_value", ks.p_value},
               {"chi2_statistic", chi.statistic}, {"chi2_dof", chi.dof}, {"chi2_p_value", chi.p_value}};
  r.summary = "KS p = " + detail::fmt(ks.p_value, 4) + " (Z(1): direct vs Lamperti), chi2 p = " +
              detail::fmt(chi.p_value, 4) + " (B(2): direct vs CMJ)";
  return r;
}

/// 13. `simulate` output is byte-identical with 1 and 8 worker threads.
inline CriterionResult determinism(const Context& ctx) {
  CriterionResult r{13, "thread-count determinism"};
  if (!ctx.simulate_bytes) {
    r.summary = "no simulate runner wired";
    return r;
  }
  const std::string one = ctx.simulate_bytes(1), eight = ctx.simulate_bytes(8);
  r.passed = !one.empty() && one == eight;
  r.metrics = {{"bytes_threads_1", one.size()}, {"bytes_threads_8", eight.size()}, {"identical", one == eight}};
  r.summary = r.passed ? "identical (" + std::to_string(one.size()) + " bytes)" : "outputs differ";
  return r;
}

using Check = CriterionResult (*)(const Context&);

inline const std::vector<Check>& all_checks() {
  static const std::vector<Check> checks{birth_identity,       yule_law,           martingale_moments,
                                         exponential_moment,   alpha_zero_reduction, route_agreement,
                                         power_tail,           exponential_tail,   constant_c,
                                         oracle_equivalence,   occurrence_attraction_identity,
                                         construction_equivalence, determinism};
  return checks;
}

/// Runs the selected criteria (all when `only` is empty), timing each one.
inline std::vector<CriterionResult> run_all(const Context& ctx, const std::vector<int>& only = {},
                                            const std::function<void(const CriterionResult&)>& on_result = {}) {
  std::vector<CriterionResult> out;
  const auto& checks = all_checks();
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    CriterionResult res = checks[i](ctx);
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (on_result) on_result(res);
    out.push_back(std::move(res));
  }
  return out;
}

}  // namespace ysm::acceptance
