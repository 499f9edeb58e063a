#pragma once

// Command-line front end: configuration, dispatch and report emission.
// Reports are either CSV (one `#`-prefixed JSON metadata line, then a header
// row) or a single JSON object tagged "schema": "ysm/1".

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ysm/acceptance.hpp"
#include "ysm/csbp.hpp"
#include "ysm/oracle.hpp"
#include "ysm/parallel.hpp"
#include "ysm/phi_limit.hpp"
#include "ysm/simon_model.hpp"

#ifndef YSM_BUILD_ID
#define YSM_BUILD_ID "ysm-0.1.0"
#endif

namespace ysm::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "ysm/1";
inline constexpr int kExitOk = 0;
inline constexpr int kExitCriterionFailure = 1;
inline constexpr int kExitUsage = 2;

/// Bad or missing configuration; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  std::string subcommand;  // csbp: z | lamperti | cmj | moments | extinction

  std::optional<double> p;
  std::optional<double> alpha;
  std::optional<std::uint64_t> n;
  std::optional<double> b;
  std::optional<double> t;
  std::uint64_t replicates = 1;
  std::optional<std::uint64_t> samples;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string output = "-";
  std::string format = "csv";
  std::uint64_t event_cap = kDefaultEventCap;

  std::vector<double> tags;
  std::vector<double> grid;
  std::string route = "both";
  std::uint64_t ell_max = 3;
  bool with_constant = false;
  std::optional<double> horizon;
  double z_stop = 2000.0;

  double k_min_quantile = 0.9;
  std::uint64_t min_tail_count = 100;
  double hill_fraction = 0.05;
  std::string input;
  std::string samples_out;

  std::vector<int> only;

  /// Everything that determines the output, in a fixed key order. Threads and
  /// output location are excluded: they must not change the bytes produced.
  json echo() const {
    json j;
    j["command"] = subcommand.empty() ? command : command + " " + subcommand;
    auto put = [&](const char* key, const auto& opt) {
      if (opt) j[key] = *opt;
    };
    put("p", p);
    put("alpha", alpha);
    put("n", n);
    put("b", b);
    put("t", t);
    put("samples", samples);
    j["replicates"] = replicates;
    j["seed"] = seed;
    j["event_cap"] = event_cap;
    if (!tags.empty()) j["tags"] = tags;
    if (!grid.empty()) j["grid"] = grid;
    if (command == "phi") j["route"] = route;
    if (command == "csbp" && subcommand == "moments") j["ell_max"] = ell_max;
    if (with_constant) {
      j["with_constant"] = true;
      put("horizon", horizon);
      j["z_stop"] = z_stop;
    }
    if (command == "tailfit" || command == "phi") {
      j["k_min_quantile"] = k_min_quantile;
      j["min_tail_count"] = min_tail_count;
      j["hill_fraction"] = hill_fraction;
    }
    if (!input.empty()) j["input"] = input;
    return j;
  }
};

namespace detail {

inline std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

inline std::string num(long double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<long double>::max_digits10) << v;
  return os.str();
}

template <class T>
T require(const std::optional<T>& v, const char* flag) {
  if (!v) throw UsageError(std::string("missing required option --") + flag);
  return *v;
}

inline void check_format(const RunConfig& cfg) {
  if (cfg.format != "csv" && cfg.format != "json") throw UsageError("--format must be csv or json");
  if (cfg.threads < 1) throw UsageError("--threads must be >= 1");
}

inline ModelParams model_params(const RunConfig& cfg) {
  ModelParams mp;
  mp.p = require(cfg.p, "p");
  mp.alpha = cfg.alpha.value_or(0.0);
  mp.n = require(cfg.n, "n");
  mp.seed = cfg.seed;
  try {
    mp.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return mp;
}

inline RegimeParams regime_params(const RunConfig& cfg) {
  const double p = require(cfg.p, "p");
  const double alpha = cfg.alpha.value_or(0.0);
  try {
    return derive_regime(p, alpha);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

inline double drift(const RunConfig& cfg) {
  const double b = require(cfg.b, "b");
  if (!(b >= 0.0) || !std::isfinite(b)) throw UsageError("--b must be a finite nonnegative real");
  return b;
}

inline json header(const RunConfig& cfg) {
  json j;
  j["schema"] = kSchema;
  j["build"] = YSM_BUILD_ID;
  j["config"] = cfg.echo();
  return j;
}

inline void csv_preamble(std::ostream& out, const RunConfig& cfg, const char* columns) {
  out << "# " << header(cfg).dump() << '\n' << columns << '\n';
}

inline json regime_json(const RegimeParams& r) {
  json j{{"p", r.p}, {"alpha", r.alpha}, {"p_bar", r.p_bar}, {"b", r.b}, {"tau_scale", r.tau_scale},
         {"regime", to_string(r.regime)}, {"rho", r.rho}};
  if (r.regime == TailRegime::power) j["tail_exponent"] = r.tail_exponent;
  if (r.regime == TailRegime::exponential) j["rate"] = r.rate;
  return j;
}

inline json tailfit_json(const TailFit& f) {
  return {{"regime", f.regime}, {"exponent", f.exponent}, {"stderr", f.stderr},
          {"fit_range", {f.k_min, f.k_max}}, {"r_squared", f.r_squared}, {"tail_count", f.tail_count},
          {"hill_exponent", f.hill_exponent}, {"hill_stderr", f.hill_stderr},
          {"hill_threshold", f.hill_threshold}, {"hill_count", f.hill_count}};
}

inline json phi_rows(const PhiEstimate& est) {
  json rows = json::array();
  for (const auto& [ell, bin] : est.pmf)
    rows.push_back({{"ell", ell}, {"est", bin.estimate}, {"se", bin.stderr}, {"ci_lo", bin.ci.lo},
                    {"ci_hi", bin.ci.hi}, {"route", est.method}});
  return rows;
}

inline TailFitPolicy tail_policy(const RunConfig& cfg) {
  TailFitPolicy pol;
  pol.k_min_quantile = cfg.k_min_quantile;
  pol.min_tail_count = cfg.min_tail_count;
  pol.hill_fraction = cfg.hill_fraction;
  return pol;
}

inline double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

// ----------------------------------------------------------------------------

/// Occurrence histogram of `replicates` independent strings (merged by addition),
/// or tagged-word trajectories when --tags is given.
inline void cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  detail::check_format(cfg);
  const ModelParams mp = detail::model_params(cfg);

  if (!cfg.tags.empty()) {
    if (cfg.grid.empty()) throw UsageError("--tags needs --grid");
    TaggedRun tr;
    try {
      tr = run_tagged(mp, cfg.tags, cfg.grid);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    if (cfg.format == "csv") {
      detail::csv_preamble(out, cfg, "u,t,A,N");
      for (const auto& traj : tr.trajectories)
        for (const auto& s : traj.samples)
          out << detail::num(traj.u) << ',' << detail::num(s.t) << ',' << detail::num(s.attraction) << ','
              << s.count << '\n';
    } else {
      json j = detail::header(cfg);
      j["attempts"] = tr.attempts;
      json list = json::array();
      for (const auto& traj : tr.trajectories) {
        json samples = json::array();
        for (const auto& s : traj.samples) samples.push_back({{"t", s.t}, {"A", s.attraction}, {"N", s.count}});
        list.push_back({{"j", traj.j}, {"u", traj.u}, {"samples", samples}});
      }
      j["trajectories"] = list;
      out << j.dump(2) << '\n';
    }
    return;
  }

  if (cfg.replicates < 1) throw UsageError("--replicates must be >= 1");
  std::vector<OccurrenceHistogram> per(cfg.replicates);
  parallel_for(cfg.replicates, cfg.threads, [&](std::size_t r) {
    ModelParams rp = mp;
    rp.seed = stream_seed(mp.seed, r);
    per[r] = run(rp);
  });
  OccurrenceHistogram merged;
  for (const auto& h : per) merged.merge(h);

  if (cfg.format == "csv") {
    detail::csv_preamble(out, cfg, "ell,count");
    for (const auto& [ell, c] : merged.counts) out << ell << ',' << c << '\n';
  } else {
    json j = detail::header(cfg);
    j["n"] = mp.n;
    j["p"] = mp.p;
    j["alpha"] = mp.alpha;
    j["seed"] = mp.seed;
    j["replicates"] = cfg.replicates;
    j["total_length"] = merged.n;
    j["distinct"] = merged.distinct;
    json counts = json::array();
    for (const auto& [ell, c] : merged.counts) counts.push_back({{"ell", ell}, {"count", c}});
    j["counts"] = counts;
    out << j.dump(2) << '\n';
  }
}

/// phi by the model route, the branching route, or both.
inline void cmd_phi(const RunConfig& cfg, std::ostream& out) {
  detail::check_format(cfg);
  const auto start = std::chrono::steady_clock::now();
  const RegimeParams regime = detail::regime_params(cfg);
  if (cfg.route != "model" && cfg.route != "csbp" && cfg.route != "both")
    throw UsageError("--route must be model, csbp or both");
  const bool use_model = cfg.route != "csbp", use_csbp = cfg.route != "model";

  std::optional<ModelEstimate> model;
  if (use_model) {
    ModelParams mp;
    mp.p = regime.p;
    mp.alpha = regime.alpha;
    mp.n = cfg.n.value_or(1000000);
    mp.seed = stream_seed(cfg.seed, 1);
    model = estimate_phi_model(mp, cfg.replicates, cfg.threads);
  }
  std::optional<BirthSamples> draws;
  std::optional<PhiEstimate> csbp;
  if (use_csbp) {
    draws = sample_births_at_exponential_time(regime, cfg.samples.value_or(1000000),
                                              {stream_seed(cfg.seed, 2), cfg.threads, cfg.event_cap});
    csbp = phi_from_samples(draws->values, draws->truncated);
  }

  json j = detail::header(cfg);
  j["params"] = {{"p", regime.p}, {"alpha", regime.alpha}};
  j["regime"] = detail::regime_json(regime);
  json rows = json::array();
  if (model)
    for (auto& row : detail::phi_rows(model->phi)) rows.push_back(row);
  if (csbp)
    for (auto& row : detail::phi_rows(*csbp)) rows.push_back(row);
  j["phi"] = rows;
  if (model && csbp) {
    double worst = 0.0;
    for (std::uint64_t ell = 1; ell <= 20; ++ell) {
      const auto a = model->phi.at(ell), c = csbp->at(ell);
      const double se = std::hypot(a.stderr, c.stderr);
      if (se > 0.0) worst = std::max(worst, std::abs(a.estimate - c.estimate) / se);
    }
    j["route_agreement_max_z"] = worst;
  }
  if (csbp) {
    j["truncated"] = csbp->truncated;
    if (regime.regime == TailRegime::power) {
      try {
        j["tailfit"] = detail::tailfit_json(fit_power_tail(draws->values, detail::tail_policy(cfg)));
      } catch (const InsufficientTailMass& e) {
        j["tailfit"] = nullptr;
        j["tailfit_error"] = e.what();
      }
    } else if (regime.regime == TailRegime::exponential) {
      const auto check = check_exponential_tail(*csbp, regime);
      j["exponential_tail"] = {{"statistic", check.statistic}, {"bound", check.bound}, {"pass", check.pass}};
    }
  }
  if (cfg.with_constant && regime.regime == TailRegime::power) {
    HorizonPolicy pol;
    pol.horizon = cfg.horizon;
    pol.z_stop = cfg.z_stop;
    const auto c = constant_C(regime, cfg.samples.value_or(100000), pol, {stream_seed(cfg.seed, 3), cfg.threads,
                                                                          cfg.event_cap});
    j["C"] = {{"estimate", c.estimate}, {"stderr", c.stderr}, {"horizon", c.horizon},
              {"half_horizon_estimate", c.half_horizon_estimate}, {"z_stop", c.z_stop},
              {"stopped_on_level", c.stopped_on_level}, {"truncated", c.truncated}};
  }
  j["wall_time_s"] = detail::elapsed(start);

  if (cfg.format == "json") {
    out << j.dump(2) << '\n';
    return;
  }
  json meta = j;
  meta.erase("phi");
  out << "# " << meta.dump() << '\n' << "ell,route,est,se,ci_lo,ci_hi\n";
  for (const auto& row : rows)
    out << row["ell"].get<std::uint64_t>() << ',' << row["route"].get<std::string>() << ','
        << detail::num(row["est"].get<double>()) << ',' << detail::num(row["se"].get<double>()) << ','
        << detail::num(row["ci_lo"].get<double>()) << ',' << detail::num(row["ci_hi"].get<double>()) << '\n';
}

inline std::vector<std::uint64_t> read_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open --input file " + path);
  std::vector<std::uint64_t> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    try {
      std::size_t used = 0;
      const auto v = std::stoull(line, &used);
      out.push_back(v);
    } catch (const std::exception&) {
      if (out.empty()) continue;  // header row
      throw UsageError("malformed sample line: " + line);
    }
  }
  return out;
}

/// Tail fit of B at an exponential time (or of samples read from --input).
inline void cmd_tailfit(const RunConfig& cfg, std::ostream& out) {
  detail::check_format(cfg);
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::uint64_t> samples;
  std::optional<RegimeParams> regime;
  std::uint64_t truncated = 0;
  if (!cfg.input.empty()) {
    samples = read_samples(cfg.input);
  } else {
    regime = detail::regime_params(cfg);
    if (regime->regime != TailRegime::power) throw UsageError("tailfit needs the power regime (pbar > alpha/(1+alpha))");
    auto draws = sample_births_at_exponential_time(*regime, cfg.samples.value_or(1000000),
                                                   {stream_seed(cfg.seed, 2), cfg.threads, cfg.event_cap});
    samples = std::move(draws.values);
    truncated = draws.truncated;
  }
  if (!cfg.samples_out.empty()) {
    std::ofstream raw(cfg.samples_out);
    if (!raw) throw UsageError("cannot write --samples-out file " + cfg.samples_out);
    raw << "# " << detail::header(cfg).dump() << "\nB\n";
    for (const auto v : samples) raw << v << '\n';
  }

  const TailFit fit = fit_power_tail(samples, detail::tail_policy(cfg));
  json j = detail::header(cfg);
  if (regime) j["regime"] = detail::regime_json(*regime);
  j["n_samples"] = samples.size();
  j["truncated"] = truncated;
  j["tailfit"] = detail::tailfit_json(fit);
  json pts = json::array();
  for (const auto& pt : fit.points) pts.push_back({{"k", pt.k}, {"ccdf", pt.ccdf}});
  j["fit_points"] = pts;
  j["wall_time_s"] = detail::elapsed(start);
  if (cfg.format == "json") {
    out << j.dump(2) << '\n';
    return;
  }
  json meta = j;
  meta.erase("fit_points");
  out << "# " << meta.dump() << "\nk,ccdf\n";
  for (const auto& pt : empirical_ccdf(samples)) out << pt.k << ',' << detail::num(pt.ccdf) << '\n';
}

/// Branching-process tools: z, lamperti, cmj, moments, extinction.
inline void cmd_csbp(const RunConfig& cfg, std::ostream& out) {
  detail::check_format(cfg);
  const auto start = std::chrono::steady_clock::now();
  const std::string& sub = cfg.subcommand;
  const double b = detail::drift(cfg);
  const std::uint64_t n_paths = cfg.samples.value_or(1);
  if (n_paths < 1) throw UsageError("--samples must be >= 1");
  Rng rng(cfg.seed);
  json j = detail::header(cfg);
  j["b"] = b;
  j["n_paths"] = n_paths;

  auto finish = [&](json estimates) {
    j["estimates"] = std::move(estimates);
    j["wall_time_s"] = detail::elapsed(start);
    out << j.dump(2) << '\n';
  };
  auto write_path = [&](const CsbpPath& path) {
    detail::csv_preamble(out, cfg, "t_jump,z_after");
    for (std::size_t i = 0; i < path.jump_times.size(); ++i)
      out << detail::num(path.jump_times[i]) << ',' << detail::num(path.values_after_jump[i]) << '\n';
  };

  if (sub == "z" || sub == "lamperti") {
    const double t = detail::require(cfg.t, "t");
    if (!(t > 0.0) || !std::isfinite(t)) throw UsageError("--t must be a positive finite time");
    j["horizon"] = t;
    auto draw = [&]() {
      return sub == "z" ? simulate_z(b, t, rng, cfg.event_cap)
                        : to_csbp_path(simulate_lamperti(b, rng, {.clock_time = t}, cfg.event_cap));
    };
    if (cfg.format == "csv") {
      write_path(draw());
      return;
    }
    stats::RunningStats z, w, births;
    std::uint64_t truncated = 0;
    for (std::uint64_t i = 0; i < n_paths; ++i) {
      const CsbpPath path = draw();
      if (path.truncated) {
        ++truncated;
        continue;
      }
      z.add(path.z(t));
      w.add(martingale_value(path, t));
      births.add(static_cast<double>(count_births(path, t)));
    }
    j["truncated_paths"] = truncated;
    finish({{"mean_z", z.mean()}, {"se_z", z.stderr_mean()}, {"expected_z", std::exp((1.0 - b) * t)},
            {"mean_w", w.mean()}, {"se_w", w.stderr_mean()}, {"mean_births", births.mean()},
            {"se_births", births.stderr_mean()},
            {"expected_births", b == 1.0 ? 1.0 + t : (std::exp((1.0 - b) * t) - b) / (1.0 - b)}});
    return;
  }

  if (sub == "cmj") {
    const double t = detail::require(cfg.t, "t");
    if (!(t >= 0.0) || !std::isfinite(t)) throw UsageError("--t must be a finite time >= 0");
    j["horizon"] = t;
    if (cfg.format == "csv") {
      const CmjPopulation pop = simulate_cmj(b, t, rng, cfg.event_cap);
      detail::csv_preamble(out, cfg, "t_birth,births");
      for (std::size_t i = 0; i < pop.birth_times.size(); ++i)
        out << detail::num(pop.birth_times[i]) << ',' << i + 1 << '\n';
      return;
    }
    stats::RunningStats births;
    std::uint64_t truncated = 0;
    for (std::uint64_t i = 0; i < n_paths; ++i) {
      const CmjPopulation pop = simulate_cmj(b, t, rng, cfg.event_cap);
      truncated += pop.truncated;
      if (!pop.truncated) births.add(static_cast<double>(pop.births(t)));
    }
    j["truncated_paths"] = truncated;
    finish({{"mean_births", births.mean()}, {"se_births", births.stderr_mean()},
            {"expected_births", b == 1.0 ? 1.0 + t : (std::exp((1.0 - b) * t) - b) / (1.0 - b)}});
    return;
  }

  if (sub == "moments") {
    const double t = detail::require(cfg.t, "t");
    if (!(t >= 0.0) || !std::isfinite(t)) throw UsageError("--t must be a finite time >= 0");
    if (cfg.ell_max < 1) throw UsageError("--ell-max must be >= 1");
    const MomentSolution sol = solve_moments(b, cfg.ell_max, t);
    if (cfg.format == "csv") {
      detail::csv_preamble(out, cfg, "ell,moment");
      for (std::size_t l = 0; l < sol.moments.size(); ++l) out << l + 1 << ',' << detail::num(sol.moments[l]) << '\n';
      return;
    }
    j["t"] = t;
    j["rk4_steps"] = sol.steps;
    j["halving_change"] = sol.halving_change;
    finish({{"moments", sol.moments}});
    return;
  }

  if (sub == "extinction") {
    if (!(b > 1.0)) throw UsageError("extinction needs --b > 1");
    const double c = std::log(b) + 1.0 / b - 1.0;
    if (cfg.format == "csv") detail::csv_preamble(out, cfg, "zeta,births");
    stats::RunningStats moment, zeta;
    std::uint64_t no_jump = 0, truncated = 0;
    double worst = 0.0;
    for (std::uint64_t i = 0; i < n_paths; ++i) {
      const ExtinctionStats s = extinction_stats(b, rng, cfg.event_cap);
      if (s.truncated) {
        ++truncated;
        continue;
      }
      if (cfg.format == "csv") out << detail::num(s.zeta) << ',' << s.births << '\n';
      moment.add(std::exp(c * static_cast<double>(s.births)));
      zeta.add(s.zeta);
      no_jump += s.births == 1;
      worst = std::max(worst, s.identity_error);
    }
    if (cfg.format == "csv") return;
    j["truncated_paths"] = truncated;
    finish({{"c", c}, {"mean_exp_cB", moment.mean()}, {"se_exp_cB", moment.stderr_mean()}, {"target", b},
            {"mean_zeta", zeta.mean()}, {"p_no_jump", static_cast<double>(no_jump) / static_cast<double>(n_paths)},
            {"p_no_jump_exact", std::exp(-1.0 / b)}, {"max_identity_error", worst}});
    return;
  }
  throw UsageError("csbp needs a subcommand: z, lamperti, cmj, moments or extinction");
}

/// Exact E[nu_n(l)] by enumeration.
inline void cmd_oracle(const RunConfig& cfg, std::ostream& out) {
  detail::check_format(cfg);
  const double p = detail::require(cfg.p, "p");
  const std::uint64_t n = detail::require(cfg.n, "n");
  oracle::ExactExpectation e;
  try {
    e = oracle::enumerate_exact(p, cfg.alpha.value_or(0.0), n);
  } catch (const std::logic_error& err) {
    throw UsageError(err.what());
  }
  if (cfg.format == "csv") {
    detail::csv_preamble(out, cfg, "ell,expected_nu");
    for (const auto& [ell, v] : e.expected_nu) out << ell << ',' << detail::num(v) << '\n';
    return;
  }
  json j = detail::header(cfg);
  j["path_count"] = e.path_count;
  j["total_probability"] = static_cast<double>(e.total_probability);
  json rows = json::array();
  for (const auto& [ell, v] : e.expected_nu) rows.push_back({{"ell", ell}, {"expected_nu", static_cast<double>(v)}});
  j["expected_nu"] = rows;
  out << j.dump(2) << '\n';
}

/// The simulate configuration used by the determinism criterion.
inline std::string determinism_probe(std::uint64_t seed, unsigned threads) {
  RunConfig cfg;
  cfg.command = "simulate";
  cfg.p = 0.5;
  cfg.alpha = 1.0;
  cfg.n = 100000;
  cfg.replicates = 20;
  cfg.seed = seed;
  cfg.threads = threads;
  std::ostringstream os;
  cmd_simulate(cfg, os);
  cfg.format = "json";
  cmd_simulate(cfg, os);
  return os.str();
}

/// Runs the acceptance criteria. Returns false if any selected criterion failed.
inline bool cmd_validate(const RunConfig& cfg, std::ostream& out) {
  detail::check_format(cfg);
  acceptance::Context ctx;
  ctx.seed = cfg.seed == 0 ? acceptance::kDefaultSeed : cfg.seed;
  ctx.threads = cfg.threads;
  ctx.simulate_bytes = [seed = ctx.seed](unsigned threads) { return determinism_probe(seed, threads); };
  if (cfg.format == "csv") {
    out << "# " << detail::header(cfg).dump() << "\nid,name,pass,seconds,summary\n";
  }
  json all = json::array();
  const auto results = acceptance::run_all(ctx, cfg.only, [&](const acceptance::CriterionResult& r) {
    if (cfg.format == "csv") {
      out << r.id << ",\"" << r.name << "\"," << (r.passed ? "pass" : "fail") << ',' << detail::num(r.seconds)
          << ",\"" << r.summary << "\"\n"
          << std::flush;
    }
  });
  bool ok = true;
  for (const auto& r : results) {
    ok = ok && r.passed;
    all.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.passed}, {"seconds", r.seconds},
                   {"summary", r.summary}, {"metrics", r.metrics}});
  }
  if (cfg.format == "json") {
    json j = detail::header(cfg);
    j["seed"] = ctx.seed;
    j["criteria"] = all;
    j["all_passed"] = ok;
    out << j.dump(2) << '\n';
  }
  return ok;
}

// ----------------------------------------------------------------------------

/// Parses argv-style arguments and runs the command. Exit codes: 0 ok,
/// 1 failed acceptance criterion, 2 usage error.
inline int main_entry(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Power-weighted Simon model and branching-process toolkit", "ysm"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Key-value config file; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);

  auto common = [&](CLI::App* sub) {
    sub->fallthrough();
    sub->configurable();
  };
  app.add_option("--p", cfg.p, "Innovation probability in (0,1)");
  app.add_option("--alpha", cfg.alpha, "Copy-weight exponent (>= 0)");
  app.add_option("--n", cfg.n, "String length");
  app.add_option("--b", cfg.b, "Drift coefficient of the branching process");
  app.add_option("--t", cfg.t, "Time horizon");
  app.add_option("--replicates", cfg.replicates, "Independent strings");
  app.add_option("--samples", cfg.samples, "Monte Carlo draws / paths");
  app.add_option("--seed", cfg.seed, "Master seed");
  app.add_option("--threads", cfg.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--output,-o", cfg.output, "Output file ('-' for stdout)");
  app.add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--event-cap", cfg.event_cap, "Per-path event cap");
  app.add_option("--tags", cfg.tags, "Tagged birth fractions u in (0,1)")->delimiter(',');
  app.add_option("--grid", cfg.grid, "Sorted observation times in (0,1]")->delimiter(',');
  app.add_option("--route", cfg.route, "model, csbp or both");
  app.add_option("--ell-max", cfg.ell_max, "Highest moment order");
  app.add_flag("--with-constant", cfg.with_constant, "Also estimate the tail constant C");
  app.add_option("--horizon", cfg.horizon, "Horizon T for the C estimate (default 20/(1-b))");
  app.add_option("--z-stop", cfg.z_stop, "Level at which C paths stop early");
  app.add_option("--k-min-quantile", cfg.k_min_quantile, "Tail fit lower cutoff quantile");
  app.add_option("--min-tail-count", cfg.min_tail_count, "Tail fit minimum tail samples");
  app.add_option("--hill-fraction", cfg.hill_fraction, "Hill estimator tail fraction");
  app.add_option("--input", cfg.input, "Samples file for tailfit (one integer per line)");
  app.add_option("--samples-out", cfg.samples_out, "Write the raw samples used by tailfit");
  app.add_option("--only", cfg.only, "Criterion ids to run (validate)")->delimiter(',');

  common(app.add_subcommand("simulate", "Grow strings and emit the occurrence histogram or tagged trajectories"));
  common(app.add_subcommand("phi", "Estimate the limit pmf by the model and/or branching route"));
  common(app.add_subcommand("tailfit", "Fit the power tail of B at an exponential time"));
  common(app.add_subcommand("oracle", "Exact expected histogram by enumeration (n <= 12)"));
  common(app.add_subcommand("validate", "Run the acceptance criteria"));
  auto* csbp = app.add_subcommand("csbp", "Branching-process simulators");
  common(csbp);
  csbp->require_subcommand(1);
  for (const char* name : {"z", "lamperti", "cmj", "moments", "extinction"}) common(csbp->add_subcommand(name));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  }

  for (auto* sub : app.get_subcommands()) {
    cfg.command = sub->get_name();
    for (auto* inner : sub->get_subcommands()) cfg.subcommand = inner->get_name();
  }

  try {
    std::ofstream file;
    std::ostream* sink = &out;
    if (cfg.output != "-") {
      file.open(cfg.output, std::ios::binary);
      if (!file) throw UsageError("cannot open output file " + cfg.output);
      sink = &file;
    }
    if (cfg.command == "simulate") cmd_simulate(cfg, *sink);
    else if (cfg.command == "phi") cmd_phi(cfg, *sink);
    else if (cfg.command == "tailfit") cmd_tailfit(cfg, *sink);
    else if (cfg.command == "csbp") cmd_csbp(cfg, *sink);
    else if (cfg.command == "oracle") cmd_oracle(cfg, *sink);
    else if (cfg.command == "validate") return cmd_validate(cfg, *sink) ? kExitOk : kExitCriterionFailure;
    return kExitOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InsufficientTailMass& e) {
    err << "error: " << e.what() << '\n';
    return kExitCriterionFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitCriterionFailure;
  }
}

}  // namespace ysm::cli
