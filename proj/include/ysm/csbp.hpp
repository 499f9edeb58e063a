#pragma once

// The branching process Z with generator  -b x f'(x) + x (f(x+1) - f(x)),  Z(0) = 1:
// deterministic decay at rate b x between unit jumps arriving at rate x.
// Everything here is simulated exactly (event-driven), never time-discretized.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "ysm/rng.hpp"

namespace ysm {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr std::uint64_t kDefaultEventCap = 100'000'000;

enum class Criticality { supercritical, critical, subcritical };

struct CsbpParams {
  double b = 0.0;

  void validate() const {
    if (!(b >= 0.0) || !std::isfinite(b)) throw std::invalid_argument("CsbpParams: b must be a finite nonnegative real");
  }
  Criticality criticality() const noexcept {
    if (b < 1.0) return Criticality::supercritical;
    if (b > 1.0) return Criticality::subcritical;
    return Criticality::critical;
  }
};

namespace detail {

/// Waiting time to the next jump from level z, given the Exp(1) variate e that is
/// compared against the integrated jump intensity  int_0^d z e^{-b s} ds.
/// Empty when the remaining total intensity z/b is below e (no jump ever again).
inline std::optional<double> jump_delay(double z, double b, double e) {
  if (b == 0.0) return e / z;
  const double r = b * e / z;
  if (r >= 1.0) return std::nullopt;
  return -std::log1p(-r) / b;
}

/// int_0^d z e^{-b s} ds, with the b = 0 limit.
inline double decay_integral(double z, double b, double d) {
  if (b == 0.0) return z * d;
  if (d == kInfinity) return z / b;
  return -z * std::expm1(-b * d) / b;
}

inline void check_time(double t, double horizon, const char* what) {
  if (!(t >= 0.0)) throw std::invalid_argument(std::string(what) + ": time must be nonnegative");
  if (t > horizon)
    throw std::out_of_range(std::string(what) + ": time " + std::to_string(t) + " beyond simulated horizon " +
                            std::to_string(horizon));
}

}  // namespace detail

/// A realized trajectory of Z. Index 0 is the conventional first birth at t = 0 with Z = 1.
struct CsbpPath {
  double b = 0.0;
  std::vector<double> jump_times{0.0};
  std::vector<double> values_after_jump{1.0};
  double horizon = 0.0;    ///< path is known on [0, horizon]; infinity once no jump can follow
  bool extinct = false;    ///< no further jump after the last one (Z decays to 0)
  bool truncated = false;  ///< event cap hit; horizon is then the last jump time

  std::size_t jumps() const noexcept { return jump_times.size() - 1; }

  /// Index of the last jump at or before t.
  std::size_t segment(double t) const {
    const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
    return static_cast<std::size_t>(it - jump_times.begin()) - 1;
  }

  double z(double t) const {
    detail::check_time(t, horizon, "CsbpPath::z");
    if (t == kInfinity) return b > 0.0 ? 0.0 : kInfinity;
    const std::size_t i = segment(t);
    return values_after_jump[i] * std::exp(-b * (t - jump_times[i]));
  }
};

/// Exact event-driven simulation on [0, t_max]. t_max = infinity is allowed only for b > 1,
/// where the path stops jumping almost surely.
template <class Gen>
CsbpPath simulate_z(double b, double t_max, Gen& rng, std::uint64_t event_cap = kDefaultEventCap) {
  CsbpParams{b}.validate();
  if (!(t_max >= 0.0)) throw std::invalid_argument("simulate_z: t_max must be nonnegative");
  if (t_max == kInfinity && b <= 1.0)
    throw std::invalid_argument("simulate_z: an infinite horizon needs b > 1 (otherwise the path may never stop)");

  CsbpPath path;
  path.b = b;
  double t = 0.0, z = 1.0;
  for (;;) {
    const double e = rng.exponential();
    const auto delay = detail::jump_delay(z, b, e);
    if (!delay) {
      path.extinct = true;
      path.horizon = kInfinity;
      return path;
    }
    if (t + *delay > t_max) {
      path.horizon = t_max;
      return path;
    }
    if (path.jumps() >= event_cap) {
      path.truncated = true;
      path.horizon = t;
      return path;
    }
    t += *delay;
    z = (b == 0.0 ? z : z - b * e) + 1.0;  // z e^{-b delay} = z - b e exactly
    path.jump_times.push_back(t);
    path.values_after_jump.push_back(z);
  }
}

/// B(t) = 1 + number of jumps in (0, t].
inline std::uint64_t count_births(const CsbpPath& path, double t) {
  detail::check_time(t, path.horizon, "count_births");
  return static_cast<std::uint64_t>(path.segment(t)) + 1;
}

/// int_0^t Z(s) ds by the per-segment closed form.
inline double integrated_z(const CsbpPath& path, double t) {
  detail::check_time(t, path.horizon, "integrated_z");
  const std::size_t last = t == kInfinity ? path.jumps() : path.segment(t);
  double total = 0.0;
  for (std::size_t i = 0; i < last; ++i)
    total += detail::decay_integral(path.values_after_jump[i], path.b, path.jump_times[i + 1] - path.jump_times[i]);
  const double tail = t == kInfinity ? kInfinity : t - path.jump_times[last];
  total += detail::decay_integral(path.values_after_jump[last], path.b, tail);
  return total;
}

/// W_t = e^{-(1-b) t} Z(t).
inline double martingale_value(const CsbpPath& path, double t) {
  return std::exp(-(1.0 - path.b) * t) * path.z(t);
}

/// Streaming form of simulate_z for callers that only need (Z, B) at a time,
/// without storing jump times.
struct ZState {
  double t = 0.0;
  double z = 1.0;
  std::uint64_t births = 1;
  bool extinct = false;
  bool truncated = false;
  bool stopped_on_level = false;  ///< advance() returned because z reached z_stop
};

/// Moves `s` forward to time t_end, or earlier to the first jump taking Z to z_stop or above.
/// At t_end the state holds Z(t_end) (decayed), so B(t_end) = s.births.
template <class Gen>
void advance(ZState& s, double b, double t_end, Gen& rng, std::uint64_t event_cap = kDefaultEventCap,
             double z_stop = kInfinity) {
  std::uint64_t events = 0;
  while (!s.extinct) {
    const double e = rng.exponential();
    const auto delay = detail::jump_delay(s.z, b, e);
    if (!delay) {
      s.extinct = true;
      break;
    }
    if (s.t + *delay > t_end) break;
    if (events >= event_cap) {
      s.truncated = true;
      return;
    }
    ++events;
    s.t += *delay;
    s.z = (b == 0.0 ? s.z : s.z - b * e) + 1.0;
    ++s.births;
    if (s.z >= z_stop) {
      s.stopped_on_level = true;
      return;
    }
  }
  if (t_end == kInfinity) {
    s.z = b > 0.0 ? 0.0 : s.z;
  } else {
    s.z *= std::exp(-b * (t_end - s.t));
  }
  s.t = t_end;
}

// ----------------------------------------------------------------------------
// Lamperti construction: xi_s = eta_s - b s with eta a rate-1 Poisson process from 1.

struct LampertiHorizon {
  double xi_time = kInfinity;     ///< stop once the Levy path is known up to this xi-time
  double clock_time = kInfinity;  ///< stop once int ds/xi_s reaches this (i.e. Z known up to it)
};

struct LampertiPath {
  double b = 0.0;
  std::vector<double> arrivals;  ///< jump times of eta (eta = 1 + i after i arrivals)
  std::vector<double> clock;     ///< int_0^{arrivals[i]} ds / xi_s
  double zeta = kInfinity;       ///< first hitting time of 0 by xi (infinity if not within extent)
  double xi_extent = 0.0;        ///< xi known on [0, xi_extent]
  double clock_extent = 0.0;     ///< T known on [0, clock_extent]; infinity when zeta is finite
  bool truncated = false;

  double eta(double s) const {
    return 1.0 + static_cast<double>(std::upper_bound(arrivals.begin(), arrivals.end(), s) - arrivals.begin());
  }
  double xi(double s) const {
    if (s > xi_extent) throw std::out_of_range("LampertiPath::xi: beyond simulated extent");
    return eta(s) - b * s;
  }

  /// Inverse of s -> int_0^s dr / xi_r, closed form on each linear segment.
  double time_change(double t) const {
    const auto [i, start, xi_start] = locate(t);
    if (b == 0.0) return start + xi_start * (t - clock_at(i));
    return start + xi_start * -std::expm1(-b * (t - clock_at(i))) / b;
  }

  /// xi_{T(t)}: a version of Z(t).
  double z(double t) const {
    const auto [i, start, xi_start] = locate(t);
    (void)start;
    return xi_start * std::exp(-b * (t - clock_at(i)));
  }

  /// eta_{T(t)}: a version of the birth count B(t).
  std::uint64_t births(double t) const {
    const auto loc = locate(t);
    return static_cast<std::uint64_t>(loc.segment) + 1;
  }

 private:
  struct Location {
    std::size_t segment;
    double start;     // xi-time where the segment starts
    double xi_start;  // xi right after the segment's opening jump
  };

  double clock_at(std::size_t i) const { return i == 0 ? 0.0 : clock[i - 1]; }

  Location locate(double t) const {
    if (!(t >= 0.0)) throw std::invalid_argument("LampertiPath: time must be nonnegative");
    if (t > clock_extent) throw std::out_of_range("LampertiPath: time beyond simulated clock extent");
    const auto i = static_cast<std::size_t>(std::upper_bound(clock.begin(), clock.end(), t) - clock.begin());
    const double start = i == 0 ? 0.0 : arrivals[i - 1];
    return {i, start, static_cast<double>(i + 1) - b * start};
  }
};

/// Rate-1 Poisson arrivals, scanned segment by segment for the first zero of xi.
/// Without a finite horizon the scan must end at zeta, which needs b > 1.
template <class Gen>
LampertiPath simulate_lamperti(double b, Gen& rng, LampertiHorizon horizon = {},
                               std::uint64_t event_cap = kDefaultEventCap) {
  CsbpParams{b}.validate();
  if (horizon.xi_time == kInfinity && horizon.clock_time == kInfinity && b <= 1.0)
    throw std::invalid_argument("simulate_lamperti: b <= 1 needs a finite xi-time or clock horizon");

  LampertiPath path;
  path.b = b;
  double start = 0.0, clock = 0.0;
  for (std::size_t i = 0;; ++i) {
    const double level = static_cast<double>(i + 1);  // eta on this segment
    const double xi_start = level - b * start;
    const double next = start + rng.exponential();
    const double hit = b > 0.0 ? level / b : kInfinity;

    // Clock needed to reach min(next, hit, xi horizon) on this segment.
    const double seg_end = std::min({next, hit, horizon.xi_time});
    const double seg_clock = b == 0.0 ? (seg_end - start) / level
                                      : (seg_end == hit ? kInfinity
                                                        : -std::log1p(-b * (seg_end - start) / xi_start) / b);
    if (clock + seg_clock >= horizon.clock_time) {
      const double dt = horizon.clock_time - clock;
      if (hit <= std::min(next, horizon.xi_time)) path.zeta = hit;
      path.clock_extent = horizon.clock_time;
      path.xi_extent = start + (b == 0.0 ? xi_start * dt : xi_start * -std::expm1(-b * dt) / b);
      return path;
    }
    if (hit <= std::min(next, horizon.xi_time)) {
      path.zeta = hit;
      path.xi_extent = hit;
      path.clock_extent = kInfinity;
      return path;
    }
    if (horizon.xi_time < next) {
      path.xi_extent = horizon.xi_time;
      path.clock_extent = clock + seg_clock;
      return path;
    }
    if (path.arrivals.size() >= event_cap) {
      path.truncated = true;
      path.xi_extent = start;
      path.clock_extent = clock;
      return path;
    }
    clock += seg_clock;
    path.arrivals.push_back(next);
    path.clock.push_back(clock);
    start = next;
  }
}

/// The Z path carried by a Lamperti path: jumps at clock[i] with value xi(arrivals[i]).
inline CsbpPath to_csbp_path(const LampertiPath& lp) {
  CsbpPath path;
  path.b = lp.b;
  for (std::size_t i = 0; i < lp.arrivals.size(); ++i) {
    path.jump_times.push_back(lp.clock[i]);
    path.values_after_jump.push_back(static_cast<double>(i + 2) - lp.b * lp.arrivals[i]);
  }
  path.horizon = lp.clock_extent;
  path.extinct = lp.zeta != kInfinity;
  path.truncated = lp.truncated;
  return path;
}

// ----------------------------------------------------------------------------
// Crump-Mode-Jagers population: each individual born at s begets children at ages
// given by a Poisson point process with intensity e^{-b a} da.

struct CmjPopulation {
  double b = 0.0;
  double horizon = 0.0;
  std::vector<double> birth_times;  ///< sorted; ancestor at 0
  bool truncated = false;

  std::uint64_t births(double t) const {
    detail::check_time(t, horizon, "CmjPopulation::births");
    return static_cast<std::uint64_t>(std::upper_bound(birth_times.begin(), birth_times.end(), t) -
                                      birth_times.begin());
  }
};

template <class Gen>
CmjPopulation simulate_cmj(double b, double t_max, Gen& rng, std::uint64_t event_cap = kDefaultEventCap) {
  CsbpParams{b}.validate();
  if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw std::invalid_argument("simulate_cmj: t_max must be finite");

  CmjPopulation pop;
  pop.b = b;
  pop.horizon = t_max;
  std::priority_queue<double, std::vector<double>, std::greater<>> pending;
  pending.push(0.0);
  while (!pending.empty()) {
    const double s = pending.top();
    pending.pop();
    pop.birth_times.push_back(s);
    // Offspring ages: Poisson arrivals in the integrated intensity L(a) = (1 - e^{-b a}) / b.
    const double mass = detail::decay_integral(1.0, b, t_max - s);
    for (double level = rng.exponential(); level < mass; level += rng.exponential()) {
      if (pop.birth_times.size() + pending.size() >= event_cap) {
        // Births before s are complete; later ones are not.
        pop.truncated = true;
        pop.horizon = s;
        std::sort(pop.birth_times.begin(), pop.birth_times.end());
        return pop;
      }
      const double age = b == 0.0 ? level : -std::log1p(-b * level) / b;
      pending.push(s + age);
    }
  }
  std::sort(pop.birth_times.begin(), pop.birth_times.end());
  return pop;
}

// ----------------------------------------------------------------------------
// Moments m_l(t) = E[Z(t)^l] from the forward equation
//   m_l' = l (1-b) m_l + sum_{j=0}^{l-2} C(l,j) m_{j+1},   m_l(0) = 1.

namespace detail {

inline void moment_rhs(double b, const std::vector<std::vector<double>>& binom, const std::vector<double>& m,
                       std::vector<double>& out) {
  const std::size_t L = m.size();
  for (std::size_t l = 1; l <= L; ++l) {
    double d = static_cast<double>(l) * (1.0 - b) * m[l - 1];
    for (std::size_t j = 0; j + 2 <= l; ++j) d += binom[l][j] * m[j];
    out[l - 1] = d;
  }
}

inline std::vector<double> moment_rk4(double b, std::size_t ell_max, double t, std::size_t steps) {
  std::vector<std::vector<double>> binom(ell_max + 1);
  for (std::size_t l = 0; l <= ell_max; ++l) {
    binom[l].assign(l + 1, 1.0);
    for (std::size_t j = 1; j < l; ++j) binom[l][j] = binom[l - 1][j - 1] + binom[l - 1][j];
  }
  std::vector<double> m(ell_max, 1.0), k1(ell_max), k2(ell_max), k3(ell_max), k4(ell_max), tmp(ell_max);
  const double h = t / static_cast<double>(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    moment_rhs(b, binom, m, k1);
    for (std::size_t i = 0; i < ell_max; ++i) tmp[i] = m[i] + 0.5 * h * k1[i];
    moment_rhs(b, binom, tmp, k2);
    for (std::size_t i = 0; i < ell_max; ++i) tmp[i] = m[i] + 0.5 * h * k2[i];
    moment_rhs(b, binom, tmp, k3);
    for (std::size_t i = 0; i < ell_max; ++i) tmp[i] = m[i] + h * k3[i];
    moment_rhs(b, binom, tmp, k4);
    for (std::size_t i = 0; i < ell_max; ++i) m[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return m;
}

}  // namespace detail

struct MomentSolution {
  std::vector<double> moments;  ///< moments[l-1] = E[Z(t)^l]
  std::size_t steps = 0;        ///< RK4 steps of the accepted solution
  double halving_change = 0.0;  ///< max relative change against the solution with half as many steps
};

/// Fixed-step RK4, doubling the step count until halving the step changes every
/// moment by less than `rel_tol` relatively.
inline MomentSolution solve_moments(double b, std::size_t ell_max, double t, double rel_tol = 1e-9) {
  CsbpParams{b}.validate();
  if (ell_max < 1) throw std::invalid_argument("moment_ode: ell_max must be >= 1");
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("moment_ode: t must be finite and >= 0");
  if (t == 0.0) return {std::vector<double>(ell_max, 1.0), 0, 0.0};

  std::size_t steps = std::max<std::size_t>(16, static_cast<std::size_t>(std::ceil(t * 16.0)));
  auto coarse = detail::moment_rk4(b, ell_max, t, steps);
  for (int round = 0; round < 24; ++round) {
    auto fine = detail::moment_rk4(b, ell_max, t, 2 * steps);
    double change = 0.0;
    for (std::size_t i = 0; i < ell_max; ++i)
      change = std::max(change, std::abs(fine[i] - coarse[i]) / std::abs(fine[i]));
    steps *= 2;
    if (change < rel_tol) return {std::move(fine), steps, change};
    coarse = std::move(fine);
  }
  throw std::runtime_error("moment_ode: step refinement did not converge");
}

inline std::vector<double> moment_ode(double b, std::size_t ell_max, double t) {
  return solve_moments(b, ell_max, t).moments;
}

// ----------------------------------------------------------------------------

struct ExtinctionStats {
  double zeta = 0.0;            ///< int_0^inf Z(s) ds (equals the Lamperti hitting time)
  std::uint64_t births = 1;     ///< B(inf) = 1 + total jumps
  double identity_error = 0.0;  ///< |B(inf) - b * zeta|
  bool truncated = false;
};

/// Runs Z to extinction (b > 1) and checks B(inf) = b int Z pathwise.
template <class Gen>
ExtinctionStats extinction_stats(double b, Gen& rng, std::uint64_t event_cap = kDefaultEventCap) {
  if (!(b > 1.0)) throw std::invalid_argument("extinction_stats: needs a subcritical drift b > 1");
  const CsbpPath path = simulate_z(b, kInfinity, rng, event_cap);
  ExtinctionStats s;
  s.births = path.jumps() + 1;
  s.truncated = path.truncated;
  if (path.truncated) return s;
  s.zeta = integrated_z(path, kInfinity);
  s.identity_error = std::abs(static_cast<double>(s.births) - b * s.zeta);
  if (s.identity_error > 1e-9)
    throw std::logic_error("extinction_stats: B(inf) != b * int Z, error " + std::to_string(s.identity_error));
  return s;
}

}  // namespace ysm
