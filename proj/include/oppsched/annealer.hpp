#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "oppsched/channel.hpp"
#include "oppsched/energy.hpp"
#include "oppsched/fsmc.hpp"
#include "oppsched/rng.hpp"

namespace oppsched {

// Fast-annealing cooling schedule T_b = T0 / (c_sa b + 1). Unset knobs are
// calibrated from a pilot batch: T0 accepts at least `first_step_accept` of
// worsening moves at step 0, c_sa brings the final step's acceptance below
// `last_step_accept`.
struct AnnealSchedule {
  std::optional<double> t0;
  std::optional<double> c_sa;
  int temp_steps = 100;
  int configs_per_temp = 0;  // 0: use 50 * (M + 1)
  double t_min = 0.0;
  int calibration_samples = 64;
  double first_step_accept = 0.80;
  double last_step_accept = 0.01;

  void validate() const {
    if (temp_steps < 1) throw std::invalid_argument("temp_steps must be >= 1");
    if (configs_per_temp < 0)
      throw std::invalid_argument("configs_per_temp must be >= 0");
    if (t0 && !(*t0 > 0.0)) throw std::invalid_argument("t0 must be positive");
    if (c_sa && !(*c_sa > 0.0))
      throw std::invalid_argument("c_sa must be positive");
  }
};

inline double fa_temperature(double t0, double c_sa, int b) {
  return t0 / (c_sa * b + 1.0);
}

// One candidate: each row is a uniform point on the probability simplex of
// dimension min(p,B)+2 (normalized unit exponentials), with the final
// coordinate taken as the no-schedule mass and dropped from the row.
inline std::vector<std::vector<double>> random_candidate(const QosSpec& spec,
                                                         Rng& rng) {
  std::vector<std::vector<double>> rows(spec.states());
  for (int p = 0; p < spec.states(); ++p) {
    const int mu = std::min(p, spec.buffer);
    std::vector<double> g(mu + 2);
    double sum = 0.0;
    for (double& v : g) {
      v = rng.exponential();
      sum += v;
    }
    rows[p].resize(mu + 1);
    if (sum <= 0.0) continue;  // all-zero row: never schedules
    for (int qi = 0; qi <= mu; ++qi) rows[p][qi] = g[qi] / sum;
  }
  return rows;
}

inline bool metropolis_accept(double e_new, double e_cur, double temperature,
                              double r) {
  if (e_new <= e_cur) return true;
  if (!(temperature > 0.0)) return false;
  return r < std::exp(-(e_new - e_cur) / temperature);
}

struct OptimizationResult {
  bool feasible = false;
  Policy best_policy;
  ChainSolution solution;
  double ebn0 = kInf;
  double ebn0_db = kInf;
  long evaluations = 0;    // energy evaluations
  long candidates = 0;     // candidates generated (pilot included)
  long gate_passed = 0;    // candidates that met the constraints
  std::uint64_t seed = 0;
  double t0_used = 0.0;
  double c_sa_used = 0.0;
};

namespace detail {

struct CandidateOutcome {
  bool feasible = false;
  ChainSolution solution;
  double energy = kInf;
};

// Constraint gate and objective for one candidate. The drop-rate bound uses
// a 1e-12 slack so that policies sitting exactly on the target pass.
inline CandidateOutcome assess_candidate(std::vector<std::vector<double>> rows,
                                         const QosSpec& spec,
                                         const SystemConfig& system,
                                         const EnergyOptions& opts,
                                         Policy* policy_out) {
  CandidateOutcome out;
  Policy policy;
  try {
    policy = build_policy(std::move(rows), spec);
    out.solution = solve_chain(policy);
  } catch (const ReducibleChainError&) {
    return out;
  }
  if (out.solution.theta_r > spec.theta_tar + kProbSlack) return out;
  if (spec.epsilon && out.solution.gamma > *spec.epsilon + kProbSlack)
    return out;
  out.feasible = true;
  try {
    const EnergyReport rep =
        evaluate_policy_energy(policy, out.solution, system, opts);
    out.energy = rep.ebn0_cst;
  } catch (const UndefinedDistributionError&) {
    out.energy = kInf;
  }
  if (policy_out) *policy_out = std::move(policy);
  return out;
}

inline double acceptance_at(const std::vector<double>& deltas, double t) {
  double acc = 0.0;
  for (double d : deltas) acc += std::exp(-d / t);
  return acc / double(deltas.size());
}

// Smallest temperature whose mean worsening-move acceptance reaches `target`.
inline double temperature_for_acceptance(const std::vector<double>& deltas,
                                         double target) {
  double lo = 1e-12, hi = 1e12;
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (acceptance_at(deltas, mid) >= target)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace detail

// Constrained stochastic search over transition matrices: at each of
// temp_steps temperatures, configs_per_temp independent candidates are drawn;
// candidates passing the constraint gate have their energy evaluated and
// replace the current solution under the Metropolis rule (the muting step).
// The best feasible finite-energy candidate ever seen is returned; a run in
// which no candidate passes with finite energy reports feasible = false.
inline OptimizationResult anneal(const QosSpec& spec,
                                 const SystemConfig& system,
                                 AnnealSchedule schedule, Rng& rng,
                                 const EnergyOptions& opts = {}) {
  spec.validate();
  system.validate();
  schedule.validate();
  const int n_per_temp = schedule.configs_per_temp > 0
                             ? schedule.configs_per_temp
                             : 50 * spec.states();

  OptimizationResult result;
  result.seed = rng.root_seed();
  double e_best = kInf;

  auto consider_best = [&](const detail::CandidateOutcome& out,
                           Policy&& policy) {
    if (out.energy < e_best) {
      e_best = out.energy;
      result.feasible = true;
      result.best_policy = std::move(policy);
      result.solution = out.solution;
      result.ebn0 = out.energy;
      result.ebn0_db = to_db(out.energy);
    }
  };

  // Pilot batch: calibrates unset temperature knobs from the spread of
  // feasible energies. Pilot candidates count toward the final result.
  if (!schedule.t0 || !schedule.c_sa) {
    std::vector<double> energies;
    const int want = std::max(8, schedule.calibration_samples);
    const long max_draws = 40L * want;
    for (long i = 0; i < max_draws &&
                     static_cast<int>(energies.size()) < want;
         ++i) {
      Policy policy;
      auto out = detail::assess_candidate(random_candidate(spec, rng), spec,
                                          system, opts, &policy);
      ++result.candidates;
      if (!out.feasible) continue;
      ++result.gate_passed;
      ++result.evaluations;
      if (std::isfinite(out.energy)) energies.push_back(out.energy);
      consider_best(out, std::move(policy));
    }
    std::vector<double> deltas;
    for (std::size_t i = 1; i < energies.size(); ++i) {
      const double d = energies[i] - energies[i - 1];
      if (d > 0.0) deltas.push_back(d);
    }
    if (deltas.empty()) {
      if (!schedule.t0) schedule.t0 = 1.0;
      if (!schedule.c_sa) schedule.c_sa = 0.5;
    } else {
      if (!schedule.t0)
        schedule.t0 = detail::temperature_for_acceptance(
            deltas, schedule.first_step_accept);
      if (!schedule.c_sa) {
        const double t_last = detail::temperature_for_acceptance(
            deltas, schedule.last_step_accept);
        const int steps = std::max(schedule.temp_steps - 1, 1);
        schedule.c_sa = std::max((*schedule.t0 / t_last - 1.0) / steps, 1e-6);
      }
    }
  }
  result.t0_used = *schedule.t0;
  result.c_sa_used = *schedule.c_sa;

  double e_cur = kInf;
  for (int b = 0; b < schedule.temp_steps; ++b) {
    const double t = fa_temperature(*schedule.t0, *schedule.c_sa, b);
    if (t < schedule.t_min) break;
    for (int i = 0; i < n_per_temp; ++i) {
      Policy policy;
      auto out = detail::assess_candidate(random_candidate(spec, rng), spec,
                                          system, opts, &policy);
      ++result.candidates;
      if (!out.feasible) continue;
      ++result.gate_passed;
      ++result.evaluations;
      const double r = rng.uniform01();
      if (metropolis_accept(out.energy, e_cur, t, r)) e_cur = out.energy;
      consider_best(out, std::move(policy));
    }
  }
  return result;
}

// Optimizes without the CCON-violation bound; the gamma of the best solution
// is the largest epsilon worth imposing for these (B, N, theta_tar, nu_d).
inline std::pair<double, OptimizationResult> gamma_max(
    const QosSpec& spec, const SystemConfig& system,
    const AnnealSchedule& schedule, Rng& rng, const EnergyOptions& opts = {}) {
  QosSpec relaxed = spec;
  relaxed.epsilon.reset();
  OptimizationResult res = anneal(relaxed, system, schedule, rng, opts);
  const double gm =
      res.feasible ? res.solution.gamma : std::numeric_limits<double>::quiet_NaN();
  return {gm, std::move(res)};
}

struct BufferSearchResult {
  bool found = false;
  int b_star = -1;
  double baseline_db = kInf;
  struct Entry {
    int buffer;
    OptimizationResult result;
  };
  std::vector<Entry> table;
};

// Minimum buffer size whose constrained optimum improves on the smallest
// candidate buffer by at least delta_e_db. Each buffer size runs on its own
// child stream so results do not depend on the order of evaluation.
inline BufferSearchResult buffer_search(const QosSpec& spec,
                                        const SystemConfig& system,
                                        const std::vector<int>& psi,
                                        double delta_e_db,
                                        std::optional<double> epsilon,
                                        const AnnealSchedule& schedule,
                                        Rng& rng,
                                        const EnergyOptions& opts = {}) {
  if (psi.empty()) throw std::invalid_argument("buffer candidate set is empty");
  if (!std::is_sorted(psi.begin(), psi.end()))
    throw std::invalid_argument("buffer candidate set must be ascending");

  BufferSearchResult search;
  for (int b : psi) {
    QosSpec s = spec;
    s.buffer = b;
    s.epsilon = epsilon;
    Rng child = rng.split(static_cast<std::uint64_t>(b));
    search.table.push_back({b, anneal(s, system, schedule, child, opts)});
  }
  const OptimizationResult& base = search.table.front().result;
  if (!base.feasible) return search;
  search.baseline_db = base.ebn0_db;
  for (const auto& entry : search.table) {
    if (!entry.result.feasible) continue;
    if (search.baseline_db - entry.result.ebn0_db >= delta_e_db - 1e-12) {
      search.found = true;
      search.b_star = entry.buffer;
      break;
    }
  }
  return search;
}

// Empirical lower end of the usable epsilon range: geometric bisection for
// the smallest epsilon at which the constrained search still finds a
// feasible policy. Returns NaN when even the relaxed problem is infeasible.
inline double estimate_gamma_min(const QosSpec& spec,
                                 const SystemConfig& system,
                                 const AnnealSchedule& schedule, Rng& rng,
                                 int iterations = 8,
                                 const EnergyOptions& opts = {}) {
  Rng probe_rng = rng.split(0);
  auto [gm, base] = gamma_max(spec, system, schedule, probe_rng, opts);
  if (!base.feasible) return std::numeric_limits<double>::quiet_NaN();
  if (!(gm > 0.0)) return 0.0;

  auto feasible_at = [&](double eps, int tag) {
    QosSpec s = spec;
    s.epsilon = eps;
    Rng child = rng.split(1 + tag);
    return anneal(s, system, schedule, child, opts).feasible;
  };

  double hi = gm, lo = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double mid = lo > 0.0 ? std::sqrt(lo * hi) : hi / 8.0;
    if (feasible_at(mid, it))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace oppsched
