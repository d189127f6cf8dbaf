#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "oppsched/linalg.hpp"

namespace oppsched {

inline constexpr double kProbSlack = 1e-12;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct ReducibleChainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scheduler design parameters. States are p = i + j with i buffered packets
// (i <= B) and j successive drops (j <= N), so the chain has B + N + 1 states.
// An empty ccon_distribution means every user shares the same N; otherwise
// zeta[a-1] is the fraction of users with CCON parameter a, for a = 1..N.
struct QosSpec {
  int buffer = 0;  // B
  int ccon = 1;    // N (the max over the population in the heterogeneous case)
  std::vector<double> ccon_distribution;  // zeta, possibly empty
  double theta_tar = 0.3;
  std::optional<double> epsilon;  // nullopt: C5 not applied
  double nu_d = 0.02;

  int chain_top() const { return buffer + ccon; }   // M
  int states() const { return chain_top() + 1; }    // M + 1
  double nu_s() const { return 1.0 - nu_d; }
  bool heterogeneous() const { return !ccon_distribution.empty(); }

  void validate() const {
    if (buffer < 0) throw std::invalid_argument("buffer must be nonnegative");
    if (ccon < 1) throw std::invalid_argument("ccon must be positive");
    if (!(theta_tar >= 0.0 && theta_tar <= 1.0))
      throw std::invalid_argument("theta_tar must lie in [0, 1]");
    if (!(nu_d >= 0.0 && nu_d < 1.0))
      throw std::invalid_argument("nu_d must lie in [0, 1)");
    if (epsilon) {
      if (!(*epsilon >= 0.0 && *epsilon <= theta_tar + kProbSlack))
        throw std::invalid_argument("epsilon must lie in [0, theta_tar]");
    }
    if (heterogeneous()) {
      if (static_cast<int>(ccon_distribution.size()) != ccon)
        throw std::invalid_argument("zeta must have one entry per N_a = 1..N");
      double sum = 0.0;
      for (double z : ccon_distribution) {
        if (z < 0.0) throw std::invalid_argument("zeta entries must be >= 0");
        sum += z;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("zeta must sum to 1");
    }
  }
};

// A scheduling policy: per-state rows of scheduling probabilities (alpha-hat)
// plus the derived full transition matrix. Immutable after construction.
struct Policy {
  QosSpec spec;
  std::vector<std::vector<double>> sched;  // row p: alpha-hat_{p0..p mu(p)}
  std::vector<std::vector<double>> q;      // full (M+1)x(M+1) matrix

  double sched_sum(int p) const {
    double s = 0.0;
    for (double v : sched[p]) s += v;
    return s;
  }
  double no_sched(int p) const { return 1.0 - sched_sum(p); }  // alpha-tilde_p
};

namespace detail {

inline void check_rows(const std::vector<std::vector<double>>& rows,
                       const QosSpec& spec) {
  if (static_cast<int>(rows.size()) != spec.states())
    throw std::invalid_argument("policy needs one row per state 0..M");
  for (int p = 0; p < spec.states(); ++p) {
    const int want = std::min(p, spec.buffer) + 1;
    if (static_cast<int>(rows[p].size()) != want)
      throw std::invalid_argument("row " + std::to_string(p) + " must have " +
                                  std::to_string(want) + " entries");
    double sum = 0.0;
    for (double v : rows[p]) {
      if (!(v >= 0.0 && v <= 1.0 + kProbSlack))
        throw std::invalid_argument("scheduling probability outside [0, 1]");
      sum += v;
    }
    if (sum > 1.0 + kProbSlack)
      throw std::invalid_argument("row " + std::to_string(p) +
                                  " scheduling probabilities exceed 1");
  }
}

}  // namespace detail

// Builds the full transition matrix from scheduling rows. A scheduled state
// transition succeeds with probability nu_s; a NACK behaves like the
// no-schedule forward transition. In the heterogeneous case the forward mass
// of row B is split over burst entry points q = B+1+(N-N_a) with weights
// zeta_{N_a}.
inline Policy build_policy(std::vector<std::vector<double>> rows,
                           const QosSpec& spec) {
  spec.validate();
  detail::check_rows(rows, spec);
  const int m = spec.chain_top();
  const int b = spec.buffer;
  const double nu_s = spec.nu_s();
  const double nu_d = spec.nu_d;

  Policy policy;
  policy.spec = spec;
  policy.sched = std::move(rows);
  policy.q.assign(m + 1, std::vector<double>(m + 1, 0.0));

  for (int p = 0; p <= m; ++p) {
    const int mu = std::min(p, b);
    double hat_sum = 0.0;
    for (int qi = 0; qi <= mu; ++qi) {
      policy.q[p][qi] = nu_s * policy.sched[p][qi];
      hat_sum += policy.sched[p][qi];
    }
    const double forward = (1.0 - hat_sum) + nu_d * hat_sum;  // 1 - nu_s*sum
    if (p < m) {
      if (spec.heterogeneous() && p == b) {
        const auto& zeta = spec.ccon_distribution;
        const int n = spec.ccon;
        for (int a = 1; a <= n; ++a) {
          const int target = b + 1 + (n - a);
          policy.q[p][target] += zeta[a - 1] * forward;
        }
      } else {
        policy.q[p][p + 1] = forward;
      }
    } else {
      policy.q[m][m] += forward;
    }
  }

  for (int p = 0; p <= m; ++p) {
    double s = 0.0;
    for (double v : policy.q[p]) s += v;
    if (std::abs(s - 1.0) > kProbSlack)
      throw std::logic_error("transition row does not sum to 1");
  }
  return policy;
}

inline Policy build_heterogeneous_policy(std::vector<std::vector<double>> rows,
                                         const QosSpec& spec) {
  if (!spec.heterogeneous())
    throw std::invalid_argument("spec carries no ccon distribution");
  return build_policy(std::move(rows), spec);
}

// Fading thresholds per state, nonincreasing within a row; kappa[p][q] is the
// minimum fading that moves state p to state q. Zero-probability top intervals
// are represented by an infinity sentinel.
struct ThresholdTable {
  std::vector<std::vector<double>> kappa;
};

template <class FadingDist>
ThresholdTable thresholds_from_policy(const Policy& policy,
                                      const FadingDist& fading) {
  ThresholdTable table;
  table.kappa.resize(policy.sched.size());
  for (std::size_t p = 0; p < policy.sched.size(); ++p) {
    const auto& row = policy.sched[p];
    auto& kap = table.kappa[p];
    kap.resize(row.size());
    double cum = 0.0;
    for (std::size_t qi = 0; qi < row.size(); ++qi) {
      cum += row[qi];
      if (cum > 1.0 + kProbSlack)
        throw std::invalid_argument("cumulative scheduling probability > 1");
      const double c = std::min(cum, 1.0);
      // kappa = F^-1(1 - c): fading exceeded with probability c.
      kap[qi] = c <= 0.0 ? kInf : fading.quantile(1.0 - c);
    }
  }
  return table;
}

template <class FadingDist>
std::vector<std::vector<double>> sched_rows_from_thresholds(
    const ThresholdTable& table, const FadingDist& fading) {
  std::vector<std::vector<double>> rows(table.kappa.size());
  for (std::size_t p = 0; p < table.kappa.size(); ++p) {
    const auto& kap = table.kappa[p];
    rows[p].resize(kap.size());
    double prev = kInf;
    double prev_cdf = 1.0;  // F(kappa_{p,q-1}), with kappa_{p,0-} = inf
    for (std::size_t qi = 0; qi < kap.size(); ++qi) {
      if (kap[qi] > prev + kProbSlack)
        throw std::invalid_argument("thresholds must be nonincreasing");
      const double cur_cdf = std::isinf(kap[qi]) ? 1.0 : fading.cdf(kap[qi]);
      rows[p][qi] = std::max(0.0, prev_cdf - cur_cdf);
      prev = kap[qi];
      prev_cdf = cur_cdf;
    }
  }
  return rows;
}

// Number of packets scheduled in state p at fading f (Eq. 9/10 semantics):
// zero below the lowest threshold, otherwise mu - q + 1 for the interval
// kappa[q] < f <= kappa[q-1].
inline int scheduled_count(int p, double f, const ThresholdTable& table,
                           int buffer) {
  const auto& kap = table.kappa[p];
  const int mu = std::min(p, buffer);
  if (f <= kap[mu]) return 0;
  for (int qi = 0; qi <= mu; ++qi)
    if (f > kap[qi]) return mu - qi + 1;
  return 0;  // unreachable
}

// Stationary distribution of the chain: one balance equation is replaced by
// the normalization constraint and the dense system solved directly.
// Singular systems indicate a reducible or degenerate candidate.
inline std::vector<double> steady_state(const Policy& policy) {
  const int n = policy.spec.states();
  std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
  std::vector<double> rhs(n, 0.0);
  // (Q^T - I) pi = 0 rows, except the last which enforces sum(pi) = 1.
  for (int r = 0; r < n - 1; ++r) {
    for (int c = 0; c < n; ++c) a[r * n + c] = policy.q[c][r];
    a[r * n + r] -= 1.0;
  }
  for (int c = 0; c < n; ++c) a[(n - 1) * n + c] = 1.0;
  rhs[n - 1] = 1.0;

  auto solved = solve_linear(std::move(a), std::move(rhs));
  if (!solved) throw ReducibleChainError("singular stationary system");
  std::vector<double>& pi = *solved;

  double sum = 0.0;
  for (double& v : pi) {
    if (v < -1e-9) throw ReducibleChainError("negative stationary mass");
    if (v < 0.0) v = 0.0;
    sum += v;
  }
  if (!(sum > 0.0)) throw ReducibleChainError("vanishing stationary mass");
  for (double& v : pi) v /= sum;

  double residual = 0.0;
  for (int c = 0; c < n; ++c) {
    double acc = 0.0;
    for (int r = 0; r < n; ++r) acc += pi[r] * policy.q[r][c];
    residual = std::max(residual, std::abs(acc - pi[c]));
  }
  if (residual > 1e-10)
    throw ReducibleChainError("stationary residual above tolerance");
  return pi;
}

// Average drop rate. The canonical form sums (1 - nu_s * sum alpha-hat_p)
// over states p >= B; the transition-counting form (forward transitions plus
// the state-M self loop) is evaluated as a cross-check and must agree.
inline double drop_rate(const Policy& policy, const std::vector<double>& pi) {
  const int m = policy.spec.chain_top();
  const int b = policy.spec.buffer;
  const double nu_s = policy.spec.nu_s();

  double canonical = 0.0;
  for (int p = b; p <= m; ++p)
    canonical += (1.0 - nu_s * policy.sched_sum(p)) * pi[p];

  double transitions = 0.0;
  for (int p = b; p < m; ++p) transitions += policy.q[p][p + 1] * pi[p];
  transitions += policy.q[m][m] * pi[m];
  if (policy.spec.heterogeneous() && b + 2 <= m) {
    double extra = 0.0;
    for (int qi = b + 2; qi <= m; ++qi) extra += policy.q[b][qi];
    transitions += pi[b] * extra;
  }
  if (std::abs(canonical - transitions) > 1e-12)
    throw std::logic_error("drop-rate forms disagree beyond tolerance");
  return canonical;
}

// Probability of violating the continuity constraint: the state-M mass that
// fails to leave the burst.
inline double ccon_violation(const Policy& policy,
                             const std::vector<double>& pi) {
  const int m = policy.spec.chain_top();
  return (1.0 - policy.spec.nu_s() * policy.sched_sum(m)) * pi[m];
}

struct ChainSolution {
  std::vector<double> pi;
  double theta_r = 0.0;
  double gamma = 0.0;
};

inline ChainSolution solve_chain(const Policy& policy) {
  ChainSolution sol;
  sol.pi = steady_state(policy);
  sol.theta_r = drop_rate(policy, sol.pi);
  sol.gamma = ccon_violation(policy, sol.pi);
  return sol;
}

}  // namespace oppsched
