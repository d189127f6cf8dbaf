#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "oppsched/channel.hpp"
#include "oppsched/fsmc.hpp"
#include "oppsched/linalg.hpp"
#include "oppsched/quadrature.hpp"

namespace oppsched {

struct UndefinedDistributionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleErrorVariance : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EnergyOptions {
  double cdf_tol = 1e-9;      // per channel-CDF evaluation
  double energy_tol = 1e-7;   // absolute, on the final energy value
  double inner_tol = 5e-11;   // fading-domain panels inside the energy mix
  int nodes_per_decade = 32;  // channel CDF cache resolution
};

inline double to_db(double linear) { return 10.0 * std::log10(linear); }

namespace detail {

// Monotone piecewise-cubic interpolant (Fritsch-Carlson slopes). Nodes must
// be strictly increasing; queries outside the node range clamp to the end
// values.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n)
      throw std::invalid_argument("interpolant needs at least two nodes");
    d_.assign(n, 0.0);
    std::vector<double> h(n - 1), sl(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      if (!(h[i] > 0.0))
        throw std::invalid_argument("interpolation nodes must increase");
      sl[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    d_[0] = sl[0];
    d_[n - 1] = sl[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (sl[i - 1] * sl[i] <= 0.0) {
        d_[i] = 0.0;
      } else {
        const double w1 = 2.0 * h[i] + h[i - 1];
        const double w2 = h[i] + 2.0 * h[i - 1];
        d_[i] = (w1 + w2) / (w1 / sl[i - 1] + w2 / sl[i]);
      }
    }
  }

  double operator()(double x) const {
    if (x <= x_.front()) return y_.front();
    if (x >= x_.back()) return y_.back();
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y_[i] + h * (t3 - 2 * t2 + t) * d_[i] +
           (-2 * t3 + 3 * t2) * y_[i + 1] + h * (t3 - t2) * d_[i + 1];
  }

 private:
  std::vector<double> x_, y_, d_;
};

}  // namespace detail

// Small-scale fading of the scheduled virtual users: the base exponential
// density reweighted by the number of packets scheduled at that fading,
// summed over states with their stationary mass and normalized to integrate
// to one. Piecewise w_k * exp(-y) between threshold break points; the weight
// step at threshold kappa_pq is pi_p.
class VuFadingDistribution {
 public:
  struct Segment {
    double lo, hi;  // hi of the last segment is +inf
    double weight;  // includes the normalization constant c
  };

  static VuFadingDistribution from_policy(const Policy& policy,
                                          const std::vector<double>& pi,
                                          const ThresholdTable& table) {
    if (pi.size() != table.kappa.size() || pi.size() != policy.sched.size())
      throw std::invalid_argument("policy, pi and thresholds sizes disagree");

    std::vector<std::pair<double, double>> events;  // (threshold, pi_p)
    for (std::size_t p = 0; p < table.kappa.size(); ++p) {
      if (pi[p] <= 0.0) continue;
      for (double t : table.kappa[p])
        if (std::isfinite(t)) events.emplace_back(t, pi[p]);
    }
    if (events.empty())
      throw UndefinedDistributionError("policy never schedules a packet");
    std::sort(events.begin(), events.end());

    std::vector<double> edges, weights;  // W(y) for y just above each edge
    double w = 0.0;
    std::size_t i = 0;
    while (i < events.size()) {
      const double t = events[i].first;
      while (i < events.size() && events[i].first == t) w += events[i++].second;
      edges.push_back(t);
      weights.push_back(w);
    }

    double mass = 0.0;  // sum_k W_k (e^-lo - e^-hi) = mean scheduled packets
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const double e_hi = k + 1 < edges.size() ? std::exp(-edges[k + 1]) : 0.0;
      mass += weights[k] * (std::exp(-edges[k]) - e_hi);
    }
    if (!(mass > 0.0))
      throw UndefinedDistributionError("scheduled-packet mass vanishes");

    VuFadingDistribution vu;
    vu.c_ = 1.0 / mass;
    vu.nu_d_ = policy.spec.nu_d;
    vu.support_min_ = edges.front();
    for (std::size_t k = 0; k < edges.size(); ++k) {
      vu.segs_.push_back({edges[k],
                          k + 1 < edges.size() ? edges[k + 1] : kInf,
                          vu.c_ * weights[k]});
      vu.breaks_.push_back(edges[k]);
    }
    vu.cum_.resize(vu.segs_.size() + 1);
    vu.cum_[0] = 0.0;
    for (std::size_t k = 0; k < vu.segs_.size(); ++k) {
      const auto& s = vu.segs_[k];
      const double e_hi = std::isinf(s.hi) ? 0.0 : std::exp(-s.hi);
      vu.cum_[k + 1] = vu.cum_[k] + s.weight * (std::exp(-s.lo) - e_hi);
    }
    vu.cum_.back() = 1.0;
    return vu;
  }

  double pdf(double y) const {
    const int k = segment_of(y);
    return k < 0 ? 0.0 : segs_[k].weight * std::exp(-y);
  }

  double cdf(double y) const {
    const int k = segment_of(y);
    if (k < 0) return 0.0;
    return std::min(
        1.0, cum_[k] + segs_[k].weight * (std::exp(-segs_[k].lo) - std::exp(-y)));
  }

  double quantile(double u) const {
    if (!(u >= 0.0 && u < 1.0))
      throw std::domain_error("VU quantile argument outside [0, 1)");
    std::size_t k = 0;
    while (k + 1 < segs_.size() && cum_[k + 1] <= u) ++k;
    const auto& s = segs_[k];
    const double target = std::exp(-s.lo) - (u - cum_[k]) / s.weight;
    return -std::log(std::max(target, std::numeric_limits<double>::min()));
  }

  double sample(Rng& rng) const { return quantile(rng.uniform01()); }

  double support_min() const { return support_min_; }
  const std::vector<double>& breakpoints() const { return breaks_; }
  const std::vector<Segment>& segments() const { return segs_; }
  double normalization() const { return c_; }
  double mean_scheduled() const { return 1.0 / c_; }
  double source_nu_d() const { return nu_d_; }

 private:
  int segment_of(double y) const {
    if (y < support_min_) return -1;
    const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), y);
    if (it == breaks_.begin()) return -1;
    return static_cast<int>(it - breaks_.begin()) - 1;
  }

  std::vector<Segment> segs_;
  std::vector<double> breaks_;  // segment lower edges, ascending
  std::vector<double> cum_;     // cdf at segment lower edges
  double c_ = 0.0, support_min_ = 0.0, nu_d_ = 0.0;
};

// CDF of h = s * f for VU fading mixed over path loss, cached on a monotone
// log-gain grid. Node values come from the same mixing integral as gain_cdf;
// the change of variables w = x/s turns the mix into the cumulative form
//   P(x) = k x^(-2/a) [G(x) - G(x/smax)],  G(t) = int_0^t F_vu(w) w^(2/a-1) dw
// with k = (2/a)/(1 - delta^2), so one cumulative table serves every x.
class VuChannelDistribution {
 public:
  VuChannelDistribution(VuFadingDistribution vu, PathLossDistribution pl,
                        const EnergyOptions& opts = {})
      : vu_(std::move(vu)), pl_(pl) {
    if (pl_.degenerate()) return;
    build_tables(opts);
  }

  double cdf(double x) const {
    if (pl_.degenerate()) return vu_.cdf(x);
    if (x <= xlo_) return xlo_is_support_ ? 0.0 : first_p_ * (x / xlo_);
    if (x >= xhi_) return 1.0;
    return std::min(1.0, std::max(0.0, table_(std::log(x))));
  }

  double support_min() const { return vu_.support_min(); }
  const VuFadingDistribution& fading() const { return vu_; }
  const PathLossDistribution& pathloss() const { return pl_; }

 private:
  void build_tables(const EnergyOptions& opts) {
    const double e = 2.0 / pl_.alpha();  // exponent of the cumulative form
    const double d2 = pl_.delta() * pl_.delta();
    exp_ = e;
    knorm_ = e / (1.0 - d2);
    const double smax = pl_.support_max();

    // Cumulative G table over the fading variable.
    const auto& segs = vu_.segments();
    const double bp_last = segs.back().lo;
    const double c_wlast = segs.back().weight;
    const double w_hi = bp_last + 45.0;
    const bool zero_support = vu_.support_min() <= 0.0;
    const double w_start =
        zero_support ? std::min({1e-14, segs.front().hi * 0.5, w_hi * 0.5})
                     : vu_.support_min();

    std::vector<double> wgrid;
    if (zero_support) {
      const double first_hi = std::min(
          std::isinf(segs.front().hi) ? w_hi : segs.front().hi, w_hi);
      for (double t = w_start; t < first_hi; t *= 4.0) wgrid.push_back(t);
    }
    for (const auto& s : segs) {
      const double lo = std::max(s.lo, w_start);
      const double hi = std::min(std::isinf(s.hi) ? w_hi : s.hi, w_hi);
      if (hi <= lo) continue;
      const int n = 12;
      const bool geometric = lo > 0.0 && hi / lo > 4.0;
      for (int j = 0; j <= n; ++j) {
        const double t = geometric
                             ? lo * std::pow(hi / lo, double(j) / n)
                             : lo + (hi - lo) * double(j) / n;
        wgrid.push_back(t);
      }
    }
    wgrid.push_back(w_hi);
    std::sort(wgrid.begin(), wgrid.end());
    wgrid.erase(std::unique(wgrid.begin(), wgrid.end()), wgrid.end());

    std::vector<double> gvals(wgrid.size(), 0.0);
    auto g_integrand = [&](double w) {
      return vu_.cdf(w) * std::pow(w, e - 1.0);
    };
    for (std::size_t i = 1; i < wgrid.size(); ++i) {
      const auto r =
          integrate(g_integrand, wgrid[i - 1], wgrid[i], opts.cdf_tol * 1e-3, 200);
      gvals[i] = gvals[i - 1] + r.value;
    }
    g_lo_ = wgrid.front();
    g_hi_ = w_hi;
    g_hi_val_ = gvals.back();

    std::vector<double> logw(wgrid.size());
    for (std::size_t i = 0; i < wgrid.size(); ++i) logw[i] = std::log(wgrid[i]);
    gtable_ = detail::MonotoneCubic(std::move(logw), std::move(gvals));

    // Channel CDF table over log gain.
    const double tail_t =
        std::max(bp_last + 1.0, std::log(std::max(c_wlast, 1e-12)) + 28.0);
    xlo_ = zero_support ? w_start : vu_.support_min();
    xlo_is_support_ = !zero_support;
    xhi_ = smax * tail_t;

    std::vector<double> xs;
    const double l0 = std::log(xlo_), l1 = std::log(xhi_);
    const int n_nodes =
        std::max(64, static_cast<int>((l1 - l0) / std::log(10.0) *
                                      opts.nodes_per_decade));
    for (int i = 0; i <= n_nodes; ++i)
      xs.push_back(std::exp(l0 + (l1 - l0) * double(i) / n_nodes));
    for (double t : vu_.breakpoints()) {
      if (t > xlo_ && t < xhi_) xs.push_back(t);
      const double ts = t * smax;
      if (ts > xlo_ && ts < xhi_) xs.push_back(ts);
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

    std::vector<double> ps(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double g = g_eval(xs[i]) - g_eval(xs[i] / smax);
      ps[i] = knorm_ * std::pow(xs[i], -e) * g;
    }
    for (std::size_t i = 1; i < ps.size(); ++i) ps[i] = std::max(ps[i], ps[i - 1]);
    for (double& p : ps) p = std::min(1.0, std::max(0.0, p));
    first_p_ = ps.front();

    std::vector<double> logx(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) logx[i] = std::log(xs[i]);
    table_ = detail::MonotoneCubic(std::move(logx), std::move(ps));
  }

  double g_eval(double t) const {
    if (t <= g_lo_) return 0.0;
    if (t >= g_hi_)
      return g_hi_val_ + (std::pow(t, exp_) - std::pow(g_hi_, exp_)) / exp_;
    return std::max(0.0, gtable_(std::log(t)));
  }

  VuFadingDistribution vu_;
  PathLossDistribution pl_;
  detail::MonotoneCubic table_, gtable_;
  double xlo_ = 0.0, xhi_ = 1.0, first_p_ = 0.0;
  bool xlo_is_support_ = true;
  double g_lo_ = 0.0, g_hi_ = 0.0, g_hi_val_ = 0.0;
  double exp_ = 1.0, knorm_ = 1.0;
};

namespace detail {

// Core mixed integral of the energy functionals:
//   order 1: int 2^(C P(x)) / x   dP(x)
//   order 2: int 2^(2C P(x)) / x^2 dP(x)
// evaluated as fading-domain panels between thresholds, mixed over the
// path-loss density. Returns +inf when the VU support touches zero (the
// integrand is ~1/x near the origin and the integral diverges there).
inline double vu_energy_integral(const VuChannelDistribution& chan, double c_se,
                                 int order, const EnergyOptions& opts) {
  const VuFadingDistribution& vu = chan.fading();
  if (vu.support_min() <= 0.0) return kInf;

  const double cexp = order == 1 ? c_se : 2.0 * c_se;
  const auto& segs = vu.segments();
  const double y_hi = segs.back().lo + 45.0;

  auto inner = [&](double s) {
    double acc = 0.0;
    for (const auto& seg : segs) {
      const double lo = seg.lo;
      const double hi = std::min(std::isinf(seg.hi) ? y_hi : seg.hi, y_hi);
      if (hi <= lo) continue;
      auto f = [&](double y) {
        const double x = s * y;
        const double num = std::exp2(cexp * chan.cdf(x)) * std::exp(-y);
        return order == 1 ? num / x : num / (x * x);
      };
      acc += seg.weight * integrate(f, lo, hi, opts.inner_tol, 64).value;
    }
    return acc;
  };

  const PathLossDistribution& pl = chan.pathloss();
  if (pl.degenerate()) return inner(1.0);

  std::vector<double> breaks;
  for (double s = 10.0; s < pl.support_max(); s *= 10.0) breaks.push_back(s);
  auto outer = [&](double s) { return pl.pdf(s) * inner(s); };
  const QuadratureResult r =
      integrate_segmented(outer, pl.support_min(), pl.support_max(), breaks,
                          opts.energy_tol, 4000);
  if (!r.converged)
    throw QuadratureError("energy quadrature did not reach tolerance");
  return r.value;
}

}  // namespace detail

// Average system energy per transmitted information bit with the packet-level
// channel knowledge model: ln2 * int 2^(C P(x)) / x dP(x) over the VU channel
// distribution. Divergent (infinite) when the lowest active threshold is zero.
inline double energy_cst(const VuChannelDistribution& chan,
                         const SystemConfig& cfg,
                         const EnergyOptions& opts = {}) {
  cfg.validate();
  return std::log(2.0) * detail::vu_energy_integral(
                             chan, cfg.spectral_efficiency, 1, opts);
}

// Energy per bit when both ends carry estimation error of variance beta2:
// the CST value plus beta2 * ln2 * int 2^(2C P(x)) / x^2 dP(x). Only defined
// on top of error-free packet transport (nu_d = 0).
inline double energy_cso(const VuChannelDistribution& chan,
                         const SystemConfig& cfg, double beta2,
                         const EnergyOptions& opts = {}) {
  cfg.validate();
  if (beta2 < 0.0) throw std::invalid_argument("beta2 must be nonnegative");
  if (chan.fading().source_nu_d() != 0.0)
    throw std::invalid_argument("CSO energy requires a nu_d = 0 policy");
  const double first = detail::vu_energy_integral(
      chan, cfg.spectral_efficiency, 1, opts);
  const double second = detail::vu_energy_integral(
      chan, cfg.spectral_efficiency, 2, opts);
  return std::log(2.0) * (first + beta2 * second);
}

// Channel made of point masses; energies follow from integrating 2^(Cu)
// exactly across each atom's CDF jump.
struct DiscreteChannel {
  struct Atom {
    double gain;
    double mass;
  };
  std::vector<Atom> atoms;
};

inline double energy_cst(const DiscreteChannel& chan, const SystemConfig& cfg) {
  cfg.validate();
  auto atoms = chan.atoms;
  std::sort(atoms.begin(), atoms.end(),
            [](const auto& a, const auto& b) { return a.gain < b.gain; });
  const double c = cfg.spectral_efficiency;
  double p = 0.0, total = 0.0;
  for (const auto& a : atoms) {
    if (!(a.gain > 0.0)) throw std::invalid_argument("atom gain must be > 0");
    total += (std::exp2(c * (p + a.mass)) - std::exp2(c * p)) / (c * a.gain);
    p += a.mass;
  }
  if (std::abs(p - 1.0) > 1e-9)
    throw std::invalid_argument("atom masses must sum to 1");
  return total;
}

inline double energy_cso(const DiscreteChannel& chan, const SystemConfig& cfg,
                         double beta2) {
  cfg.validate();
  if (beta2 < 0.0) throw std::invalid_argument("beta2 must be nonnegative");
  auto atoms = chan.atoms;
  std::sort(atoms.begin(), atoms.end(),
            [](const auto& a, const auto& b) { return a.gain < b.gain; });
  const double c = cfg.spectral_efficiency;
  double p = 0.0, second = 0.0;
  for (const auto& a : atoms) {
    second += (std::exp2(2 * c * (p + a.mass)) - std::exp2(2 * c * p)) /
              (2 * c * a.gain * a.gain);
    p += a.mass;
  }
  return energy_cst(chan, cfg) + beta2 * second;
}

// Energy-per-bit report for one evaluated policy.
struct EnergyReport {
  double ebn0_cst = kInf;  // linear
  double ebn0_cst_db = kInf;
  std::optional<double> ebn0_cso;  // linear, present when beta2 was given
  std::optional<double> ebn0_cso_db;
  double beta2 = 0.0;
  double theta_r = 0.0;
  double gamma = 0.0;
  bool divergent = false;
};

inline EnergyReport evaluate_policy_energy(
    const Policy& policy, const ChainSolution& solution,
    const SystemConfig& cfg, const EnergyOptions& opts = {},
    std::optional<double> beta2 = std::nullopt) {
  const ThresholdTable table =
      thresholds_from_policy(policy, ExponentialFading{});
  const VuFadingDistribution vu =
      VuFadingDistribution::from_policy(policy, solution.pi, table);
  const VuChannelDistribution chan(vu, PathLossDistribution(cfg), opts);

  EnergyReport rep;
  rep.theta_r = solution.theta_r;
  rep.gamma = solution.gamma;
  rep.ebn0_cst = energy_cst(chan, cfg, opts);
  rep.ebn0_cst_db = to_db(rep.ebn0_cst);
  rep.divergent = std::isinf(rep.ebn0_cst);
  if (beta2) {
    rep.beta2 = *beta2;
    rep.ebn0_cso = energy_cso(chan, cfg, *beta2, opts);
    rep.ebn0_cso_db = to_db(*rep.ebn0_cso);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Finite-user multiple-access oracle: exact SIC power allocation for K users
// with fixed rates, with and without channel estimation error.

struct FiniteKInstance {
  std::vector<double> gains;  // h_k, input order
  std::vector<double> rates;  // R_k in bits/s/Hz
  double beta2 = 0.0;
  double z0 = 1.0;

  // Partial rates R_k = lambda_k * C / K.
  static FiniteKInstance from_load_factors(std::vector<double> gains,
                                           const std::vector<double>& lambdas,
                                           double spectral_efficiency,
                                           double beta2 = 0.0, double z0 = 1.0) {
    FiniteKInstance inst;
    const std::size_t k = gains.size();
    if (lambdas.size() != k)
      throw std::invalid_argument("one load factor per user required");
    inst.gains = std::move(gains);
    inst.rates.resize(k);
    for (std::size_t i = 0; i < k; ++i)
      inst.rates[i] = lambdas[i] * spectral_efficiency / double(k);
    inst.beta2 = beta2;
    inst.z0 = z0;
    return inst;
  }

  void validate() const {
    if (gains.empty() || gains.size() != rates.size())
      throw std::invalid_argument("instance needs matching gains and rates");
    for (double h : gains)
      if (!(h > 0.0)) throw std::invalid_argument("gains must be positive");
    for (double r : rates)
      if (!(r >= 0.0)) throw std::invalid_argument("rates must be nonnegative");
    if (beta2 < 0.0) throw std::invalid_argument("beta2 must be nonnegative");
    if (!(z0 > 0.0)) throw std::invalid_argument("z0 must be positive");
  }
};

// Telescoping per-user energies of the perfect-CSI SIC allocation: with users
// sorted by increasing gain, user k pays Z0/h_k (2^(sum_{i<=k} R) - 2^(sum_{i<k} R)).
// Returned in the input order; ignores beta2.
inline std::vector<double> finite_k_closed_form(const FiniteKInstance& inst) {
  inst.validate();
  const std::size_t k = inst.gains.size();
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return inst.gains[a] < inst.gains[b];
  });
  std::vector<double> energy(k);
  double rate_sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double prev = std::exp2(rate_sum);
    rate_sum += inst.rates[idx[i]];
    energy[idx[i]] = inst.z0 / inst.gains[idx[i]] * (std::exp2(rate_sum) - prev);
  }
  return energy;
}

// Power region solution E* = Z0 [B - beta2 R]^-1 rho of the estimation-error
// model, users ordered by decreasing gain so that the cleanly decoded user is
// the weakest; at beta2 = 0 this reproduces the telescoping allocation.
// Throws InfeasibleErrorVariance when beta2 drives the system singular.
inline std::vector<double> finite_k_sic_energy(const FiniteKInstance& inst) {
  inst.validate();
  const std::size_t k = inst.gains.size();

  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return inst.gains[a] > inst.gains[b];
  });

  std::vector<double> rho(k), h(k);
  for (std::size_t i = 0; i < k; ++i) {
    h[i] = inst.gains[idx[i]];
    rho[i] = std::exp2(inst.rates[idx[i]]) - 1.0;
  }

  // Singularity margin: det(B - beta2 R) = det(B) (1 - beta2 sum_k E_k(0)/Z0).
  const std::vector<double> e0 = finite_k_closed_form(inst);
  double e0_sum = 0.0;
  for (double v : e0) e0_sum += v;
  if (1.0 - inst.beta2 * e0_sum / inst.z0 <= 1e-12)
    throw InfeasibleErrorVariance("estimation error variance too large");

  std::vector<double> a(k * k, 0.0);
  for (std::size_t r = 0; r < k; ++r) {
    a[r * k + r] = h[r];
    for (std::size_t c = r + 1; c < k; ++c) a[r * k + c] = -rho[r] * h[c];
    for (std::size_t c = 0; c < k; ++c) a[r * k + c] -= inst.beta2 * rho[r];
  }
  std::vector<double> b(k);
  for (std::size_t i = 0; i < k; ++i) b[i] = inst.z0 * rho[i];

  auto solved = solve_linear(std::move(a), std::move(b));
  if (!solved) throw InfeasibleErrorVariance("singular SIC power system");

  std::vector<double> energy(k);
  for (std::size_t i = 0; i < k; ++i) {
    if ((*solved)[i] < 0.0)
      throw InfeasibleErrorVariance("negative power in SIC solution");
    energy[idx[i]] = (*solved)[i];
  }
  return energy;
}

// First-order expansion (1 + beta2/K * sum rho_k/h_k) E*(0).
inline std::vector<double> finite_k_approximation(const FiniteKInstance& inst) {
  inst.validate();
  const std::size_t k = inst.gains.size();
  double trace = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    trace += (std::exp2(inst.rates[i]) - 1.0) / inst.gains[i];
  const double factor = 1.0 + inst.beta2 / double(k) * trace;
  std::vector<double> energy = finite_k_closed_form(inst);
  for (double& v : energy) v *= factor;
  return energy;
}

}  // namespace oppsched
