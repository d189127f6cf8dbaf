#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "oppsched/quadrature.hpp"
#include "oppsched/rng.hpp"

namespace oppsched {

// Global physical parameters. Defaults follow the standard evaluation setup:
// 0.5 bits/s/Hz, forbidden-region radius 0.01, path-loss exponent 2,
// normalized noise density.
struct SystemConfig {
  double spectral_efficiency = 0.5;  // C
  double delta = 0.01;               // forbidden-region radius, in (0, 1]
  double pathloss_exponent = 2.0;
  double noise_density = 1.0;  // Z0

  void validate() const {
    if (!(spectral_efficiency > 0))
      throw std::invalid_argument("spectral_efficiency must be positive");
    if (!(delta > 0 && delta <= 1))
      throw std::invalid_argument("delta must lie in (0, 1]");
    if (!(pathloss_exponent > 0))
      throw std::invalid_argument("pathloss_exponent must be positive");
    if (!(noise_density > 0))
      throw std::invalid_argument("noise_density must be positive");
  }
};

struct ChannelSample {
  double pathloss = 1.0;  // s, in [1, delta^-alpha]
  double fading = 0.0;    // f, nonnegative
  double gain = 0.0;      // h = s * f
};

// Path-loss gain of a user placed uniformly outside the forbidden region,
// normalized to one at the cell border. Support is [1, delta^-alpha]; the
// interior CDF branch is 1 - (x^(-2/alpha) - delta^2) / (1 - delta^2).
class PathLossDistribution {
 public:
  explicit PathLossDistribution(const SystemConfig& cfg)
      : delta_(cfg.delta), alpha_(cfg.pathloss_exponent) {
    cfg.validate();
    delta2_ = delta_ * delta_;
    smax_ = std::pow(delta_, -alpha_);
    norm_ = 1.0 - delta2_;
    if (norm_ <= 0.0) {
      // delta == 1: the distribution degenerates to a point mass at s = 1.
      smax_ = 1.0;
    }
  }

  double support_min() const { return 1.0; }
  double support_max() const { return smax_; }
  double alpha() const { return alpha_; }
  double delta() const { return delta_; }
  bool degenerate() const { return norm_ <= 0.0; }

  double cdf(double x) const {
    if (x < 1.0) return 0.0;
    if (x >= smax_) return 1.0;
    return 1.0 - (std::pow(x, -2.0 / alpha_) - delta2_) / norm_;
  }

  // Interior density, obtained by differentiating the CDF in closed form.
  double pdf(double x) const {
    if (x < 1.0 || x > smax_ || degenerate()) return 0.0;
    return (2.0 / alpha_) * std::pow(x, -2.0 / alpha_ - 1.0) / norm_;
  }

  double quantile(double u) const {
    if (!(u >= 0.0 && u <= 1.0))
      throw std::domain_error("path-loss quantile argument outside [0, 1]");
    if (degenerate()) return 1.0;
    const double t = delta2_ + (1.0 - u) * norm_;  // = x^(-2/alpha)
    return std::pow(t, -alpha_ / 2.0);
  }

  double sample(Rng& rng) const { return quantile(rng.uniform01()); }

 private:
  double delta_, alpha_, delta2_, smax_, norm_;
};

// Unit-mean exponential small-scale fading.
class ExponentialFading {
 public:
  double cdf(double y) const { return y <= 0.0 ? 0.0 : -std::expm1(-y); }
  double pdf(double y) const { return y < 0.0 ? 0.0 : std::exp(-y); }

  double quantile(double p) const {
    if (!(p >= 0.0 && p < 1.0)) {
      if (p == 1.0)
        throw std::domain_error("fading quantile(1): support is unbounded");
      throw std::domain_error("fading quantile argument outside [0, 1)");
    }
    return -std::log1p(-p);
  }

  double sample(Rng& rng) const { return rng.exponential(); }
};

namespace detail {

template <class FadingDist>
concept HasBreakpoints = requires(const FadingDist& f) {
  { f.breakpoints() } -> std::convertible_to<std::vector<double>>;
};

}  // namespace detail

// CDF of the product gain h = s * f: P(s f <= x) mixed over the path-loss
// density. The fading distribution may be the raw small-scale law or a
// policy-weighted one; distributions exposing breakpoints() get their kinks
// mapped into the path-loss domain before the adaptive pass.
template <class FadingDist>
double gain_cdf(const PathLossDistribution& pathloss, const FadingDist& fading,
                double x, double abs_tol = 1e-9) {
  if (x <= 0.0) return 0.0;
  if (pathloss.degenerate()) return fading.cdf(x);

  const double lo = pathloss.support_min();
  const double hi = pathloss.support_max();
  std::vector<double> breaks;
  // Decades of the heavy-tailed path-loss support.
  for (double s = 10.0; s < hi; s *= 10.0) breaks.push_back(s);
  if constexpr (detail::HasBreakpoints<FadingDist>) {
    for (double t : fading.breakpoints())
      if (t > 0.0 && std::isfinite(t)) breaks.push_back(x / t);
  }
  auto integrand = [&](double s) { return fading.cdf(x / s) * pathloss.pdf(s); };
  QuadratureResult r = integrate_segmented(integrand, lo, hi, breaks, abs_tol);
  if (!r.converged)
    throw QuadratureError("gain_cdf quadrature did not reach tolerance");
  return std::min(1.0, std::max(0.0, r.value));
}

}  // namespace oppsched
