#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "oppsched/channel.hpp"
#include "oppsched/energy.hpp"
#include "oppsched/fsmc.hpp"
#include "oppsched/rng.hpp"

namespace oppsched {

struct SimulatorOptions {
  long slots = 1000000;
  int batches = 100;  // batch-means blocks for standard errors
  std::vector<double> fading_bin_edges;  // optional VU histogram bins
};

// Optional energy sampling: every transmission contributes L times the
// per-bit integrand ln2 * 2^(C P(h)) / h at its realized channel h = s f.
struct EnergyProbe {
  const VuChannelDistribution* channel = nullptr;
  double spectral_efficiency = 0.5;
};

struct SimReport {
  long slots = 0;
  std::vector<double> empirical_pi;
  double empirical_theta_r = 0.0;  // drop transitions per slot
  double empirical_gamma = 0.0;    // state-M self-drops per slot
  std::vector<double> pi_sigma;    // standard errors of the means (batch means)
  double theta_sigma = 0.0;
  double gamma_sigma = 0.0;

  std::vector<long> burst_histogram;  // completed successive-drop runs by length
  long max_burst = 0;

  // Packet-weighted fading histogram over fading_bin_edges (+overflow bin).
  std::vector<double> vu_hist_w;
  std::vector<double> vu_hist_w2;  // per-bin sum of L^2, for cluster effects
  double packets_scheduled = 0.0;
  long transmissions = 0;

  double energy_estimate = std::numeric_limits<double>::quiet_NaN();
};

// Packet-level run of the scheduling scheme: one arrival per slot, threshold
// decision on the drawn fading, ACK/NACK feedback with failure probability
// nu_d. A NACK moves the chain forward exactly like a no-schedule slot while
// the transmit energy still counts. Drop events are transitions from states
// p >= B plus the state-M self loop.
inline SimReport simulate(const ThresholdTable& table, const QosSpec& spec,
                          const SimulatorOptions& opts, Rng& rng,
                          const EnergyProbe* probe = nullptr) {
  spec.validate();
  if (opts.slots < 1) throw std::invalid_argument("slots must be >= 1");
  if (static_cast<int>(table.kappa.size()) != spec.states())
    throw std::invalid_argument("threshold table does not match the spec");
  const int m = spec.chain_top();
  const int b = spec.buffer;
  const int n_states = spec.states();
  const int batches = std::max(1, std::min<long>(opts.batches, opts.slots));

  const bool hetero = spec.heterogeneous();
  std::vector<double> zeta_cum;
  if (hetero) {
    zeta_cum.resize(spec.ccon);
    double acc = 0.0;
    for (int a = 0; a < spec.ccon; ++a) {
      acc += spec.ccon_distribution[a];
      zeta_cum[a] = acc;
    }
    zeta_cum.back() = 1.0;
  }

  const bool with_hist = !opts.fading_bin_edges.empty();
  const ExponentialFading fading;
  const double ln2 = std::log(2.0);

  SimReport rep;
  rep.slots = opts.slots;
  rep.empirical_pi.assign(n_states, 0.0);
  rep.pi_sigma.assign(n_states, 0.0);
  if (with_hist) {
    rep.vu_hist_w.assign(opts.fading_bin_edges.size() + 1, 0.0);
    rep.vu_hist_w2.assign(opts.fading_bin_edges.size() + 1, 0.0);
  }

  std::vector<long> occupancy(n_states, 0);
  long drops = 0, gamma_events = 0;
  // per-batch accumulators
  std::vector<double> batch_pi(static_cast<std::size_t>(batches) * n_states, 0.0);
  std::vector<double> batch_drops(batches, 0.0), batch_gamma(batches, 0.0);

  double energy_sum = 0.0;
  long cur_run = 0;
  int p = 0;

  for (long slot = 0; slot < opts.slots; ++slot) {
    const int batch = static_cast<int>((slot * batches) / opts.slots);
    ++occupancy[p];
    batch_pi[static_cast<std::size_t>(batch) * n_states + p] += 1.0;

    const double f = fading.sample(rng);
    const int scheduled = scheduled_count(p, f, table, b);

    bool forward = true;
    if (scheduled >= 1) {
      ++rep.transmissions;
      rep.packets_scheduled += scheduled;
      if (with_hist) {
        const auto& edges = opts.fading_bin_edges;
        const std::size_t bin =
            std::upper_bound(edges.begin(), edges.end(), f) - edges.begin();
        rep.vu_hist_w[bin] += scheduled;
        rep.vu_hist_w2[bin] += double(scheduled) * scheduled;
      }
      if (probe && probe->channel) {
        const double s = probe->channel->pathloss().sample(rng);
        const double h = s * f;
        energy_sum += scheduled * ln2 *
                      std::exp2(probe->spectral_efficiency *
                                probe->channel->cdf(h)) /
                      h;
      }
      const bool nack = spec.nu_d > 0.0 && rng.uniform01() < spec.nu_d;
      if (!nack) {
        forward = false;
        const int q = std::min(p, b) - scheduled + 1;
        p = q;
        if (cur_run > 0) {
          if (static_cast<long>(rep.burst_histogram.size()) <= cur_run)
            rep.burst_histogram.resize(cur_run + 1, 0);
          ++rep.burst_histogram[cur_run];
          rep.max_burst = std::max(rep.max_burst, cur_run);
          cur_run = 0;
        }
      }
    }

    if (forward) {
      if (p >= b) {
        ++drops;
        batch_drops[batch] += 1.0;
        ++cur_run;
        if (p == m) {
          ++gamma_events;
          batch_gamma[batch] += 1.0;
        }
      }
      if (hetero && p == b) {
        const double u = rng.uniform01();
        int a = 1;
        while (a < spec.ccon && u >= zeta_cum[a - 1]) ++a;
        p = b + 1 + (spec.ccon - a);
      } else {
        p = std::min(p + 1, m);
      }
    }
  }
  if (cur_run > 0) {
    if (static_cast<long>(rep.burst_histogram.size()) <= cur_run)
      rep.burst_histogram.resize(cur_run + 1, 0);
    ++rep.burst_histogram[cur_run];
    rep.max_burst = std::max(rep.max_burst, cur_run);
  }

  const double inv_slots = 1.0 / double(opts.slots);
  for (int st = 0; st < n_states; ++st)
    rep.empirical_pi[st] = occupancy[st] * inv_slots;
  rep.empirical_theta_r = drops * inv_slots;
  rep.empirical_gamma = gamma_events * inv_slots;
  if (rep.packets_scheduled > 0.0 && probe && probe->channel)
    rep.energy_estimate = energy_sum / rep.packets_scheduled;

  // batch-means standard errors (valid under the chain's autocorrelation)
  const double batch_len = double(opts.slots) / batches;
  auto batch_sigma = [&](auto value_of_batch) {
    double mean = 0.0;
    for (int j = 0; j < batches; ++j) mean += value_of_batch(j);
    mean /= batches;
    double ss = 0.0;
    for (int j = 0; j < batches; ++j) {
      const double d = value_of_batch(j) - mean;
      ss += d * d;
    }
    if (batches < 2) return 0.0;
    return std::sqrt(ss / (double(batches) * (batches - 1)));
  };
  for (int st = 0; st < n_states; ++st) {
    rep.pi_sigma[st] = batch_sigma([&](int j) {
      return batch_pi[static_cast<std::size_t>(j) * n_states + st] / batch_len;
    });
  }
  rep.theta_sigma = batch_sigma([&](int j) { return batch_drops[j] / batch_len; });
  rep.gamma_sigma = batch_sigma([&](int j) { return batch_gamma[j] / batch_len; });
  return rep;
}

struct ValidationVerdict {
  bool passed = true;
  bool inconclusive = false;
  std::vector<std::string> failures;
};

// Compares empirical occupancy, drop rate and CCON violation against the
// analytic chain solution with z-tests on batch-means standard errors. Bands
// wider than 0.02 absolute mark the verdict inconclusive.
inline ValidationVerdict validate_against_chain(const SimReport& rep,
                                                const ChainSolution& sol,
                                                double z = 3.0) {
  ValidationVerdict verdict;
  if (rep.empirical_pi.size() != sol.pi.size())
    throw std::invalid_argument("report and solution state counts differ");

  auto check = [&](const std::string& name, double got, double want,
                   double sigma) {
    const double band = z * sigma + 1e-9;
    if (band > 0.02) verdict.inconclusive = true;
    if (std::abs(got - want) > band) {
      verdict.passed = false;
      verdict.failures.push_back(name + ": |" + std::to_string(got) + " - " +
                                 std::to_string(want) + "| > " +
                                 std::to_string(band));
    }
  };
  for (std::size_t st = 0; st < sol.pi.size(); ++st)
    check("pi[" + std::to_string(st) + "]", rep.empirical_pi[st], sol.pi[st],
          rep.pi_sigma[st]);
  check("theta_r", rep.empirical_theta_r, sol.theta_r, rep.theta_sigma);
  check("gamma", rep.empirical_gamma, sol.gamma, rep.gamma_sigma);
  return verdict;
}

}  // namespace oppsched
