#pragma once
// Seeded stochastic environment: arrivals, harvesting, prices, and
// channel-dependent per-unit transmission energies.
//
// Every observation is a pure function of (seed, config, t) — see SlotRng.

#include <cmath>
#include <numbers>
#include <vector>

#include "globe/model.hpp"
#include "globe/rng.hpp"

namespace globe {

struct EnvConfig {
  // Per-user traffic arrivals: Poisson with this mean, clamped to mu_max.
  double tx_rate = 0.15;

  // Per-user computation arrivals: Poisson around a sinusoidally modulated
  // rate with per-user phase offsets (staggered daily load peaks), clamped to
  // lam_max. comp_jitter adds per-slot multiplicative noise to the rate.
  double comp_rate_mean = 1400.0;
  double comp_amp = 0.9;
  int comp_period = 500;
  double comp_jitter = 0.10;

  // Harvest: uniform on [0, harvest_cap] during the "day" fraction of each
  // diurnal period, zero otherwise. day_fraction = 1 gives a flat uniform
  // process with no night.
  double day_fraction = 0.6;
  int diurnal_period = 2000;

  // Grid price: uniform on [0, 2 * price_mean].
  double price_mean = 1.0;

  // Channel power gains are exponentially distributed (Rayleigh fading) with
  // these means, then quantile-truncated to [q_lo, q_hi] so per-unit tx
  // energies have exact finite bounds.
  double gain_home = 0.1443;
  double gain_cross = 0.0120;
  double q_lo = 0.15;
  double q_hi = 0.90;

  // Monte-Carlo draws used to estimate the expected per-unit tx energy.
  int mc_draws = 64;

  void validate() const {
    if (tx_rate < 0) throw ConfigError("env.tx_rate", "must be >= 0");
    if (comp_rate_mean < 0) throw ConfigError("env.comp_rate_mean", "must be >= 0");
    if (comp_amp < 0 || comp_amp > 1)
      throw ConfigError("env.comp_amp", "must be in [0, 1]");
    if (comp_period <= 0) throw ConfigError("env.comp_period", "must be > 0");
    if (comp_jitter < 0 || comp_jitter > 1)
      throw ConfigError("env.comp_jitter", "must be in [0, 1]");
    if (day_fraction < 0 || day_fraction > 1)
      throw ConfigError("env.day_fraction", "must be in [0, 1]");
    if (diurnal_period <= 0) throw ConfigError("env.diurnal_period", "must be > 0");
    if (price_mean < 0) throw ConfigError("env.price_mean", "must be >= 0");
    if (gain_home <= 0 || gain_cross <= 0)
      throw ConfigError("env.gain", "channel gains must be > 0");
    if (!(0 <= q_lo && q_lo < q_hi && q_hi < 1))
      throw ConfigError("env.quantiles", "need 0 <= q_lo < q_hi < 1");
    if (mc_draws <= 0) throw ConfigError("env.mc_draws", "must be > 0");
  }
};

class Environment {
 public:
  Environment(const NetworkConfig& net, const EnvConfig& env, uint64_t seed)
      : net_(net), env_(env), seed_(seed) {
    net_.validate();
    env_.validate();
    const int U = net_.u();
    pairs_.resize(U);
    for (int v = 0; v < U; ++v) {
      const auto& us = net_.users[v];
      pairs_[v].resize(us.candidates.size());
      for (size_t k = 0; k < us.candidates.size(); ++k) {
        int j = us.candidates[k];
        Pair& pr = pairs_[v][k];
        pr.gain = (j == us.home) ? env_.gain_home : env_.gain_cross;
        pr.snr_per_gain = net_.bs[j].tx_power / net_.noise;
        pr.energy_coef = net_.bs[j].tx_power * us.data_size *
                         std::numbers::ln2 / net_.bandwidth;
        // Truncation maps U[q_lo,q_hi] through the exponential inverse CDF,
        // so realized gains live in [h_lo, h_hi] exactly.
        pr.h_lo = -pr.gain * std::log1p(-env_.q_lo);
        pr.h_hi = -pr.gain * std::log1p(-env_.q_hi);
      }
    }
  }

  const NetworkConfig& net() const { return net_; }
  const EnvConfig& env() const { return env_; }
  uint64_t seed() const { return seed_; }

  // Expected per-unit transmission energy at channel gain h (see Shannon
  // capacity with the BS's tx power): energy_coef / ln(1 + h * snr_per_gain).
  static double tx_energy_at_gain(double tx_power, double noise,
                                  double bandwidth, double data_size,
                                  double h) {
    double rate_log = std::log1p(h * tx_power / noise);  // ln(1 + SNR)
    return tx_power * data_size * std::numbers::ln2 / (bandwidth * rate_log);
  }

  // Exact bounds on every p value this generator can emit (energy decreases
  // in gain, and the Monte-Carlo average stays inside the per-draw range).
  double p_min_bound() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& row : pairs_)
      for (const auto& pr : row) m = std::min(m, p_at(pr, pr.h_hi));
    return m;
  }
  std::vector<std::vector<double>> pair_p_max() const {
    std::vector<std::vector<double>> out(pairs_.size());
    for (size_t v = 0; v < pairs_.size(); ++v) {
      out[v].resize(pairs_[v].size());
      for (size_t k = 0; k < pairs_[v].size(); ++k)
        out[v][k] = p_at(pairs_[v][k], pairs_[v][k].h_lo);
    }
    return out;
  }

  bool is_day(int64_t t) const {
    double pos = static_cast<double>(t % env_.diurnal_period);
    return pos < env_.day_fraction * env_.diurnal_period;
  }

  SlotObservation observe(int64_t t) const {
    SlotRng rng(seed_, static_cast<uint64_t>(t));
    // Channel fading draws use their own per-slot stream so that changing an
    // arrival-process parameter (which changes how many variates the Poisson
    // sampler consumes) cannot shift them: sweeps over workload or price with
    // a shared seed then see identical channels.
    SlotRng chan_rng(seed_, static_cast<uint64_t>(t) | (1ull << 63));
    const int N = net_.n(), U = net_.u();
    SlotObservation o;
    o.t = t;
    o.harvest.resize(N);
    const bool day = is_day(t);
    for (int i = 0; i < N; ++i)
      o.harvest[i] = day ? rng.uniform(0.0, net_.harvest_cap) : 0.0;
    o.price = rng.uniform(0.0, 2.0 * env_.price_mean);

    o.mu.resize(U);
    for (int v = 0; v < U; ++v)
      o.mu[v] = std::min(static_cast<double>(rng.poisson(env_.tx_rate)),
                         net_.mu_max);

    o.lambda.resize(U);
    const double w = 2.0 * std::numbers::pi;
    for (int v = 0; v < U; ++v) {
      double phase = w * static_cast<double>(v) / std::max(1, U);
      double rate = env_.comp_rate_mean *
                    (1.0 + env_.comp_amp *
                               std::sin(w * static_cast<double>(t % env_.comp_period) /
                                            env_.comp_period +
                                        phase));
      rate *= 1.0 + env_.comp_jitter * rng.uniform(-1.0, 1.0);
      rate = std::clamp(rate, 0.0, net_.lam_max);
      o.lambda[v] = std::min(static_cast<double>(rng.poisson(rate)), net_.lam_max);
    }

    o.p.resize(U);
    const double q_span = env_.q_hi - env_.q_lo;
    for (int v = 0; v < U; ++v) {
      o.p[v].resize(pairs_[v].size());
      for (size_t k = 0; k < pairs_[v].size(); ++k) {
        const Pair& pr = pairs_[v][k];
        double acc = 0.0;
        for (int d = 0; d < env_.mc_draws; ++d) {
          double uq = env_.q_lo + q_span * chan_rng.uniform();
          double h = -pr.gain * std::log1p(-uq);
          acc += pr.energy_coef / std::log1p(h * pr.snr_per_gain);
        }
        o.p[v][k] = acc / env_.mc_draws;
      }
    }
    return o;
  }

 private:
  struct Pair {
    double gain = 0, snr_per_gain = 0, energy_coef = 0, h_lo = 0, h_hi = 0;
  };

  static double p_at(const Pair& pr, double h) {
    return pr.energy_coef / std::log1p(h * pr.snr_per_gain);
  }

  NetworkConfig net_;
  EnvConfig env_;
  uint64_t seed_;
  std::vector<std::vector<Pair>> pairs_;
};

}  // namespace globe
