#pragma once
// Experiment layer: assembling runnable systems from a config, shared-trace
// policy comparisons, parameter sweeps (matched seeds, parallel points),
// dual-solver convergence studies, and per-slot load snapshots.

#include <atomic>
#include <cmath>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "globe/baselines.hpp"
#include "globe/config.hpp"
#include "globe/controller.hpp"
#include "globe/csv.hpp"
#include "globe/presets.hpp"

namespace globe {

namespace detail {

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v), s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Run fn(0..n-1) on up to `workers` threads; rethrows the first failure.
inline void parallel_for(int n, int workers,
                         const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

// --- assembly -------------------------------------------------------------------

inline std::unique_ptr<Policy> make_policy(const std::string& name,
                                           const NetworkConfig& net,
                                           const GlobeParams& params,
                                           const FullConfig& cfg) {
  if (name == "globe") {
    auto p = std::make_unique<GlobeController>(net, params);
    if (!cfg.globe.theta_override.empty())
      p->set_theta_override(effective_thetas(cfg, net.n(), params.theta));
    return p;
  }
  if (name == "so_ng") return std::make_unique<SoNgPolicy>(net, params);
  if (name == "mo_g") return std::make_unique<MoGPolicy>(net, cfg.globe.epsilon);
  if (name == "mo_ng") return std::make_unique<MoNgPolicy>(net);
  throw ConfigError("policy",
                    "unknown policy '" + name + "' (globe | so_ng | mo_g | mo_ng)");
}

struct RunResult {
  std::string policy;
  uint64_t seed = 0;
  int64_t horizon = 0;
  uint64_t digest = 0;
  double theta = 0;
  double V = 0;
  RunMetrics metrics;
};

// One policy, one seed, one horizon. `source` overrides the seeded
// environment (used for trace replay and shared-trace comparisons).
inline RunResult run_once(const FullConfig& cfg, const std::string& policy_name,
                          uint64_t seed, int64_t T,
                          const SlotSink* sink = nullptr,
                          const ObsSource* source = nullptr) {
  NetworkConfig net = build_network(cfg.network);
  Environment env = make_environment(cfg, net, seed);
  GlobeParams params = make_params(cfg, net, env);
  auto policy = make_policy(policy_name, net, params, cfg);
  std::vector<double> battery0 = initial_battery(cfg, net, params.theta);

  ObsSource env_src = [&env](int64_t t) { return env.observe(t); };
  const ObsSource& src = source ? *source : env_src;

  RunResult r;
  r.policy = policy_name;
  r.seed = seed;
  r.horizon = T;
  r.digest = config_digest(cfg);
  r.theta = params.theta;
  r.V = params.V;
  r.metrics = run_horizon(net, *policy, src, T, std::move(battery0),
                          params.theta, sink);
  return r;
}

inline Trace record_trace(const FullConfig& cfg, uint64_t seed, int64_t T) {
  NetworkConfig net = build_network(cfg.network);
  Environment env = make_environment(cfg, net, seed);
  Trace tr;
  tr.config_digest = config_digest(cfg);
  tr.seed = seed;
  tr.slots.reserve(static_cast<size_t>(T));
  for (int64_t t = 0; t < T; ++t) tr.slots.push_back(env.observe(t));
  return tr;
}

// All policies against the *same* realized randomness, so cost differences
// are policy-induced only.
struct PolicyComparison {
  Trace trace;
  std::vector<RunResult> runs;
};

inline PolicyComparison run_shared_trace(const FullConfig& cfg,
                                         const std::vector<std::string>& policies,
                                         uint64_t seed, int64_t T) {
  PolicyComparison pc;
  pc.trace = record_trace(cfg, seed, T);
  ObsSource src = trace_source(pc.trace);
  pc.runs.reserve(policies.size());
  for (const auto& name : policies)
    pc.runs.push_back(run_once(cfg, name, seed, T, nullptr, &src));
  return pc;
}

// --- sweeps ---------------------------------------------------------------------

enum class SweepAxis { V, GridPriceMean, WorkloadIntensity };

inline SweepAxis axis_from_string(const std::string& s) {
  if (s == "V") return SweepAxis::V;
  if (s == "grid_price_mean") return SweepAxis::GridPriceMean;
  if (s == "workload_intensity") return SweepAxis::WorkloadIntensity;
  throw ConfigError("sweep.axis", "unknown axis '" + s +
                                      "' (V | grid_price_mean | workload_intensity)");
}

// Axis semantics: V sets the cost weight; grid_price_mean sets the mean
// grid price, with a negative value meaning "grid disabled" (g_max = 0);
// workload_intensity sets the mean computation arrival rate as a fraction
// of per-BS capacity.
inline FullConfig apply_axis(FullConfig cfg, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::V:
      cfg.globe.V = value;
      break;
    case SweepAxis::GridPriceMean:
      if (value < 0.0)
        cfg.network.grid_cap = 0.0;
      else
        cfg.env.price_mean = value;
      break;
    case SweepAxis::WorkloadIntensity: {
      double cap = cfg.network.cpu_speed / cfg.network.cycles_per_task -
                   1.0 / cfg.network.delay_bound;
      if (cap <= 0.0)
        throw ConfigError("network.cpu_speed", "no computation capacity");
      cfg.env.comp_rate_mean = value * cap;
      break;
    }
  }
  return cfg;
}

struct SweepSpec {
  SweepAxis axis = SweepAxis::V;
  std::vector<double> values;
  int replicates = 5;
  std::string policy = "globe";
  uint64_t base_seed = 1;
  int64_t horizon = 0;  // 0 = config default
  int workers = 0;      // 0 = hardware concurrency
};

// Matched seeds: replicate r uses base_seed + r at *every* axis value, so a
// pair of points differs only through the axis parameter. mean_battery is
// the second-half (steady-state) average; theta is the derived perturbation
// at that point.
inline std::vector<SweepRow> run_sweep(const FullConfig& base,
                                       const SweepSpec& spec) {
  if (spec.values.size() < 2)
    throw ConfigError("sweep.values", "need at least 2 axis values");
  if (spec.replicates < 1)
    throw ConfigError("sweep.replicates", "need at least 1 replicate");
  const int64_t T = spec.horizon > 0 ? spec.horizon : base.run.horizon;
  const int n = static_cast<int>(spec.values.size());
  int workers = spec.workers > 0
                    ? spec.workers
                    : static_cast<int>(std::thread::hardware_concurrency());

  std::vector<SweepRow> rows(n);
  detail::parallel_for(n, workers, [&](int idx) {
    FullConfig cfg = apply_axis(base, spec.axis, spec.values[idx]);
    std::vector<double> costs, batteries;
    double theta = 0.0;
    for (int r = 0; r < spec.replicates; ++r) {
      RunResult res = run_once(cfg, spec.policy, spec.base_seed + r, T);
      costs.push_back(res.metrics.time_avg_cost);
      batteries.push_back(res.metrics.avg_battery_second_half);
      theta = res.theta;
    }
    SweepRow row;
    row.axis_value = spec.values[idx];
    row.mean_cost = detail::mean_of(costs);
    row.ci95 = costs.size() > 1 ? 1.96 * detail::sample_sd(costs) /
                                      std::sqrt(static_cast<double>(costs.size()))
                                : 0.0;
    row.mean_battery = detail::mean_of(batteries);
    row.theta = theta;
    rows[idx] = row;
  });
  return rows;
}

// --- dual-solver convergence study ------------------------------------------------

struct ConvergenceSlot {
  int64_t t = 0;
  // warm = the controller's own solve (multipliers carried across slots);
  // cold = the same instance re-solved from zero multipliers.
  int warm_first_feasible = -1, cold_first_feasible = -1;
  int warm_iterations = 0, cold_iterations = 0;
  bool warm_converged = false, cold_converged = false;
  double warm_rel_violation = 0, cold_rel_violation = 0;
  double warm_qp = 0, cold_qp = 0;
};

struct ConvergenceStudy {
  std::vector<ConvergenceSlot> slots;
  double frac_within_budget = 0;  // slots whose warm AND cold solves hit the
                                  // capacity tolerance within max_iters
  double median_warm_iters = 0;   // iterations to first feasibility
  double median_cold_iters = 0;
};

// Runs the controller for T slots; each slot's balancing instance is solved
// twice (warm as part of the controller, cold from zero multipliers) to
// measure what warm-starting buys. Slot `dump_slot` (if >= 0) streams both
// solves' per-iteration records into the given sinks.
inline ConvergenceStudy run_convergence_study(
    const FullConfig& cfg, uint64_t seed, int64_t T, int64_t dump_slot = -1,
    ConvergenceSink warm_dump = nullptr, ConvergenceSink cold_dump = nullptr) {
  NetworkConfig net = build_network(cfg.network);
  Environment env = make_environment(cfg, net, seed);
  GlobeParams params = make_params(cfg, net, env);
  GlobeController controller(net, params);
  if (!cfg.globe.theta_override.empty())
    controller.set_theta_override(effective_thetas(cfg, net.n(), params.theta));

  BatteryState bat;
  bat.level = initial_battery(cfg, net, params.theta);
  bat.theta = params.theta;

  ConvergenceStudy study;
  study.slots.reserve(static_cast<size_t>(T));
  const double penalty_iters = static_cast<double>(params.max_iters);
  std::vector<double> warm_iters, cold_iters;
  int64_t ok = 0;

  for (int64_t t = 0; t < T; ++t) {
    SlotObservation obs = env.observe(t);

    if (t == dump_slot && warm_dump) controller.set_convergence_sink(warm_dump);
    SlotDecision dec = controller.decide(obs, bat);
    if (t == dump_slot && warm_dump) controller.set_convergence_sink(nullptr);
    QpSolveReport warm = *controller.last_comp_report();

    // Cold measurement: identical instance, zero multipliers.
    BatteryState pb;
    pb.level = bat.level;
    pb.theta = params.theta;
    CompInstance inst = build_comp_instance(net, obs, pb, params.V);
    std::vector<double> gamma0(net.n(), 0.0);
    std::vector<std::vector<double>> beta_cold;
    QpSolveReport cold =
        solve_distributed(inst, params, gamma0, beta_cold,
                          (t == dump_slot && cold_dump) ? &cold_dump : nullptr);

    ConvergenceSlot s;
    s.t = t;
    s.warm_first_feasible = warm.first_feasible;
    s.cold_first_feasible = cold.first_feasible;
    s.warm_iterations = warm.iterations;
    s.cold_iterations = cold.iterations;
    s.warm_converged = warm.converged;
    s.cold_converged = cold.converged;
    s.warm_rel_violation = warm.max_rel_violation;
    s.cold_rel_violation = cold.max_rel_violation;
    s.warm_qp = warm.qp_objective;
    s.cold_qp = cold.qp_objective;
    study.slots.push_back(s);

    if (warm.first_feasible >= 0 && cold.first_feasible >= 0) ++ok;
    warm_iters.push_back(warm.first_feasible >= 0
                             ? static_cast<double>(warm.first_feasible)
                             : penalty_iters);
    cold_iters.push_back(cold.first_feasible >= 0
                             ? static_cast<double>(cold.first_feasible)
                             : penalty_iters);

    SlotOutcome out = evaluate_slot(net, obs, dec, bat);
    bat.level = out.battery_after;
  }

  study.frac_within_budget = T > 0 ? static_cast<double>(ok) / T : 0.0;
  study.median_warm_iters = detail::median_of(warm_iters);
  study.median_cold_iters = detail::median_of(cold_iters);
  return study;
}

// --- load snapshots ----------------------------------------------------------------

// Per-BS offered (demand arriving at each user's home BS) versus served
// (what the decision actually routed there), plus the battery level: the
// before/after picture of one slot's load balancing.
struct SnapshotRow {
  int bs = 0;
  double offered_tx = 0, served_tx = 0;
  double offered_comp = 0, served_comp = 0;
  double battery = 0;
};

inline std::vector<SnapshotRow> snapshot_slot(const NetworkConfig& net,
                                              const SlotObservation& obs,
                                              const SlotDecision& dec,
                                              const std::vector<double>& battery) {
  std::vector<SnapshotRow> rows(net.n());
  for (int i = 0; i < net.n(); ++i) {
    rows[i].bs = i;
    rows[i].battery = battery[i];
  }
  for (int v = 0; v < net.u(); ++v) {
    const auto& us = net.users[v];
    rows[us.home].offered_tx += obs.mu[v];
    rows[us.home].offered_comp += obs.lambda[v];
    for (size_t k = 0; k < us.candidates.size(); ++k) {
      rows[us.candidates[k]].served_tx += dec.alpha[v][k];
      rows[us.candidates[k]].served_comp += dec.beta[v][k];
    }
  }
  return rows;
}

inline std::string serialize_snapshot(const std::vector<SnapshotRow>& rows) {
  std::ostringstream o;
  o << "bs,offered_tx,served_tx,offered_comp,served_comp,battery\n";
  for (const auto& r : rows)
    o << r.bs << ',' << fmt_g17(r.offered_tx) << ',' << fmt_g17(r.served_tx)
      << ',' << fmt_g17(r.offered_comp) << ',' << fmt_g17(r.served_comp) << ','
      << fmt_g17(r.battery) << '\n';
  return o.str();
}

// Runs policy `policy_name` from slot 0 and captures the decision at `slot`.
inline std::vector<SnapshotRow> run_snapshot(const FullConfig& cfg,
                                             const std::string& policy_name,
                                             uint64_t seed, int64_t slot,
                                             int64_t horizon = 0) {
  const int64_t T = horizon > 0 ? horizon : cfg.run.horizon;
  if (slot < 0 || slot >= T)
    throw ConfigError("snapshot.slot",
                      "slot " + std::to_string(slot) + " out of range [0, " +
                          std::to_string(T) + ")");
  NetworkConfig net = build_network(cfg.network);
  Environment env = make_environment(cfg, net, seed);
  GlobeParams params = make_params(cfg, net, env);
  auto policy = make_policy(policy_name, net, params, cfg);

  BatteryState bat;
  bat.level = initial_battery(cfg, net, params.theta);
  bat.theta = params.theta;

  for (int64_t t = 0;; ++t) {
    SlotObservation obs = env.observe(t);
    SlotDecision dec = policy->decide(obs, bat);
    if (t == slot) return snapshot_slot(net, obs, dec, bat.level);
    SlotOutcome out = evaluate_slot(net, obs, dec, bat);
    bat.level = out.battery_after;
  }
}

}  // namespace globe
