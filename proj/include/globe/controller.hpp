#pragma once
// The per-slot orchestration: observe -> closed-form energy decision ->
// per-user traffic routing -> dual-decomposition computation balancing ->
// battery update. Owns theta, V, and the causality guarantee.

#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "globe/comp_lb.hpp"
#include "globe/energy_policy.hpp"
#include "globe/model.hpp"
#include "globe/tx_lb.hpp"

namespace globe {

// Common interface of all per-slot policies.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  // Decisions are indexed against the *original* network config the runner
  // evaluates with, regardless of any internal topology restriction.
  virtual SlotDecision decide(const SlotObservation& obs,
                              const BatteryState& bat) = 0;
  // True if the policy guarantees per-slot energy causality E_i <= B_i;
  // the runner turns flagged violations into hard errors for such policies.
  virtual bool causality_guaranteed() const = 0;
  virtual const QpSolveReport* last_comp_report() const { return nullptr; }
  virtual void reset() {}
};

// The drift-plus-penalty objective a slot decision is scored by:
//   V * cost(dec) + sum_i b_tilde_i * (e_i + g_i - E_i(dec)).
// The controller minimizes this each slot; exposed for dominance tests.
inline double p3_objective(const NetworkConfig& net, const SlotObservation& obs,
                           const BatteryState& bat, double V,
                           const SlotDecision& dec) {
  std::vector<double> energy(net.n(), 0.0);
  double cost = 0.0;
  for (int v = 0; v < net.u(); ++v) {
    const auto& us = net.users[v];
    double atot = 0.0, btot = 0.0;
    for (size_t k = 0; k < us.candidates.size(); ++k) {
      int i = us.candidates[k];
      energy[i] += obs.p[v][k] * dec.alpha[v][k] +
                   net.comp_energy_per_task(i) * dec.beta[v][k];
      atot += dec.alpha[v][k];
      btot += dec.beta[v][k];
    }
    cost += us.c_tx * (obs.mu[v] - atot) + us.c_com * (obs.lambda[v] - btot);
  }
  double obj = 0.0;
  for (int i = 0; i < net.n(); ++i) {
    cost += obs.price * dec.g[i];
    obj += bat.b_tilde(i) * (dec.e[i] + dec.g[i] - energy[i]);
  }
  return V * cost + obj;
}

class GlobeController : public Policy {
 public:
  GlobeController(NetworkConfig net, GlobeParams params,
                  std::string name = "globe")
      : net_(std::move(net)), params_(params), name_(std::move(name)) {
    net_.validate();
    g_max_.resize(net_.n());
    for (int i = 0; i < net_.n(); ++i) g_max_[i] = net_.bs[i].grid_cap;
  }

  std::string name() const override { return name_; }
  bool causality_guaranteed() const override { return true; }
  const GlobeParams& params() const { return params_; }
  const NetworkConfig& net() const { return net_; }
  const QpSolveReport* last_comp_report() const override { return &comp_report_; }
  const std::vector<double>& dual_state() const { return dual_.gamma; }

  void set_convergence_sink(ConvergenceSink sink) { sink_ = std::move(sink); }
  // Experimental: per-BS perturbation targets (size n). Overrides the derived
  // global theta in the decision rule; no optimality guarantees.
  void set_theta_override(std::vector<double> thetas) {
    if (!thetas.empty() && static_cast<int>(thetas.size()) != net_.n())
      throw ConfigError("globe.theta_override", "needs n_bs values");
    theta_override_ = std::move(thetas);
  }
  void reset() override { dual_.reset(); }

  SlotDecision decide(const SlotObservation& obs,
                      const BatteryState& bat) override {
    guard_p_bound(obs);

    // Use this controller's own perturbation regardless of what the runner
    // stamped on the state. A per-BS override is folded in as a level shift
    // so that pb.b_tilde(i) = level_i - theta_override_i.
    BatteryState pb;
    pb.level = bat.level;
    pb.theta = params_.theta;
    if (!theta_override_.empty())
      for (int i = 0; i < net_.n(); ++i)
        pb.level[i] += params_.theta - theta_override_[i];
    std::vector<double> b_tilde(net_.n());
    for (int i = 0; i < net_.n(); ++i) b_tilde[i] = pb.b_tilde(i);

    SlotDecision dec;
    EnergyDecision ed = decide_energy(b_tilde, obs.harvest, obs.price,
                                      params_.V, g_max_);
    dec.e = std::move(ed.e);
    dec.g = std::move(ed.g);

    route_all_traffic(net_, obs, pb, params_.V, dec.alpha);

    CompInstance inst = build_comp_instance(net_, obs, pb, params_.V);
    if (!params_.warm_start) dual_.reset();
    comp_report_ = solve_distributed(inst, params_, dual_, dec.beta,
                                     sink_ ? &sink_ : nullptr);
    return dec;
  }

 private:
  void guard_p_bound(const SlotObservation& obs) const {
    if (params_.bounds.p_min <= 0.0) return;
    for (const auto& row : obs.p)
      for (double p : row)
        if (p < params_.bounds.p_min)
          throw std::logic_error(
              "realized per-unit tx energy " + fmt_g17(p) +
              " fell below the configured lower bound " +
              fmt_g17(params_.bounds.p_min) +
              "; the battery-causality guarantee is void (fix p_min_bound)");
  }

  NetworkConfig net_;
  GlobeParams params_;
  std::string name_;
  std::vector<double> g_max_;
  DualState dual_;
  std::vector<double> theta_override_;
  QpSolveReport comp_report_;
  ConvergenceSink sink_;
};

// --- horizon runner -------------------------------------------------------------

struct RunMetrics {
  int64_t horizon = 0;
  double time_avg_cost = 0;                      // (1/T) sum of slot costs
  double avg_cost_tx = 0, avg_cost_com = 0, avg_cost_grid = 0;
  double offered_tx = 0, offered_comp = 0;       // totals over the run
  double dropped_tx = 0, dropped_comp = 0;       // totals over the run
  double tx_drop_rate = 0, comp_drop_rate = 0;
  std::vector<double> mean_battery;              // per BS, over all slots
  double avg_battery = 0;                        // network mean of the above
  double avg_battery_second_half = 0;            // steady-state proxy
  double total_purchased = 0;                    // J
  int64_t causality_flags = 0;
  // Dual-solver stats (zero for policies without one).
  double solver_mean_iters = 0;
  int solver_max_iters = 0;
  int64_t solver_unconverged = 0;
  double wall_time_s = 0;
};

// Everything a per-slot observer might want to see.
struct SlotRecord {
  int64_t t;
  const SlotObservation& obs;
  const SlotDecision& dec;
  const SlotOutcome& out;
  const BatteryState& bat_before;
  double running_avg_cost;
  double running_avg_battery;
};
using SlotSink = std::function<void(const SlotRecord&)>;

using ObsSource = std::function<SlotObservation(int64_t)>;

inline RunMetrics run_horizon(const NetworkConfig& net, Policy& policy,
                              const ObsSource& source, int64_t T,
                              std::vector<double> battery0,
                              double theta_for_reporting = 0.0,
                              const SlotSink* sink = nullptr) {
  if (T < 1) throw std::invalid_argument("run_horizon: T must be >= 1");
  auto t0 = std::chrono::steady_clock::now();

  BatteryState bat;
  bat.level = std::move(battery0);
  bat.theta = theta_for_reporting;

  RunMetrics m;
  m.horizon = T;
  m.mean_battery.assign(net.n(), 0.0);
  double cost_sum = 0, cost_tx_sum = 0, cost_com_sum = 0, cost_grid_sum = 0;
  double bat_sum_all = 0, bat_sum_second_half = 0;
  int64_t second_half_slots = 0;
  double iter_sum = 0;
  int64_t solver_slots = 0;

  for (int64_t t = 0; t < T; ++t) {
    SlotObservation obs = source(t);
    SlotDecision dec = policy.decide(obs, bat);
    SlotOutcome out = evaluate_slot(net, obs, dec, bat);

    if (out.any_causality_violation) {
      ++m.causality_flags;
      if (policy.causality_guaranteed())
        throw std::logic_error(
            "policy '" + policy.name() + "' violated energy causality at slot " +
            std::to_string(t) + " despite guaranteeing it (derivation bug)");
    }

    cost_sum += out.total_cost;
    cost_tx_sum += out.total_cost_tx;
    cost_com_sum += out.total_cost_com;
    cost_grid_sum += out.total_cost_grid;
    for (int v = 0; v < net.u(); ++v) {
      m.offered_tx += obs.mu[v];
      m.offered_comp += obs.lambda[v];
    }
    m.dropped_tx += out.total_dropped_tx;
    m.dropped_comp += out.total_dropped_comp;
    double bat_mean_now = 0;
    for (int i = 0; i < net.n(); ++i) {
      m.mean_battery[i] += bat.level[i];
      bat_mean_now += bat.level[i];
      m.total_purchased += dec.g[i];
    }
    bat_mean_now /= net.n();
    bat_sum_all += bat_mean_now;
    if (t >= T / 2) {
      bat_sum_second_half += bat_mean_now;
      ++second_half_slots;
    }
    if (const QpSolveReport* rep = policy.last_comp_report()) {
      iter_sum += rep->iterations;
      m.solver_max_iters = std::max(m.solver_max_iters, rep->iterations);
      if (!rep->converged) ++m.solver_unconverged;
      ++solver_slots;
    }

    if (sink && *sink) {
      SlotRecord rec{t,   obs, dec, out, bat,
                     cost_sum / static_cast<double>(t + 1),
                     bat_sum_all / static_cast<double>(t + 1)};
      (*sink)(rec);
    }

    bat.level = out.battery_after;
    for (int i = 0; i < net.n(); ++i)
      if (bat.level[i] < -1e-9 * std::max(1.0, net.bs[i].battery_cap) &&
          policy.causality_guaranteed())
        throw std::logic_error("policy '" + policy.name() +
                               "' drove battery " + std::to_string(i) +
                               " negative at slot " + std::to_string(t));
  }

  const double Td = static_cast<double>(T);
  m.time_avg_cost = cost_sum / Td;
  m.avg_cost_tx = cost_tx_sum / Td;
  m.avg_cost_com = cost_com_sum / Td;
  m.avg_cost_grid = cost_grid_sum / Td;
  m.tx_drop_rate = m.offered_tx > 0 ? m.dropped_tx / m.offered_tx : 0.0;
  m.comp_drop_rate = m.offered_comp > 0 ? m.dropped_comp / m.offered_comp : 0.0;
  for (auto& b : m.mean_battery) b /= Td;
  m.avg_battery = bat_sum_all / Td;
  m.avg_battery_second_half =
      second_half_slots > 0 ? bat_sum_second_half / second_half_slots : 0.0;
  if (solver_slots > 0) m.solver_mean_iters = iter_sum / solver_slots;
  m.wall_time_s = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0).count();
  return m;
}

}  // namespace globe
