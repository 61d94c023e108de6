#pragma once
// Domain types and bookkeeping shared by every policy: network description,
// per-slot observation/decision/outcome, parameter derivation (c_max, E_max,
// theta, admissible V range), M/M/1 delay, and the slot evaluator.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "globe/util.hpp"

namespace globe {

struct BsSpec {
  double cpu_speed = 2.4e9;    // f_i, CPU cycles per second
  double tx_power = 1.0;       // P_tx,i, transmit power in W
  double grid_cap = 25.0;      // g^max, max grid purchase per slot in J
  double battery_cap = 700.0;  // B^max in J
};

struct UserSpec {
  int home = 0;                 // home BS index
  std::vector<int> candidates;  // BSs that may serve this user (includes home)
  double c_tx = 10.0;           // cost per dropped traffic unit
  double c_com = 0.01;          // cost per dropped computation task
  double data_size = 1e8;       // omega_u, bits per traffic unit
};

struct NetworkConfig {
  std::vector<BsSpec> bs;
  std::vector<UserSpec> users;

  double bandwidth = 2e7;        // W in Hz
  double noise = 0.01;           // sigma^2 in W
  double cycles_per_task = 8e5;  // rho
  double delay_bound = 1e-3;     // d^max in s
  double energy_coeff = 2.5e-22; // kappa; energy per task = kappa * f_i^2
  double harvest_cap = 10.0;     // per-slot max harvestable energy in J
  double mu_max = 10.0;          // per-user traffic cap, units/slot
  double lam_max = 6000.0;       // per-user task cap, tasks/slot

  int n() const { return static_cast<int>(bs.size()); }
  int u() const { return static_cast<int>(users.size()); }

  // Computation capacity of BS i in tasks/slot: the largest admissible load
  // for which the M/M/1 sojourn time stays within delay_bound.
  double capacity(int i) const {
    return bs[i].cpu_speed / cycles_per_task - 1.0 / delay_bound;
  }

  // Energy per computed task at BS i (kappa * f_i^2).
  double comp_energy_per_task(int i) const {
    return energy_coeff * bs[i].cpu_speed * bs[i].cpu_speed;
  }

  // Position of BS j in user u's candidate list, or -1.
  int candidate_index(int u_, int j) const {
    const auto& c = users[u_].candidates;
    for (int k = 0; k < static_cast<int>(c.size()); ++k)
      if (c[k] == j) return k;
    return -1;
  }

  void validate() const {
    if (bs.empty()) throw ConfigError("network.n_bs", "network has no BSs");
    if (users.empty()) throw ConfigError("network.users", "network has no users");
    for (int i = 0; i < n(); ++i) {
      const auto& b = bs[i];
      if (b.cpu_speed <= 0) throw ConfigError("bs.cpu_speed", "must be > 0");
      if (b.tx_power <= 0) throw ConfigError("bs.tx_power", "must be > 0");
      if (b.grid_cap < 0) throw ConfigError("bs.grid_cap", "must be >= 0");
      if (b.battery_cap <= 0) throw ConfigError("bs.battery_cap", "must be > 0");
      if (capacity(i) <= 0)
        throw ConfigError("bs.cpu_speed",
                          "cpu_speed/cycles_per_task - 1/delay_bound must be > 0 "
                          "(BS " + std::to_string(i) + " has no computation capacity)");
    }
    for (int v = 0; v < u(); ++v) {
      const auto& us = users[v];
      if (us.home < 0 || us.home >= n())
        throw ConfigError("user.home", "home BS index out of range");
      if (us.candidates.empty())
        throw ConfigError("user.candidates", "candidate set must be non-empty");
      bool home_in = false;
      for (int j : us.candidates) {
        if (j < 0 || j >= n())
          throw ConfigError("user.candidates", "BS index out of range");
        if (j == us.home) home_in = true;
      }
      if (!home_in)
        throw ConfigError("user.candidates", "candidate set must contain the home BS");
      if (us.c_tx < 0 || us.c_com < 0)
        throw ConfigError("user.costs", "drop costs must be >= 0");
      if (us.data_size <= 0) throw ConfigError("user.data_size", "must be > 0");
    }
    if (bandwidth <= 0) throw ConfigError("network.bandwidth", "must be > 0");
    if (noise <= 0) throw ConfigError("network.noise", "must be > 0");
    if (cycles_per_task <= 0) throw ConfigError("network.cycles_per_task", "must be > 0");
    if (delay_bound <= 0) throw ConfigError("network.delay_bound", "must be > 0");
    if (energy_coeff <= 0) throw ConfigError("network.energy_coeff", "must be > 0");
    if (harvest_cap < 0) throw ConfigError("network.harvest_cap", "must be >= 0");
    if (mu_max < 0 || lam_max < 0)
      throw ConfigError("network.arrival_caps", "must be >= 0");
  }
};

// One slot's exogenous state.
struct SlotObservation {
  int64_t t = 0;
  std::vector<double> mu;       // per-user traffic demand, units
  std::vector<double> lambda;   // per-user computation demand, tasks
  std::vector<double> harvest;  // per-BS harvestable energy, J
  double price = 0.0;           // grid energy price, cost/J
  // p[u][k]: expected energy (J) per traffic unit of user u when transmitted
  // by candidate k (aligned with users[u].candidates).
  std::vector<std::vector<double>> p;
};

struct BatteryState {
  std::vector<double> level;  // B_i in J
  double theta = 0.0;         // perturbation target

  double b_tilde(int i) const { return level[i] - theta; }
};

// One slot's decision. alpha/beta are aligned with each user's candidate list.
struct SlotDecision {
  std::vector<std::vector<double>> alpha;  // routed traffic units
  std::vector<std::vector<double>> beta;   // routed computation tasks
  std::vector<double> e;                   // harvested energy per BS, J
  std::vector<double> g;                   // grid purchase per BS, J

  static SlotDecision zeros(const NetworkConfig& net) {
    SlotDecision d;
    d.alpha.resize(net.u());
    d.beta.resize(net.u());
    for (int v = 0; v < net.u(); ++v) {
      d.alpha[v].assign(net.users[v].candidates.size(), 0.0);
      d.beta[v].assign(net.users[v].candidates.size(), 0.0);
    }
    d.e.assign(net.n(), 0.0);
    d.g.assign(net.n(), 0.0);
    return d;
  }
};

// Realized energies, costs, drops and the post-update battery for one slot.
struct SlotOutcome {
  std::vector<double> e_tx, e_com;                    // per BS, J
  std::vector<double> cost_tx, cost_com, cost_grid;   // per BS
  std::vector<double> dropped_tx, dropped_comp;       // per user
  std::vector<double> battery_after;                  // per BS
  std::vector<bool> causality_violated;               // E_i > B_i (flagged, not repaired)

  double total_cost = 0, total_cost_tx = 0, total_cost_com = 0, total_cost_grid = 0;
  double total_dropped_tx = 0, total_dropped_comp = 0;
  bool any_causality_violation = false;
};

// Derived worst-case bounds used by the perturbation construction.
struct DerivedBounds {
  double c_max = 0;      // max unit drop-cost per joule across services
  double e_tx_max = 0;   // worst-case per-slot transmission energy at one BS
  double e_com_max = 0;  // worst-case per-slot computation energy at one BS
  double e_max = 0;      // e_tx_max + e_com_max
  double p_min = 0;      // lower bound on any realized per-unit tx energy
};

// Controller parameters (weights, perturbation, solver knobs).
struct GlobeParams {
  double V = 20.0;       // cost weight; larger V = closer to optimal cost
  double theta = 0.0;    // battery perturbation target, J
  double epsilon = 1e7;  // QP regularization weight

  DerivedBounds bounds;

  // Dual (capacity) solver knobs.
  double delta0 = 0.0;         // base step size; 0 = auto-scale per instance
  double delta0_scale = 0.001;  // auto-scale factor
  int max_iters = 5000;
  double tol_violation = 1e-6;  // relative to each BS capacity
  double tol_dual = 1e-8;       // relative multiplier movement
  int stall_window = 100;       // stop after this many non-improving iters
  bool warm_start = true;
  double warm_step = 5.0;  // warm-start step floor, as a multiple of delta0
};

// M/M/1 sojourn time for the given task load (tasks/s) at service rate f/rho.
inline double mm1_delay(double load, double f, double rho) {
  const double service = f / rho;
  if (load >= service)
    throw std::domain_error("mm1_delay: load >= service rate (unstable queue)");
  return 1.0 / (service - load);
}

// --- parameter derivation ----------------------------------------------------

// pair_p_max[u][k]: upper bound on the per-unit tx energy of (user u,
// candidate k). Together with p_min_bound these come from the channel
// generator's exact quantile truncation (see Environment) or from explicit
// config overrides.
inline DerivedBounds derive_bounds(const NetworkConfig& net, double p_min_bound,
                                   const std::vector<std::vector<double>>& pair_p_max) {
  if (!(p_min_bound > 0.0))
    throw ConfigError("p_min_bound", "lower bound on tx energy must be > 0");
  DerivedBounds b;
  b.p_min = p_min_bound;

  double f_min = std::numeric_limits<double>::infinity();
  for (const auto& s : net.bs) f_min = std::min(f_min, s.cpu_speed);

  double worst_service_cost = 0.0;  // max_u c_tx,u / p_min
  double worst_comp_cost = 0.0;     // max_u c_com,u / (kappa f_min^2)
  for (const auto& us : net.users) {
    worst_service_cost = std::max(worst_service_cost, us.c_tx / p_min_bound);
    worst_comp_cost = std::max(
        worst_comp_cost, us.c_com / (net.energy_coeff * f_min * f_min));
  }
  b.c_max = std::max(worst_service_cost, worst_comp_cost);

  // Worst-case one-slot tx energy at a BS: every routable user sends its cap
  // through that BS at that pair's worst-case per-unit energy.
  for (int i = 0; i < net.n(); ++i) {
    double e_tx = 0.0;
    for (int v = 0; v < net.u(); ++v) {
      int k = net.candidate_index(v, i);
      if (k >= 0) e_tx += pair_p_max[v][k] * net.mu_max;
    }
    b.e_tx_max = std::max(b.e_tx_max, e_tx);
    b.e_com_max = std::max(b.e_com_max,
                           net.comp_energy_per_task(i) * net.capacity(i));
  }
  b.e_max = b.e_tx_max + b.e_com_max;
  return b;
}

// Admissible V range: the battery must be able to absorb the worst-case
// inflow on top of the perturbation target.
inline double derive_v_max(const NetworkConfig& net, const DerivedBounds& b) {
  double v_max = std::numeric_limits<double>::infinity();
  for (const auto& s : net.bs) {
    double headroom = s.battery_cap - b.e_max - net.harvest_cap - s.grid_cap;
    if (headroom <= 0.0)
      throw ConfigError(
          "bs.battery_cap",
          "battery_cap must exceed E_max + harvest_cap + grid_cap = " +
              fmt_g17(b.e_max + net.harvest_cap + s.grid_cap) +
              " J for the battery-bound guarantee to hold");
    if (b.c_max > 0.0) v_max = std::min(v_max, headroom / b.c_max);
  }
  return v_max;
}

inline double derive_theta(double V, const DerivedBounds& b) {
  return V * b.c_max + b.e_max;
}

inline GlobeParams make_globe_params(const NetworkConfig& net,
                                     const DerivedBounds& b, double V,
                                     double epsilon = 1e7) {
  if (V < 0) throw ConfigError("globe.V", "must be >= 0");
  double v_max = derive_v_max(net, b);
  if (V > v_max * (1.0 + 1e-12))
    throw ConfigError("globe.V", "V = " + fmt_g17(V) +
                                     " exceeds the admissible maximum " +
                                     fmt_g17(v_max));
  GlobeParams p;
  p.V = V;
  p.epsilon = epsilon;
  p.bounds = b;
  p.theta = derive_theta(V, b);
  return p;
}

// --- slot evaluation ----------------------------------------------------------

// Validates a decision against the observation and computes realized
// energies, costs, drops and the battery update
//   B' = min(B - E + e + g, B^max).
// Constraint violations (budgets, boxes, capacity) are rejected; energy
// causality (E_i <= B_i) is *flagged*, never repaired, because myopic
// policies may legitimately spend same-slot purchases.
inline SlotOutcome evaluate_slot(const NetworkConfig& net,
                                 const SlotObservation& obs,
                                 const SlotDecision& dec,
                                 const BatteryState& bat) {
  const int N = net.n(), U = net.u();
  const double rel = 1e-9;
  auto leq = [rel](double x, double b, double scale) {
    return x <= b + rel * std::max({1.0, std::fabs(b), scale});
  };

  SlotOutcome out;
  out.e_tx.assign(N, 0.0);
  out.e_com.assign(N, 0.0);
  out.cost_tx.assign(N, 0.0);
  out.cost_com.assign(N, 0.0);
  out.cost_grid.assign(N, 0.0);
  out.dropped_tx.assign(U, 0.0);
  out.dropped_comp.assign(U, 0.0);
  out.battery_after.assign(N, 0.0);
  out.causality_violated.assign(N, false);

  std::vector<double> comp_load(N, 0.0);
  for (int v = 0; v < U; ++v) {
    const auto& cand = net.users[v].candidates;
    double atot = 0.0, btot = 0.0;
    for (size_t k = 0; k < cand.size(); ++k) {
      double a = dec.alpha[v][k], bta = dec.beta[v][k];
      if (a < -rel || bta < -rel)
        throw FeasibilityError("nonnegativity",
                               "negative routed amount for user " + std::to_string(v));
      int i = cand[k];
      out.e_tx[i] += obs.p[v][k] * a;
      out.e_com[i] += net.comp_energy_per_task(i) * bta;
      comp_load[i] += bta;
      atot += a;
      btot += bta;
    }
    if (!leq(atot, obs.mu[v], obs.mu[v]))
      throw FeasibilityError("tx_budget", "user " + std::to_string(v) +
                                              " routes more traffic than demanded");
    if (!leq(btot, obs.lambda[v], obs.lambda[v]))
      throw FeasibilityError("comp_budget", "user " + std::to_string(v) +
                                                " routes more tasks than demanded");
    out.dropped_tx[v] = std::max(0.0, obs.mu[v] - atot);
    out.dropped_comp[v] = std::max(0.0, obs.lambda[v] - btot);
    out.cost_tx[net.users[v].home] += net.users[v].c_tx * out.dropped_tx[v];
    out.cost_com[net.users[v].home] += net.users[v].c_com * out.dropped_comp[v];
    out.total_dropped_tx += out.dropped_tx[v];
    out.total_dropped_comp += out.dropped_comp[v];
  }

  for (int i = 0; i < N; ++i) {
    if (!leq(comp_load[i], net.capacity(i), net.capacity(i)))
      throw FeasibilityError("comp_capacity",
                             "BS " + std::to_string(i) + " load " +
                                 fmt_g17(comp_load[i]) + " exceeds capacity " +
                                 fmt_g17(net.capacity(i)));
    if (dec.e[i] < -rel || !leq(dec.e[i], obs.harvest[i], net.harvest_cap))
      throw FeasibilityError("harvest_box",
                             "BS " + std::to_string(i) + " harvest outside [0, arrival]");
    if (dec.g[i] < -rel || !leq(dec.g[i], net.bs[i].grid_cap, net.bs[i].grid_cap))
      throw FeasibilityError("grid_box",
                             "BS " + std::to_string(i) + " purchase outside [0, g_max]");

    out.cost_grid[i] = obs.price * dec.g[i];
    const double spent = out.e_tx[i] + out.e_com[i];
    if (spent > bat.level[i] * (1.0 + rel) + rel) {
      out.causality_violated[i] = true;
      out.any_causality_violation = true;
    }
    out.battery_after[i] = std::min(
        bat.level[i] - spent + dec.e[i] + dec.g[i], net.bs[i].battery_cap);

    out.total_cost_tx += out.cost_tx[i];
    out.total_cost_com += out.cost_com[i];
    out.total_cost_grid += out.cost_grid[i];
  }
  out.total_cost = out.total_cost_tx + out.total_cost_com + out.total_cost_grid;
  return out;
}

}  // namespace globe
