#pragma once
// Computation load balancing: the capacity-coupled regularized QP, solved two
// ways. solve_distributed runs the message-passing dual-decomposition loop
// (per-user closed-form inner solves + projected-subgradient multiplier
// updates). solve_centralized is the exact reference: the QP maximizer equals
// the Euclidean projection of eps*coef onto the feasible polytope, computed by
// cyclic exact coordinate ascent on the dual offsets.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "globe/model.hpp"
#include "globe/qp.hpp"

namespace globe {

// One slot's computation-allocation problem:
//   maximize sum_{u,k} coef[u][k] * beta[u][k] - (1/2eps) * beta^2
//   s.t. beta >= 0, sum_k beta[u][k] <= budget[u], per-BS load <= cap[i].
struct CompInstance {
  std::vector<std::vector<double>> coef;  // value per task, per (user, candidate)
  std::vector<double> budget;             // per-user task budget
  std::vector<double> cap;                // per-BS capacity
  std::vector<std::vector<int>> cand;     // candidate BS indices per user
  int n_bs = 0;

  int n_users() const { return static_cast<int>(coef.size()); }

  double coef_scale() const {
    double s = 0.0;
    for (const auto& row : coef)
      for (double c : row) s = std::max(s, std::fabs(c));
    return s;
  }
};

inline CompInstance build_comp_instance(const NetworkConfig& net,
                                        const SlotObservation& obs,
                                        const BatteryState& bat, double V) {
  CompInstance inst;
  inst.n_bs = net.n();
  inst.cap.resize(net.n());
  for (int i = 0; i < net.n(); ++i) inst.cap[i] = net.capacity(i);
  inst.coef.resize(net.u());
  inst.cand.resize(net.u());
  inst.budget.resize(net.u());
  for (int v = 0; v < net.u(); ++v) {
    const auto& us = net.users[v];
    inst.cand[v] = us.candidates;
    inst.budget[v] = obs.lambda[v];
    inst.coef[v].resize(us.candidates.size());
    for (size_t k = 0; k < us.candidates.size(); ++k) {
      int j = us.candidates[k];
      inst.coef[v][k] = V * us.c_com + bat.b_tilde(j) * net.comp_energy_per_task(j);
    }
  }
  return inst;
}

struct QpSolveReport {
  int iterations = 0;       // dual iterations (or sweeps) executed
  int first_feasible = -1;  // first iteration whose iterate met the capacity
                            // tolerance; -1 if none
  bool converged = false;
  double max_violation = 0.0;      // max_i (load_i - cap_i)+ of the returned
                                   // iterate, before the exactness repair
  double max_rel_violation = 0.0;  // same, relative to each cap
  double qp_objective = 0.0;       // at the returned (repaired) beta
  double lp_objective = 0.0;       // linear part only, at the returned beta
};

// Projected-subgradient multiplier update for one BS.
inline double dual_update(double gamma_i, double delta_k, double capacity,
                          double load) {
  return std::max(0.0, gamma_i - delta_k * (capacity - load));
}

struct ConvergenceRecord {
  int k = 0;
  std::vector<double> gamma;
  double qp_obj = 0.0;
  double lp_obj = 0.0;
  double max_violation = 0.0;
};
using ConvergenceSink = std::function<void(const ConvergenceRecord&)>;

namespace detail {

inline void comp_loads(const CompInstance& inst,
                       const std::vector<std::vector<double>>& beta,
                       std::vector<double>& load) {
  load.assign(inst.n_bs, 0.0);
  for (int v = 0; v < inst.n_users(); ++v)
    for (size_t k = 0; k < inst.cand[v].size(); ++k)
      load[inst.cand[v][k]] += beta[v][k];
}

inline void comp_objectives(const CompInstance& inst, double eps,
                            const std::vector<std::vector<double>>& beta,
                            double& qp, double& lp) {
  qp = lp = 0.0;
  for (int v = 0; v < inst.n_users(); ++v)
    for (size_t k = 0; k < inst.cand[v].size(); ++k) {
      double b = beta[v][k];
      lp += inst.coef[v][k] * b;
      qp += inst.coef[v][k] * b - b * b / (2.0 * eps);
    }
}

// Scale each overloaded BS's allocations down to exact capacity. Never
// breaks user budgets (pure shrinkage).
inline void repair_capacity(const CompInstance& inst,
                            std::vector<std::vector<double>>& beta) {
  std::vector<double> load;
  comp_loads(inst, beta, load);
  std::vector<double> scale(inst.n_bs, 1.0);
  bool any = false;
  for (int i = 0; i < inst.n_bs; ++i)
    if (load[i] > inst.cap[i]) {
      scale[i] = (load[i] > 0.0) ? inst.cap[i] / load[i] : 0.0;
      any = true;
    }
  if (!any) return;
  for (int v = 0; v < inst.n_users(); ++v)
    for (size_t k = 0; k < inst.cand[v].size(); ++k)
      beta[v][k] *= scale[inst.cand[v][k]];
}

}  // namespace detail

// --- distributed solver --------------------------------------------------------

// Multiplier state each BS keeps between solves: the warm-start multiplier
// and the adapted step size it settled at. Warm solves resume near the
// previous optimum with steps sized to the slot-to-slot drift, which is what
// makes them converge in a small fraction of the cold-start iterations.
struct DualState {
  std::vector<double> gamma;
  std::vector<double> step;

  void reset() {
    gamma.clear();
    step.clear();
  }
};

// Dual-decomposition loop: each user solves its closed-form inner subproblem
// at the current multipliers; multipliers follow a projected subgradient with
// locally adapted diminishing steps. The best capacity-feasible iterate seen
// (by QP objective) is returned; `state` carries warm-start multipliers and
// step adaptation across calls. The returned beta always satisfies the
// capacity exactly (a final proportional repair covers the within-tolerance
// residual).
inline QpSolveReport solve_distributed(const CompInstance& inst,
                                       const GlobeParams& params,
                                       DualState& state,
                                       std::vector<std::vector<double>>& beta,
                                       const ConvergenceSink* sink = nullptr) {
  const int U = inst.n_users(), N = inst.n_bs;
  const double eps = params.epsilon;
  state.gamma.resize(N, 0.0);
  std::vector<double>& gamma = state.gamma;

  beta.resize(U);
  for (int v = 0; v < U; ++v) beta[v].assign(inst.cand[v].size(), 0.0);

  // Normalized subgradient step in multiplier (coefficient) units. The load
  // is a near-step function of gamma_i: a breakpoint crossing dumps or sheds
  // an entire user's spill, so the gap magnitude says nothing about how far
  // gamma_i is from its target, and a step proportional to the gap stalls on
  // plateaus where the load does not respond to gamma_i at all (every user
  // budget-bound). Each BS therefore moves its multiplier by a step size
  // adapted purely from the sign history of its own gap: a persistent sign
  // grows the step geometrically (plateau crossing in logarithmic time), a
  // sign flip halves it (bisection onto the boundary, which is what reaches a
  // 1e-6 violation tolerance quickly). Cold starts ramp from delta0; warm
  // starts resume from the carried step, floored at a few delta0 so a solve
  // that ended deep in refinement can still track the per-slot drift.
  double delta0 = params.delta0;
  if (delta0 <= 0.0)
    delta0 = params.delta0_scale * std::max(inst.coef_scale(), 1e-300);
  const double step_max = 0.25 * std::max(inst.coef_scale(), 1e-300);
  const double step_min = 1e-12 * delta0;
  const double warm0 = std::min(step_max, params.warm_step * delta0);
  std::vector<double> step(N);
  std::vector<int> prev_sign(N, 0);
  const bool carried = static_cast<int>(state.step.size()) == N;
  for (int i = 0; i < N; ++i)
    step[i] = carried ? std::clamp(state.step[i], warm0, step_max) : delta0;

  QpSolveReport rep;
  std::vector<double> load(N), cvec, bvec;
  std::vector<std::vector<double>> beta_best;
  double best_qp = -std::numeric_limits<double>::infinity();
  double best_viol = 0.0, best_rel_viol = 0.0;
  int stall = 0;
  bool stopped = false;

  int k = 0;
  while (k < params.max_iters && !stopped) {
    ++k;
    // Inner solves at the current multipliers.
    for (int v = 0; v < U; ++v) {
      const auto& cd = inst.cand[v];
      cvec.resize(cd.size());
      for (size_t j = 0; j < cd.size(); ++j)
        cvec[j] = inst.coef[v][j] - gamma[cd[j]];
      inner_subproblem(cvec, inst.budget[v], eps, bvec);
      beta[v] = bvec;
    }
    detail::comp_loads(inst, beta, load);

    double viol = 0.0, rel_viol = 0.0;
    for (int i = 0; i < N; ++i) {
      double over = load[i] - inst.cap[i];
      viol = std::max(viol, over);
      rel_viol = std::max(over / std::max(1.0, inst.cap[i]), rel_viol);
    }
    double qp, lp;
    detail::comp_objectives(inst, eps, beta, qp, lp);
    if (sink && *sink) {
      ConvergenceRecord rec;
      rec.k = k;
      rec.gamma = gamma;
      rec.qp_obj = qp;
      rec.lp_obj = lp;
      rec.max_violation = std::max(0.0, viol);
      (*sink)(rec);
    }

    const bool feasible = rel_viol <= params.tol_violation;
    if (feasible) {
      if (rep.first_feasible < 0) rep.first_feasible = k;
      if (beta_best.empty() ||
          qp > best_qp + 1e-12 * std::max(1.0, std::fabs(best_qp))) {
        best_qp = qp;
        beta_best = beta;
        best_viol = std::max(0.0, viol);
        best_rel_viol = std::max(0.0, rel_viol);
        stall = 0;
      } else {
        ++stall;
      }
    } else if (rep.first_feasible >= 0) {
      ++stall;
    }

    // Projected normalized-subgradient step on the capacity multipliers.
    double dgamma = 0.0, gnorm = 0.0;
    for (int i = 0; i < N; ++i) {
      double gap = inst.cap[i] - load[i];
      if (gamma[i] == 0.0 && gap >= 0.0) {
        // Inactive multiplier at a slack BS: nothing to do. Re-arm the step
        // so a later activation starts from the warm scale, not from
        // whatever refinement left behind.
        prev_sign[i] = 0;
        step[i] = carried ? std::clamp(step[i], warm0, step_max) : delta0;
        continue;
      }
      int sign = gap > 0.0 ? 1 : (gap < 0.0 ? -1 : 0);
      if (sign != 0) {
        if (prev_sign[i] == sign)
          step[i] = std::min(step[i] * 1.3, step_max);
        else if (prev_sign[i] != 0)
          step[i] = std::max(step[i] * 0.5, step_min);
        prev_sign[i] = sign;
        double delta_k = step[i] / std::fabs(gap);
        double gnew = dual_update(gamma[i], delta_k, inst.cap[i], load[i]);
        dgamma = std::max(dgamma, std::fabs(gnew - gamma[i]));
        gamma[i] = gnew;
      }
      gnorm = std::max(gnorm, std::fabs(gamma[i]));
    }

    if (feasible && (dgamma <= params.tol_dual * std::max(1.0, gnorm) ||
                     (rep.first_feasible >= 0 && stall >= params.stall_window)))
      stopped = true;
  }

  rep.iterations = k;
  if (rep.first_feasible >= 0) {
    beta = beta_best;
    rep.max_violation = best_viol;
    rep.max_rel_violation = best_rel_viol;
    rep.converged = true;
  } else {
    // Never met the tolerance: report the residual and hand back the last
    // iterate, repaired to exact feasibility.
    double viol = 0.0, rel_viol = 0.0;
    detail::comp_loads(inst, beta, load);
    for (int i = 0; i < N; ++i) {
      viol = std::max(viol, load[i] - inst.cap[i]);
      rel_viol = std::max(rel_viol, (load[i] - inst.cap[i]) / std::max(1.0, inst.cap[i]));
    }
    rep.max_violation = std::max(0.0, viol);
    rep.max_rel_violation = std::max(0.0, rel_viol);
    rep.converged = false;
  }
  detail::repair_capacity(inst, beta);
  detail::comp_objectives(inst, eps, beta, rep.qp_objective, rep.lp_objective);
  state.step = step;
  return rep;
}

// Convenience overload for one-shot solves: `gamma` alone is the warm-start
// state (step adaptation starts fresh).
inline QpSolveReport solve_distributed(const CompInstance& inst,
                                       const GlobeParams& params,
                                       std::vector<double>& gamma,
                                       std::vector<std::vector<double>>& beta,
                                       const ConvergenceSink* sink = nullptr) {
  DualState state;
  state.gamma = std::move(gamma);
  QpSolveReport rep = solve_distributed(inst, params, state, beta, sink);
  gamma = std::move(state.gamma);
  return rep;
}

// --- centralized exact solver ---------------------------------------------------

// Exact optimum of the regularized problem. Since the objective equals
// -(1/2eps) * ||beta - eps*coef||^2 up to a constant, the maximizer is the
// projection of z = eps*coef onto the polytope; KKT gives
//   beta[u][k] = max(0, z[u][k] - nu_u - ga_i),
// and the offsets (nu, ga) are found by cyclic exact coordinate ascent, each
// update an offset_for_budget scan. Optionally exposes the final multipliers
// (in coefficient units) for KKT verification.
inline QpSolveReport solve_centralized(const CompInstance& inst, double eps,
                                       std::vector<std::vector<double>>& beta,
                                       std::vector<double>* nu_out = nullptr,
                                       std::vector<double>* gamma_out = nullptr,
                                       int max_sweeps = 200000,
                                       double tol_rel = 1e-15) {
  // Coordinate ascent usually settles in tens of sweeps, but strongly coupled
  // instances crawl for thousands before snapping to a floating-point fixed
  // point, so the sweep cap is generous and the tolerance is ulp-scale —
  // stopping early returns an offset set that can miss the optimum by percents.
  const int U = inst.n_users(), N = inst.n_bs;
  std::vector<std::vector<double>> z(U);
  double z_scale = 1.0;
  for (int v = 0; v < U; ++v) {
    z[v].resize(inst.coef[v].size());
    for (size_t k = 0; k < inst.coef[v].size(); ++k) {
      z[v][k] = eps * inst.coef[v][k];
      z_scale = std::max(z_scale, std::fabs(z[v][k]));
    }
  }

  // Reverse index: pairs touching each BS.
  std::vector<std::vector<std::pair<int, int>>> at_bs(N);
  for (int v = 0; v < U; ++v)
    for (size_t k = 0; k < inst.cand[v].size(); ++k)
      at_bs[inst.cand[v][k]].push_back({v, static_cast<int>(k)});

  std::vector<double> nu(U, 0.0), ga(N, 0.0), vals;
  const double tol = tol_rel * z_scale;
  int sweep = 0;
  bool settled = false;
  for (; sweep < max_sweeps && !settled; ++sweep) {
    double dmax = 0.0;
    for (int v = 0; v < U; ++v) {
      vals.resize(inst.cand[v].size());
      for (size_t k = 0; k < inst.cand[v].size(); ++k)
        vals[k] = z[v][k] - ga[inst.cand[v][k]];
      double t = offset_for_budget(vals, inst.budget[v]);
      dmax = std::max(dmax, std::fabs(t - nu[v]));
      nu[v] = t;
    }
    for (int i = 0; i < N; ++i) {
      vals.resize(at_bs[i].size());
      for (size_t j = 0; j < at_bs[i].size(); ++j)
        vals[j] = z[at_bs[i][j].first][at_bs[i][j].second] - nu[at_bs[i][j].first];
      double t = offset_for_budget(vals, inst.cap[i]);
      dmax = std::max(dmax, std::fabs(t - ga[i]));
      ga[i] = t;
    }
    if (dmax <= tol) settled = true;
  }

  // One final exact pass over the user offsets so the budgets hold exactly,
  // then assemble beta and repair any capacity dust.
  beta.resize(U);
  for (int v = 0; v < U; ++v) {
    vals.resize(inst.cand[v].size());
    for (size_t k = 0; k < inst.cand[v].size(); ++k)
      vals[k] = z[v][k] - ga[inst.cand[v][k]];
    double t = offset_for_budget(vals, inst.budget[v]);
    nu[v] = t;
    beta[v].resize(vals.size());
    for (size_t k = 0; k < vals.size(); ++k)
      beta[v][k] = std::max(0.0, vals[k] - t);
  }
  detail::repair_capacity(inst, beta);

  QpSolveReport rep;
  rep.iterations = sweep;
  rep.converged = settled;
  rep.first_feasible = sweep;
  detail::comp_objectives(inst, eps, beta, rep.qp_objective, rep.lp_objective);
  if (nu_out) {
    nu_out->resize(U);
    for (int v = 0; v < U; ++v) (*nu_out)[v] = nu[v] / eps;
  }
  if (gamma_out) {
    gamma_out->resize(N);
    for (int i = 0; i < N; ++i) (*gamma_out)[i] = ga[i] / eps;
  }
  return rep;
}

// KKT residual of a claimed solution to the full capacity-coupled problem,
// with multipliers nu (user budgets) and gamma (capacities) in coefficient
// units. Normalized by the coefficient scale.
inline double comp_kkt_residual(const CompInstance& inst, double eps,
                                const std::vector<std::vector<double>>& beta,
                                const std::vector<double>& nu,
                                const std::vector<double>& gamma) {
  double scale = std::max(1e-300, inst.coef_scale());
  double r = 0.0;
  std::vector<double> load;
  detail::comp_loads(inst, beta, load);
  for (int v = 0; v < inst.n_users(); ++v) {
    double sum = 0.0;
    for (size_t k = 0; k < inst.cand[v].size(); ++k) {
      double b = beta[v][k];
      sum += b;
      double grad = inst.coef[v][k] - b / eps - nu[v] - gamma[inst.cand[v][k]];
      if (b > 0.0)
        r = std::max(r, std::fabs(grad) / scale);
      else
        r = std::max(r, std::max(0.0, grad) / scale);
      if (b < 0.0) r = std::max(r, -b / (eps * scale));
    }
    r = std::max(r, (sum - inst.budget[v]) / std::max(1.0, inst.budget[v]));
    r = std::max(r, nu[v] * std::fabs(inst.budget[v] - sum) /
                        (scale * std::max(1.0, inst.budget[v])));
  }
  for (int i = 0; i < inst.n_bs; ++i) {
    r = std::max(r, (load[i] - inst.cap[i]) / std::max(1.0, inst.cap[i]));
    r = std::max(r, gamma[i] * std::fabs(inst.cap[i] - load[i]) /
                        (scale * std::max(1.0, inst.cap[i])));
  }
  return r;
}

}  // namespace globe
