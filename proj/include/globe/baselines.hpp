#pragma once
// The three benchmark policies sharing the controller's step interface:
//   so_ng — the drift-plus-penalty controller with load balancing disabled
//           (every candidate set collapsed to the home BS);
//   mo_g  — myopic per-slot cost minimizer with load balancing and grid
//           purchases (a regularized LP solved exactly);
//   mo_ng — fully greedy per-BS myopic policy, battery only, no balancing.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "globe/controller.hpp"
#include "globe/qp.hpp"

namespace globe {

inline NetworkConfig restrict_to_home(NetworkConfig net) {
  for (auto& u : net.users) u.candidates = {u.home};
  return net;
}

// --- SO-NG ---------------------------------------------------------------------

// Identical decision rule to the full controller, but each user may only be
// served by its home BS. Uses the same derived perturbation as the full
// controller so battery targets are comparable across policies.
class SoNgPolicy : public Policy {
 public:
  SoNgPolicy(const NetworkConfig& full_net, const GlobeParams& params)
      : full_(full_net), inner_(restrict_to_home(full_net), params, "so_ng") {
    k_home_.resize(full_.u());
    for (int v = 0; v < full_.u(); ++v) {
      k_home_[v] = full_.candidate_index(v, full_.users[v].home);
    }
  }

  std::string name() const override { return "so_ng"; }
  bool causality_guaranteed() const override { return true; }
  const QpSolveReport* last_comp_report() const override {
    return inner_.last_comp_report();
  }
  const GlobeParams& params() const { return inner_.params(); }
  void reset() override { inner_.reset(); }

  SlotDecision decide(const SlotObservation& obs,
                      const BatteryState& bat) override {
    SlotObservation robs;
    robs.t = obs.t;
    robs.mu = obs.mu;
    robs.lambda = obs.lambda;
    robs.harvest = obs.harvest;
    robs.price = obs.price;
    robs.p.resize(full_.u());
    for (int v = 0; v < full_.u(); ++v) robs.p[v] = {obs.p[v][k_home_[v]]};

    SlotDecision rdec = inner_.decide(robs, bat);

    SlotDecision dec = SlotDecision::zeros(full_);
    for (int v = 0; v < full_.u(); ++v) {
      dec.alpha[v][k_home_[v]] = rdec.alpha[v][0];
      dec.beta[v][k_home_[v]] = rdec.beta[v][0];
    }
    dec.e = std::move(rdec.e);
    dec.g = std::move(rdec.g);
    return dec;
  }

 private:
  NetworkConfig full_;
  GlobeController inner_;
  std::vector<int> k_home_;
};

// --- MO-G ----------------------------------------------------------------------

// Myopic single-slot cost minimization over routing, computation placement
// and grid purchase:
//   min  C_tx + C_com + C_grid
//   s.t. demand budgets, per-BS capacity, E_i(alpha, beta) <= B_i + g_i,
//        0 <= g_i <= g_max_i,
// solved as a strongly regularized QP by cyclic exact coordinate ascent on
// the dual offsets (user budgets nuA/nuB, capacities gamma, energy eta).
// A vanishing energy tie-break (tie * p) steers degenerate optima toward the
// energy-cheap route without affecting real cost comparisons.
class MoGPolicy : public Policy {
 public:
  explicit MoGPolicy(NetworkConfig net, double epsilon = 1e7,
                     double tie = 1e-6, int max_sweeps = 400,
                     double tol = 1e-12)
      : net_(std::move(net)), eps_(epsilon), tie_(tie),
        max_sweeps_(max_sweeps), tol_(tol) {
    net_.validate();
    tx_at_bs_.resize(net_.n());
    cm_at_bs_.resize(net_.n());
    for (int v = 0; v < net_.u(); ++v)
      for (size_t k = 0; k < net_.users[v].candidates.size(); ++k) {
        int i = net_.users[v].candidates[k];
        tx_at_bs_[i].push_back({v, static_cast<int>(k)});
        cm_at_bs_[i].push_back({v, static_cast<int>(k)});
      }
  }

  std::string name() const override { return "mo_g"; }
  bool causality_guaranteed() const override { return false; }  // spends g

  SlotDecision decide(const SlotObservation& obs,
                      const BatteryState& bat) override {
    const int N = net_.n(), U = net_.u();
    SlotDecision dec = SlotDecision::zeros(net_);
    for (int i = 0; i < N; ++i) dec.e[i] = obs.harvest[i];  // always harvest

    // Effective linear values; the QP maximizes
    //   sum a*alpha + sum b*beta - price*sum g - (1/2eps)*||.||^2.
    std::vector<std::vector<double>> a(U);
    for (int v = 0; v < U; ++v) {
      a[v].resize(net_.users[v].candidates.size());
      for (size_t k = 0; k < a[v].size(); ++k)
        a[v][k] = net_.users[v].c_tx - tie_ * obs.p[v][k];
    }

    std::vector<double> nuA(U, 0.0), nuB(U, 0.0), ga(N, 0.0), eta(N, 0.0);
    std::vector<double> vals;

    auto sweep = [&]() {
      double dmax = 0.0;
      for (int v = 0; v < U; ++v) {  // tx budgets
        const auto& cd = net_.users[v].candidates;
        vals.resize(cd.size());
        for (size_t k = 0; k < cd.size(); ++k)
          vals[k] = eps_ * (a[v][k] - eta[cd[k]] * obs.p[v][k]);
        double t = offset_for_budget(vals, obs.mu[v]) / eps_;
        dmax = std::max(dmax, std::fabs(t - nuA[v]));
        nuA[v] = t;
      }
      for (int v = 0; v < U; ++v) {  // comp budgets
        const auto& cd = net_.users[v].candidates;
        vals.resize(cd.size());
        for (size_t k = 0; k < cd.size(); ++k)
          vals[k] = eps_ * (net_.users[v].c_com - ga[cd[k]] -
                            eta[cd[k]] * net_.comp_energy_per_task(cd[k]));
        double t = offset_for_budget(vals, obs.lambda[v]) / eps_;
        dmax = std::max(dmax, std::fabs(t - nuB[v]));
        nuB[v] = t;
      }
      for (int i = 0; i < N; ++i) {  // capacities
        const double kf2 = net_.comp_energy_per_task(i);
        vals.resize(cm_at_bs_[i].size());
        for (size_t j = 0; j < cm_at_bs_[i].size(); ++j) {
          int v = cm_at_bs_[i][j].first;
          vals[j] = eps_ * (net_.users[v].c_com - nuB[v] - eta[i] * kf2);
        }
        double t = offset_for_budget(vals, net_.capacity(i)) / eps_;
        dmax = std::max(dmax, std::fabs(t - ga[i]));
        ga[i] = t;
      }
      for (int i = 0; i < N; ++i) {  // energy budgets
        double t = solve_eta(i, obs, bat.level[i], a, nuA, nuB, ga);
        dmax = std::max(dmax, std::fabs(t - eta[i]));
        eta[i] = t;
      }
      return dmax;
    };

    double cscale = 1.0;
    for (int v = 0; v < U; ++v)
      cscale = std::max({cscale, net_.users[v].c_tx, net_.users[v].c_com});
    for (int s = 0; s < max_sweeps_; ++s)
      if (sweep() <= tol_ * cscale) break;

    // Assemble flows with exact budget offsets, then repair capacity/energy.
    for (int v = 0; v < U; ++v) {
      const auto& cd = net_.users[v].candidates;
      vals.resize(cd.size());
      for (size_t k = 0; k < cd.size(); ++k)
        vals[k] = eps_ * (a[v][k] - eta[cd[k]] * obs.p[v][k]);
      double t = offset_for_budget(vals, obs.mu[v]);
      for (size_t k = 0; k < cd.size(); ++k)
        dec.alpha[v][k] = std::max(0.0, vals[k] - t);

      for (size_t k = 0; k < cd.size(); ++k)
        vals[k] = eps_ * (net_.users[v].c_com - ga[cd[k]] -
                          eta[cd[k]] * net_.comp_energy_per_task(cd[k]));
      t = offset_for_budget(vals, obs.lambda[v]);
      for (size_t k = 0; k < cd.size(); ++k)
        dec.beta[v][k] = std::max(0.0, vals[k] - t);
    }

    std::vector<double> load(N, 0.0), energy(N, 0.0);
    for (int v = 0; v < U; ++v)
      for (size_t k = 0; k < net_.users[v].candidates.size(); ++k)
        load[net_.users[v].candidates[k]] += dec.beta[v][k];
    for (int i = 0; i < N; ++i)
      if (load[i] > net_.capacity(i)) {
        double s = net_.capacity(i) / load[i];
        for (auto [v, k] : cm_at_bs_[i]) dec.beta[v][k] *= s;
      }
    for (int v = 0; v < U; ++v)
      for (size_t k = 0; k < net_.users[v].candidates.size(); ++k) {
        int i = net_.users[v].candidates[k];
        energy[i] += obs.p[v][k] * dec.alpha[v][k] +
                     net_.comp_energy_per_task(i) * dec.beta[v][k];
      }
    for (int i = 0; i < N; ++i) {
      // Buy exactly the shortfall; shrink flows if even g_max can't cover it.
      double need = energy[i] - bat.level[i];
      dec.g[i] = std::clamp(need, 0.0, net_.bs[i].grid_cap);
      double avail = bat.level[i] + dec.g[i];
      if (energy[i] > avail && energy[i] > 0.0) {
        double s = avail / energy[i];
        for (auto [v, k] : tx_at_bs_[i]) dec.alpha[v][k] *= s;
        for (auto [v, k] : cm_at_bs_[i]) dec.beta[v][k] *= s;
      }
    }
    return dec;
  }

 private:
  // Smallest eta >= 0 with
  //   sum_tx p * eps*(a - nuA - eta*p)+ + sum_cm kf2 * eps*(b' - eta*kf2)+
  //     - min(g_max, eps*(eta - price)+)  <=  B,
  // found exactly on the piecewise-linear decreasing LHS.
  double solve_eta(int i, const SlotObservation& obs, double B,
                   const std::vector<std::vector<double>>& a,
                   const std::vector<double>& nuA,
                   const std::vector<double>& nuB,
                   const std::vector<double>& ga) const {
    const double kf2 = net_.comp_energy_per_task(i);
    const double gmax = net_.bs[i].grid_cap;
    const double price = obs.price;

    struct Hinge { double v, w; };
    std::vector<Hinge> hs;
    hs.reserve(tx_at_bs_[i].size() + cm_at_bs_[i].size());
    for (auto [v, k] : tx_at_bs_[i])
      hs.push_back({a[v][k] - nuA[v], obs.p[v][k]});
    for (auto [v, k] : cm_at_bs_[i])
      hs.push_back({net_.users[v].c_com - nuB[v] - ga[i], kf2});

    auto lhs = [&](double etav) {
      double s = 0.0;
      for (const auto& h : hs)
        s += h.w * eps_ * std::max(0.0, h.v - etav * h.w);
      if (gmax > 0.0)
        s -= std::min(gmax, eps_ * std::max(0.0, etav - price));
      return s;
    };

    if (lhs(0.0) <= B) return 0.0;

    std::vector<double> bps;
    for (const auto& h : hs)
      if (h.v > 0.0 && h.w > 0.0) bps.push_back(h.v / h.w);
    if (gmax > 0.0) {
      bps.push_back(price);
      bps.push_back(price + gmax / eps_);
    }
    std::sort(bps.begin(), bps.end());

    double lo = 0.0, flo = lhs(0.0);
    for (double bp : bps) {
      if (bp <= lo) continue;
      double fbp = lhs(bp);
      if (fbp <= B) {
        // exact crossing inside (lo, bp]: LHS is linear there
        if (flo <= fbp) return bp;  // flat segment; boundary is the root
        return lo + (flo - B) * (bp - lo) / (flo - fbp);
      }
      lo = bp;
      flo = fbp;
    }
    return lo;  // LHS constant past the last breakpoint and <= B there
  }

  NetworkConfig net_;
  double eps_, tie_;
  int max_sweeps_;
  double tol_;
  std::vector<std::vector<std::pair<int, int>>> tx_at_bs_, cm_at_bs_;
};

// --- MO-NG ---------------------------------------------------------------------

// Fully distributed greedy: each BS serves only its own users, spending only
// its battery, taking service classes in decreasing value-per-joule until
// energy or capacity runs out; harvests everything; never buys.
class MoNgPolicy : public Policy {
 public:
  explicit MoNgPolicy(NetworkConfig net) : net_(std::move(net)) {
    net_.validate();
    home_users_.resize(net_.n());
    k_home_.resize(net_.u());
    for (int v = 0; v < net_.u(); ++v) {
      home_users_[net_.users[v].home].push_back(v);
      k_home_[v] = net_.candidate_index(v, net_.users[v].home);
    }
  }

  std::string name() const override { return "mo_ng"; }
  bool causality_guaranteed() const override { return true; }  // spends <= B

  SlotDecision decide(const SlotObservation& obs,
                      const BatteryState& bat) override {
    SlotDecision dec = SlotDecision::zeros(net_);
    for (int i = 0; i < net_.n(); ++i) dec.e[i] = obs.harvest[i];

    struct Item {
      double ratio;   // value per joule
      bool is_comp;
      int user;
      double unit_energy;
      double amount;
    };
    std::vector<Item> items;
    for (int i = 0; i < net_.n(); ++i) {
      items.clear();
      const double kf2 = net_.comp_energy_per_task(i);
      for (int v : home_users_[i]) {
        const auto& us = net_.users[v];
        double p = obs.p[v][k_home_[v]];
        if (obs.mu[v] > 0.0) items.push_back({us.c_tx / p, false, v, p, obs.mu[v]});
        if (obs.lambda[v] > 0.0)
          items.push_back({us.c_com / kf2, true, v, kf2, obs.lambda[v]});
      }
      std::sort(items.begin(), items.end(), [](const Item& x, const Item& y) {
        if (x.ratio != y.ratio) return x.ratio > y.ratio;
        if (x.is_comp != y.is_comp) return !x.is_comp;  // tx first on ties
        return x.user < y.user;
      });

      double energy_left = bat.level[i];
      double cap_left = net_.capacity(i);
      for (const auto& it : items) {
        if (energy_left <= 0.0) break;
        double take = std::min(it.amount, energy_left / it.unit_energy);
        if (it.is_comp) take = std::min(take, cap_left);
        if (take <= 0.0) continue;
        if (it.is_comp) {
          dec.beta[it.user][k_home_[it.user]] += take;
          cap_left -= take;
        } else {
          dec.alpha[it.user][k_home_[it.user]] += take;
        }
        energy_left = std::max(0.0, energy_left - take * it.unit_energy);
      }
    }
    return dec;
  }

 private:
  NetworkConfig net_;
  std::vector<std::vector<int>> home_users_;
  std::vector<int> k_home_;
};

}  // namespace globe
