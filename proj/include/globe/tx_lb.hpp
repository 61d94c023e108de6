#pragma once
// Per-slot transmission load balancing.
//
// With one budget constraint per user and a linear objective, the optimum is
// a vertex: each user's whole demand goes to the candidate with the largest
// nonnegative routing coefficient V*c_tx_u + b_tilde_j * p_{j,u}, or is
// dropped entirely when every coefficient is negative.

#include <cstddef>
#include <vector>

#include "globe/model.hpp"

namespace globe {

struct TxRoute {
  int choice = -1;      // candidate index (position in the user's list); -1 = drop
  double amount = 0.0;  // traffic routed there
  double coeff = 0.0;   // winning coefficient (0 when dropped)
};

// Coefficients are per candidate of this user. Exact ties go to the lowest
// BS index (`ids`, when given; list position otherwise) so runs are
// reproducible regardless of candidate-list order.
inline TxRoute route_traffic(double mu, const std::vector<double>& coeffs,
                             const std::vector<int>* ids = nullptr) {
  TxRoute r;
  if (mu <= 0.0) return r;
  double best = 0.0;
  int arg = -1;
  for (size_t k = 0; k < coeffs.size(); ++k) {
    if (coeffs[k] < 0.0) continue;
    bool better = arg < 0 || coeffs[k] > best;
    bool tie_wins = arg >= 0 && coeffs[k] == best && ids &&
                    (*ids)[k] < (*ids)[arg];
    if (better || tie_wins) {
      best = coeffs[k];
      arg = static_cast<int>(k);
    }
  }
  if (arg >= 0) {
    r.choice = arg;
    r.amount = mu;
    r.coeff = best;
  }
  return r;
}

// Convenience: route every user and fill the alpha block of a decision.
inline void route_all_traffic(const NetworkConfig& net,
                              const SlotObservation& obs,
                              const BatteryState& bat, double V,
                              std::vector<std::vector<double>>& alpha) {
  const int U = net.u();
  alpha.resize(U);
  std::vector<double> coeffs;
  for (int v = 0; v < U; ++v) {
    const auto& us = net.users[v];
    coeffs.resize(us.candidates.size());
    for (size_t k = 0; k < us.candidates.size(); ++k)
      coeffs[k] = V * us.c_tx + bat.b_tilde(us.candidates[k]) * obs.p[v][k];
    alpha[v].assign(us.candidates.size(), 0.0);
    TxRoute r = route_traffic(obs.mu[v], coeffs, &us.candidates);
    if (r.choice >= 0) alpha[v][r.choice] = r.amount;
  }
}

}  // namespace globe
