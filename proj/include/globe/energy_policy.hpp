#pragma once
// Closed-form per-slot harvesting and grid-purchase decisions.
//
// Both are bang-bang threshold rules on the perturbed battery level
// b_tilde = B - theta: harvest everything at or below the target, buy the
// full allowance only when the battery deficit outweighs the weighted price.

#include <vector>

#include "globe/model.hpp"

namespace globe {

struct EnergyDecision {
  std::vector<double> e, g;
};

// e_i = harvest_i  iff b_tilde_i <= 0   (else 0)
// g_i = g_max_i    iff V * price + b_tilde_i <= 0   (else 0)
// This minimizes sum_i [ V * price * g_i + b_tilde_i * (e_i + g_i) ] over the
// feasible box, the energy term of the per-slot drift-plus-penalty objective.
inline EnergyDecision decide_energy(const std::vector<double>& b_tilde,
                                    const std::vector<double>& harvest,
                                    double price, double V,
                                    const std::vector<double>& g_max) {
  EnergyDecision d;
  const size_t n = b_tilde.size();
  d.e.resize(n);
  d.g.resize(n);
  for (size_t i = 0; i < n; ++i) {
    d.e[i] = (b_tilde[i] <= 0.0) ? harvest[i] : 0.0;
    d.g[i] = (V * price + b_tilde[i] <= 0.0) ? g_max[i] : 0.0;
  }
  return d;
}

// The objective decide_energy minimizes; exposed for oracle tests.
inline double energy_objective(const std::vector<double>& b_tilde, double price,
                               double V, const std::vector<double>& e,
                               const std::vector<double>& g) {
  double obj = 0.0;
  for (size_t i = 0; i < b_tilde.size(); ++i)
    obj += V * price * g[i] + b_tilde[i] * (e[i] + g[i]);
  return obj;
}

}  // namespace globe
