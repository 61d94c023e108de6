#pragma once
// Exact scan primitives for the small structured QPs used throughout:
// projections onto {x >= 0, sum x <= b} and the per-user regularized
// subproblem they induce.

#include <algorithm>
#include <cmath>
#include <vector>

namespace globe {

// Smallest t >= 0 such that sum_j max(0, v_j - t) <= b (exact, sort + scan).
// This is the hinge offset of the Euclidean projection of v onto
// {x >= 0, sum x <= b}: proj_j = max(0, v_j - t).
inline double offset_for_budget(const double* v, int k, double b) {
  if (k <= 0) return 0.0;
  if (b < 0.0) b = 0.0;
  double pos_sum = 0.0, vmax = v[0];
  for (int j = 0; j < k; ++j) {
    if (v[j] > 0.0) pos_sum += v[j];
    vmax = std::max(vmax, v[j]);
  }
  if (pos_sum <= b) return 0.0;
  if (b == 0.0) return std::max(0.0, vmax);

  // Sort descending (k is tiny in practice; stack buffer for the common case).
  double stack_buf[16];
  std::vector<double> heap_buf;
  double* s = stack_buf;
  if (k > 16) {
    heap_buf.assign(v, v + k);
    s = heap_buf.data();
  } else {
    std::copy(v, v + k, s);
  }
  std::sort(s, s + k, std::greater<double>());

  double css = 0.0;
  for (int j = 0; j < k; ++j) {
    css += s[j];
    double t = (css - b) / (j + 1);
    double lo = (j + 1 < k) ? s[j + 1] : -std::numeric_limits<double>::infinity();
    if (t >= lo && t <= s[j]) return std::max(t, 0.0);
  }
  return std::max((css - b) / k, 0.0);
}

inline double offset_for_budget(const std::vector<double>& v, double b) {
  return offset_for_budget(v.data(), static_cast<int>(v.size()), b);
}

// Unique maximizer of  sum_j c_j x_j - (1/2eps) x_j^2  subject to
// x >= 0, sum_j x_j <= budget. Closed form x_j = eps * max(0, c_j - nu),
// where nu >= 0 is the smallest budget-feasible offset. Returns nu.
inline double inner_subproblem(const double* c, int k, double budget,
                               double eps, double* x_out) {
  double stack_buf[16];
  std::vector<double> heap_buf;
  double* z = stack_buf;
  if (k > 16) {
    heap_buf.resize(k);
    z = heap_buf.data();
  }
  for (int j = 0; j < k; ++j) z[j] = eps * c[j];
  double t = offset_for_budget(z, k, budget);
  for (int j = 0; j < k; ++j) x_out[j] = std::max(0.0, z[j] - t);
  return t / eps;  // nu, the user-budget multiplier
}

inline double inner_subproblem(const std::vector<double>& c, double budget,
                               double eps, std::vector<double>& x_out) {
  x_out.resize(c.size());
  return inner_subproblem(c.data(), static_cast<int>(c.size()), budget, eps,
                          x_out.data());
}

// KKT residual of a claimed inner-subproblem solution, normalized by the
// coefficient scale. Zero (to rounding) iff x is the exact maximizer.
inline double inner_kkt_residual(const std::vector<double>& c, double budget,
                                 double eps, const std::vector<double>& x,
                                 double nu) {
  double scale = 1.0;
  for (double cj : c) scale = std::max(scale, std::fabs(cj));
  double r = 0.0, sum = 0.0;
  for (size_t j = 0; j < c.size(); ++j) {
    sum += x[j];
    if (x[j] < 0.0) r = std::max(r, -x[j] / (eps * scale));
    if (x[j] > 0.0)
      r = std::max(r, std::fabs(c[j] - x[j] / eps - nu) / scale);
    else
      r = std::max(r, std::max(0.0, c[j] - nu) / scale);
  }
  r = std::max(r, (sum - budget) / std::max(1.0, budget));     // primal feas.
  r = std::max(r, nu * std::fabs(budget - sum) /
                      (scale * std::max(1.0, budget)));        // compl. slack.
  return r;
}

}  // namespace globe
