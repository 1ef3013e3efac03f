#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "agsam/optim.hpp"
#include "agsam/param_vector.hpp"

namespace agsam::theory {

struct BoundInputs {
  double loss_bound = 1.0;        // L, with l(x,y;theta) <= L everywhere
  std::uint64_t n_valid = 1;      // N_v
  std::uint64_t model_size = 1;   // k
  double rho = 0.05;
  double theta_norm_sq = 0.0;     // ||theta||^2
  double delta = 0.05;            // in (0,1)
};

// Additive complexity term of the PAC-Bayes bound, proof form:
//
//   (4L/sqrt(N_v)) * [ sqrt(k log(1 + (||theta||^2/rho^2)
//                                       (1 + sqrt(log N_v / k))^2))
//                      + 2 sqrt(log((N_v + k)/delta)) + C0 ]
//
// with the absorbed constant fixed at C0 = 1. Only monotone behavior is
// meaningful, never absolute values.
double pac_bayes_complexity(const BoundInputs& inp);

// H_{B^t}(theta_l) * v and H_{B^v}(theta_tilde_v) * v
struct HvpOracle {
  std::function<ParamVector(const ParamVector&)> h_train;
  std::function<ParamVector(const ParamVector&)> h_valid;
};

struct CongruenceCaps {
  double eta1_cap = 0.0;
  double eta2_cap = 0.0;
  double dot_before = 0.0;  // grad L_{B^t}(theta) . grad L_{B^v}(theta_v)
  double dot_after = 0.0;   // grad L_{B^t}(theta_t) . grad L_{B^v}(theta_v)
  double bound_rhs = 0.0;
  bool satisfied = false;
};

// Learning-rate caps of the congruence theorem:
//   eta1 <= |d| / (12 |g_v^T H_t g_t|)
//   eta2 <= min(|d| / (6 |g_v^T H_t g_v|), |d| / (6 |g_v^T H_v g_t|))
// with d = g_t . g_v, g_t at theta, g_v at theta_tilde_v. Denominators
// below 1e-15 give an infinite cap (degenerate curvature). Fills the cap
// fields and dot_before.
CongruenceCaps congruence_caps(const optim::StepTrace& trace,
                             const HvpOracle& oracle);

// Checks grad L_{B^t}(theta_t) . g_v >= (1/2 or 3/2) * dot_before, the
// factor depending on the sign of dot_before, with relative slack 1e-9.
// Fills the dot fields, bound_rhs and satisfied.
CongruenceCaps verify_congruence(const optim::StepTrace& trace);

struct CongruenceInstance {
  std::size_t index = 0;
  std::size_t dim = 0;
  bool spd = false;
  double eta1 = 0.0;
  double eta2 = 0.0;
  CongruenceCaps caps;
  CongruenceCaps result;
  std::string describe() const;
};

struct CongruenceSuiteReport {
  std::size_t total = 0;
  std::size_t satisfied = 0;
  std::vector<CongruenceInstance> violations;
  bool all_satisfied() const { return satisfied == total; }
};

// Random quadratic pairs (SPD and indefinite Hessians, dims 2..10), exact
// gradients and Hessians, step sizes at half the computed caps. The
// expansion behind the theorem is exact on quadratics, so every instance
// must satisfy the inequality.
CongruenceSuiteReport run_congruence_suite(std::size_t instances,
                                           std::uint64_t seed);

struct MonotonicityReport {
  std::size_t comparisons = 0;
  std::size_t failures = 0;
  std::vector<std::string> failure_notes;
  bool all_pass() const { return failures == 0; }
};

// 5-point sweeps: complexity strictly decreasing in N_v, strictly
// increasing in k, L, ||theta||^2, and strictly increasing as delta -> 0.
MonotonicityReport run_monotonicity_grid();

}  // namespace agsam::theory
