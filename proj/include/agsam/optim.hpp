#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>

#include "agsam/batch.hpp"
#include "agsam/mlp.hpp"
#include "agsam/param_vector.hpp"

namespace agsam::optim {

struct SgdConfig {
  double lr = 0.1;
  double momentum = 0.0;       // in [0,1)
  double weight_decay = 0.0;
};

struct SamConfig {
  double rho = 0.05;
  SgdConfig base;
  bool adaptive = false;  // false: SAM, true: ASAM (elementwise T = |theta|)
};

enum class AgnosticVariant { kFull, kSimpler };

struct AgnosticSamConfig {
  double rho1 = 0.1;
  double rho2 = 0.05;
  double beta = 0.9;  // momentum on the validation gradient buffer g_v
  SgdConfig base;
  bool adaptive = false;
  AgnosticVariant variant = AgnosticVariant::kFull;
};

struct ResearchEtaConfig {
  double eta1 = 0.0;
  double eta2 = 0.0;
  double eta = 0.1;
};

// Persistent per-run state. g_v starts all-zero and is only touched by the
// full agnostic variant.
struct OptimizerState {
  std::optional<ParamVector> momentum_buffer;
  std::optional<ParamVector> g_v;
  std::uint64_t step_count = 0;
};

// Everything a step computed, for the theory and metrics modules.
struct StepTrace {
  ParamVector theta;           // theta_l
  ParamVector theta_tilde_v;   // validation-perturbed point
  ParamVector theta_tilde_t;   // actual perturbed point
  ParamVector grad_t_theta;    // grad of L_{B^t} at theta_l
  ParamVector grad_v_theta;    // grad of L_{B^v} at theta_l
  ParamVector grad_v_tilde_v;  // grad of L_{B^v} at theta_tilde_v
  ParamVector grad_t_tilde_t;  // grad of L_{B^t} at theta_tilde_t
};

struct StepStats {
  double loss = 0.0;      // L_{B^t}(theta_l)
  double accuracy = 0.0;  // accuracy on B^t at theta_l
};

// Batch loss adapter so the optimizers stay independent of the model; the
// runner wires in batch_loss, tests wire in closed-form quadratics.
using LossFn =
    std::function<BatchGradEval(const ParamVector&, const Batch&)>;

// buf <- momentum*buf + grad + weight_decay*theta; theta <- theta - lr*buf
ParamVector sgd_step(OptimizerState& state, const SgdConfig& cfg,
                     const ParamVector& theta, const ParamVector& grad);

// theta + rho * g/||g||, or with ASAM scaling theta + rho * T^2 g / ||T g||,
// T = |theta| elementwise. Returns theta unchanged when the norm is below
// 1e-12 or rho == 0.
ParamVector sam_perturb(const ParamVector& theta, const ParamVector& grad,
                        double rho, bool adaptive);

std::pair<ParamVector, StepStats> sam_step(OptimizerState& state,
                                           const SamConfig& cfg,
                                           const ParamVector& theta,
                                           const Batch& batch,
                                           const LossFn& loss_fn);

// One iteration of the normalized practical algorithm:
//   (i)   theta_v = theta + rho2 * unit(grad L_{B^v}(theta))
//   (ii)  g_v <- beta*g_v + (1-beta)*grad L_{B^v}(theta_v)
//   (iii) theta_t = theta + rho1*unit(grad L_{B^t}(theta))
//                         - rho2*unit(g_v)
//   (iv)  base update with grad L_{B^t}(theta_t)
// The simpler variant skips (i)-(ii) and injects grad L_{B^v}(theta)
// directly in (iii). adaptive applies the ASAM scaling to both terms of
// (iii). Any normalization with norm < 1e-12 drops its term.
std::pair<ParamVector, StepStats> agnostic_sam_step(
    OptimizerState& state, const AgnosticSamConfig& cfg,
    const ParamVector& theta, const Batch& bt, const Batch& bv,
    const LossFn& loss_fn);

// Exact unnormalized updates with scalar learning rates:
//   theta_v = theta + eta2 * grad L_{B^v}(theta)
//   theta_t = theta + eta1 * grad L_{B^t}(theta)
//                   - eta2 * grad L_{B^v}(theta_v)
//   theta' = theta - eta * grad L_{B^t}(theta_t)
// The returned trace carries every intermediate gradient.
std::pair<ParamVector, StepTrace> research_eta_step(
    const ResearchEtaConfig& cfg, const ParamVector& theta, const Batch& bt,
    const Batch& bv, const LossFn& loss_fn);

// eta0 * 0.5 * (1 + cos(pi t / total)); throws if t > total
double cosine_lr(double eta0, std::uint64_t t, std::uint64_t total);

}  // namespace agsam::optim
