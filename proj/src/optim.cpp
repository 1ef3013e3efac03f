#include "agsam/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace agsam::optim {

namespace {

constexpr double kNormGuard = 1e-12;

// Normalized perturbation direction. Plain: g/||g||. ASAM: T^2 g / ||T g||
// with T = |theta|. Returns false when the guard norm is below 1e-12.
bool perturb_direction(const ParamVector& theta, const ParamVector& grad,
                       bool adaptive, ParamVector& dir) {
  if (!adaptive) {
    const double n = grad.norm();
    if (n < kNormGuard) return false;
    dir = grad;
    dir *= 1.0 / n;
    return true;
  }
  ParamVector tg = grad;
  for (std::size_t i = 0; i < tg.size(); ++i) tg[i] *= std::abs(theta[i]);
  const double n = tg.norm();  // ||T g||
  if (n < kNormGuard) return false;
  dir = tg;
  for (std::size_t i = 0; i < dir.size(); ++i) dir[i] *= std::abs(theta[i]);
  dir *= 1.0 / n;
  return true;
}

}  // namespace

ParamVector sgd_step(OptimizerState& state, const SgdConfig& cfg,
                     const ParamVector& theta, const ParamVector& grad) {
  if (!theta.layout() || !grad.layout() ||
      !(theta.layout() == grad.layout() || *theta.layout() == *grad.layout()))
    throw std::invalid_argument("sgd_step: gradient layout mismatch");
  if (!state.momentum_buffer)
    state.momentum_buffer = ParamVector::zeros(theta.layout());
  ParamVector& buf = *state.momentum_buffer;
  buf *= cfg.momentum;
  buf += grad;
  if (cfg.weight_decay != 0.0) buf.axpy(cfg.weight_decay, theta);
  ParamVector next = theta;
  next.axpy(-cfg.lr, buf);
  ++state.step_count;
  return next;
}

ParamVector sam_perturb(const ParamVector& theta, const ParamVector& grad,
                        double rho, bool adaptive) {
  if (rho == 0.0) return theta;
  ParamVector dir;
  if (!perturb_direction(theta, grad, adaptive, dir)) return theta;
  ParamVector out = theta;
  out.axpy(rho, dir);
  return out;
}

std::pair<ParamVector, StepStats> sam_step(OptimizerState& state,
                                           const SamConfig& cfg,
                                           const ParamVector& theta,
                                           const Batch& batch,
                                           const LossFn& loss_fn) {
  BatchGradEval first = loss_fn(theta, batch);
  ParamVector perturbed = sam_perturb(theta, first.grad, cfg.rho, cfg.adaptive);
  BatchGradEval second = loss_fn(perturbed, batch);
  ParamVector next = sgd_step(state, cfg.base, theta, second.grad);
  return {std::move(next), {first.loss, first.accuracy}};
}

std::pair<ParamVector, StepStats> agnostic_sam_step(
    OptimizerState& state, const AgnosticSamConfig& cfg,
    const ParamVector& theta, const Batch& bt, const Batch& bv,
    const LossFn& loss_fn) {
  if (bv.rows == 0)
    throw std::invalid_argument("agnostic_sam_step: empty validation batch");

  BatchGradEval train_eval = loss_fn(theta, bt);

  // injected validation gradient: momentum-averaged grad at theta_tilde_v
  // (full) or the raw grad at theta (simpler)
  const ParamVector* injected = nullptr;
  ParamVector valid_grad;
  if (cfg.variant == AgnosticVariant::kFull) {
    BatchGradEval valid_at_theta = loss_fn(theta, bv);
    ParamVector theta_tilde_v =
        sam_perturb(theta, valid_at_theta.grad, cfg.rho2, false);
    BatchGradEval valid_at_tilde = loss_fn(theta_tilde_v, bv);
    if (!state.g_v) state.g_v = ParamVector::zeros(theta.layout());
    ParamVector& g_v = *state.g_v;
    g_v *= cfg.beta;
    g_v.axpy(1.0 - cfg.beta, valid_at_tilde.grad);
    injected = &g_v;
  } else {
    BatchGradEval valid_at_theta = loss_fn(theta, bv);
    valid_grad = std::move(valid_at_theta.grad);
    injected = &valid_grad;
  }

  ParamVector theta_tilde_t = theta;
  ParamVector dir;
  if (cfg.rho1 != 0.0 &&
      perturb_direction(theta, train_eval.grad, cfg.adaptive, dir))
    theta_tilde_t.axpy(cfg.rho1, dir);
  if (cfg.rho2 != 0.0 &&
      perturb_direction(theta, *injected, cfg.adaptive, dir))
    theta_tilde_t.axpy(-cfg.rho2, dir);

  BatchGradEval final_eval = loss_fn(theta_tilde_t, bt);
  ParamVector next = sgd_step(state, cfg.base, theta, final_eval.grad);
  return {std::move(next), {train_eval.loss, train_eval.accuracy}};
}

std::pair<ParamVector, StepTrace> research_eta_step(
    const ResearchEtaConfig& cfg, const ParamVector& theta, const Batch& bt,
    const Batch& bv, const LossFn& loss_fn) {
  StepTrace trace;
  trace.theta = theta;
  trace.grad_t_theta = loss_fn(theta, bt).grad;
  trace.grad_v_theta = loss_fn(theta, bv).grad;

  trace.theta_tilde_v = theta;
  trace.theta_tilde_v.axpy(cfg.eta2, trace.grad_v_theta);
  trace.grad_v_tilde_v = loss_fn(trace.theta_tilde_v, bv).grad;

  trace.theta_tilde_t = theta;
  trace.theta_tilde_t.axpy(cfg.eta1, trace.grad_t_theta);
  trace.theta_tilde_t.axpy(-cfg.eta2, trace.grad_v_tilde_v);
  trace.grad_t_tilde_t = loss_fn(trace.theta_tilde_t, bt).grad;

  ParamVector next = theta;
  next.axpy(-cfg.eta, trace.grad_t_tilde_t);
  return {std::move(next), std::move(trace)};
}

double cosine_lr(double eta0, std::uint64_t t, std::uint64_t total) {
  if (total == 0) throw std::invalid_argument("cosine_lr: total must be >= 1");
  if (t > total)
    throw std::invalid_argument("cosine_lr: step " + std::to_string(t) +
                                " beyond total " + std::to_string(total));
  return eta0 * 0.5 *
         (1.0 + std::cos(std::numbers::pi * static_cast<double>(t) /
                         static_cast<double>(total)));
}

}  // namespace agsam::optim
