#include "gam/optimizer.hpp"

#include <cmath>
#include <string>

#include "gam/errors.hpp"

namespace gam {

namespace {

void check_state(const OptimizerState& state, const ParamVector& theta) {
  if (state.momentum.dim() != theta.dim()) {
    throw std::invalid_argument(
        "optimizer state momentum dimension " +
        std::to_string(state.momentum.dim()) + " != parameter dimension " +
        std::to_string(theta.dim()));
  }
  if (!(state.eta0 > 0.0)) {
    throw std::invalid_argument("optimizer: eta0 must be > 0");
  }
  if (state.rho0 < 0.0) {
    throw std::invalid_argument("optimizer: rho0 must be >= 0");
  }
  if (state.alpha < 0.0) {
    throw std::invalid_argument("optimizer: alpha must be >= 0");
  }
  if (state.xi < 0.0) {
    throw std::invalid_argument("optimizer: xi must be >= 0");
  }
}

void require_finite_loss(double v, std::int64_t t) {
  if (std::isnan(v)) {
    throw DivergenceError("loss is NaN at step " + std::to_string(t));
  }
  if (std::isinf(v)) {
    throw DivergenceError("loss is infinite at step " + std::to_string(t));
  }
}

// m <- mu * m + u; theta <- theta - eta * m
void apply_update(OptimizerState& state, ParamVector& theta,
                  const ParamVector& u, double eta) {
  state.momentum.scale(state.momentum_coef);
  state.momentum.axpy(1.0, u);
  theta.axpy(-eta, state.momentum);
}

}  // namespace

StepReport sgd_step(OptimizerState& state, ParamVector& theta,
                    const DifferentiableLoss& loss, const Batch& batch) {
  check_state(state, theta);
  const std::int64_t t = state.t + 1;
  const double eta = schedule_value(state.lr_schedule, state.eta0, t,
                                    state.horizon);

  ParamVector g(theta.dim());
  const double v = loss.value_and_gradient(theta, batch, g);
  require_finite_loss(v, t);
  g.check_finite("sgd_step gradient");

  StepReport r;
  r.loss_value = v;
  r.overall_grad_norm_sq = g.dot(g);
  r.grad_norm = std::sqrt(r.overall_grad_norm_sq);
  apply_update(state, theta, g, eta);
  state.t = t;
  return r;
}

StepReport sam_step(OptimizerState& state, ParamVector& theta,
                    const DifferentiableLoss& loss, const Batch& batch) {
  check_state(state, theta);
  const std::int64_t t = state.t + 1;
  const double eta = schedule_value(state.lr_schedule, state.eta0, t,
                                    state.horizon);
  const double rho = schedule_value(state.rho_schedule, state.rho0, t,
                                    state.horizon);

  ParamVector g(theta.dim());
  const double v = loss.value_and_gradient(theta, batch, g);
  require_finite_loss(v, t);
  g.check_finite("sam_step gradient");

  StepReport r;
  r.loss_value = v;
  r.grad_norm = std::sqrt(g.dot(g));

  if (rho == 0.0) {
    // Degenerate radius: identical to the base step, including bit patterns.
    r.overall_grad_norm_sq = g.dot(g);
    apply_update(state, theta, g, eta);
    state.t = t;
    return r;
  }

  const double denom = r.grad_norm + state.xi;
  ParamVector adv = theta;
  if (denom != 0.0) adv.axpy(rho / denom, g);
  ParamVector g_adv(theta.dim());
  const double v_adv = loss.value_and_gradient(adv, batch, g_adv);
  require_finite_loss(v_adv, t);
  g_adv.check_finite("sam_step perturbed gradient");

  r.overall_grad_norm_sq = g_adv.dot(g_adv);
  apply_update(state, theta, g_adv, eta);
  state.t = t;
  return r;
}

StepReport gam_step(OptimizerState& state, ParamVector& theta,
                    const DifferentiableLoss& oracle,
                    const DifferentiableLoss& empirical, const Batch& batch) {
  check_state(state, theta);
  const std::int64_t t = state.t + 1;
  const double eta = schedule_value(state.lr_schedule, state.eta0, t,
                                    state.horizon);
  const double rho = schedule_value(state.rho_schedule, state.rho0, t,
                                    state.horizon);

  // Loss and gradient-norm reporting always reflect the empirical loss, so
  // rows stay comparable across optimizer kinds.
  ParamVector g(theta.dim());
  const double v = empirical.value_and_gradient(theta, batch, g);
  require_finite_loss(v, t);
  g.check_finite("gam_step gradient");

  StepReport r;
  r.applied_gam = true;
  r.loss_value = v;
  r.grad_norm = g.norm();

  ParamVector h_loss(theta.dim());
  if (&oracle == &empirical) {
    h_loss = g;
  } else {
    const double vo = oracle.value_and_gradient(theta, batch, h_loss);
    require_finite_loss(vo, t);
    h_loss.check_finite("gam_step oracle gradient");
  }

  if (state.alpha == 0.0) {
    // Regularizer off: identical to the base step on the oracle loss.
    r.overall_grad_norm_sq = h_loss.dot(h_loss);
    apply_update(state, theta, h_loss, eta);
    state.t = t;
    return r;
  }

  // Ascent direction of the gradient-norm surface at theta.
  ParamVector Hg(theta.dim());
  ParamVector g_scratch(theta.dim());
  empirical.hvp_with_gradient(theta, g, batch, Hg, g_scratch);
  Hg.check_finite("gam_step hvp");
  ParamVector f = Hg;
  {
    const double denom = r.grad_norm + state.xi;
    if (denom != 0.0) f.scale(1.0 / denom);
  }

  ParamVector adv = theta;
  {
    const double denom = f.norm() + state.xi;
    if (denom != 0.0) adv.axpy(rho / denom, f);
  }

  ParamVector g_adv(theta.dim());
  const double v_adv = empirical.value_and_gradient(adv, batch, g_adv);
  require_finite_loss(v_adv, t);
  g_adv.check_finite("gam_step perturbed gradient");
  ParamVector Hg_adv(theta.dim());
  empirical.hvp_with_gradient(adv, g_adv, batch, Hg_adv, g_scratch);
  Hg_adv.check_finite("gam_step perturbed hvp");

  ParamVector h_norm = Hg_adv;
  {
    const double denom = g_adv.norm() + state.xi;
    if (denom != 0.0) h_norm.scale(rho / denom);
  }

  ParamVector u = h_loss;
  u.axpy(state.alpha, h_norm);
  r.overall_grad_norm_sq = u.dot(u);
  apply_update(state, theta, u, eta);
  state.t = t;
  return r;
}

}  // namespace gam
