#pragma once

#include <cstdint>

#include "gam/loss.hpp"
#include "gam/schedule.hpp"

namespace gam {

// Shared step state. t counts completed steps; schedules are evaluated at
// t+1 as each step begins, so the first step sees t = 1.
struct OptimizerState {
  std::int64_t t = 0;
  ParamVector momentum;  // zero-initialized, same dim as the parameters
  double eta0 = 0.1;
  double rho0 = 0.1;
  double alpha = 0.1;
  double xi = 1e-12;
  double momentum_coef = 0.9;
  ScheduleKind lr_schedule = ScheduleKind::kConstant;
  ScheduleKind rho_schedule = ScheduleKind::kConstant;
  std::int64_t horizon = 0;  // total planned steps; cosine needs it
};

struct StepReport {
  double loss_value = 0.0;             // loss at the pre-step point
  double grad_norm = 0.0;              // gradient norm at the pre-step point
  double overall_grad_norm_sq = 0.0;   // squared norm of the update direction
  bool applied_gam = false;
};

// theta <- theta - eta_t * (mu * m + g); m is kept in state.
StepReport sgd_step(OptimizerState& state, ParamVector& theta,
                    const DifferentiableLoss& loss, const Batch& batch);

// Perturb by rho_t * g/(||g||+xi), take the gradient there, then momentum.
// rho_t == 0 short-circuits to the plain step so the trajectories match
// bitwise.
StepReport sam_step(OptimizerState& state, ParamVector& theta,
                    const DifferentiableLoss& loss, const Batch& batch);

// One gradient-norm-aware step:
//   h_loss = oracle gradient at theta
//   f      = H g / (||g|| + xi) of the empirical loss at theta
//   theta_adv = theta + rho_t * f / (||f|| + xi)
//   h_norm = rho_t * H g / (||g|| + xi) of the empirical loss at theta_adv
//   update = h_loss + alpha * h_norm, then momentum.
// alpha == 0 short-circuits to sgd_step on the oracle loss (bitwise equal).
// The same batch feeds every evaluation inside the step.
StepReport gam_step(OptimizerState& state, ParamVector& theta,
                    const DifferentiableLoss& oracle,
                    const DifferentiableLoss& empirical, const Batch& batch);

}  // namespace gam
