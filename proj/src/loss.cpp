#include "gam/loss.hpp"

#include <cmath>
#include <string>

#include "gam/errors.hpp"

namespace gam {

namespace {

void require_dim(const DifferentiableLoss& loss, const ParamVector& p,
                 const char* what) {
  if (p.dim() != loss.dimension()) {
    throw std::invalid_argument(
        std::string(what) + ": point dimension " + std::to_string(p.dim()) +
        " does not match loss dimension " + std::to_string(loss.dimension()));
  }
}

}  // namespace

double evaluate(const DifferentiableLoss& loss, const ParamVector& point,
                const Batch& batch) {
  require_dim(loss, point, "evaluate");
  return loss.value(point, batch);
}

ParamVector gradient(const GradQuery& q) {
  require_dim(q.loss, q.point, "gradient");
  ParamVector g(q.point.dim());
  const double v = q.loss.value_and_gradient(q.point, q.batch, g);
  if (!std::isfinite(v)) {
    throw NumericError("gradient: loss is non-finite at the query point");
  }
  g.check_finite("gradient");
  g.set_layout(q.loss.layout());
  return g;
}

ParamVector hvp(const HvpQuery& q) {
  require_dim(q.loss, q.point, "hvp");
  require_dim(q.loss, q.direction, "hvp direction");
  ParamVector out(q.point.dim());
  ParamVector grad(q.point.dim());
  q.loss.hvp_with_gradient(q.point, q.direction, q.batch, out, grad);
  out.check_finite("hvp");
  out.set_layout(q.loss.layout());
  return out;
}

ParamVector hvp_fd(const HvpQuery& q, double eps) {
  require_dim(q.loss, q.point, "hvp_fd");
  require_dim(q.loss, q.direction, "hvp_fd direction");
  if (!(eps > 0.0)) throw std::invalid_argument("hvp_fd: eps must be > 0");
  ParamVector plus = add_scaled(q.point, eps, q.direction);
  ParamVector minus = add_scaled(q.point, -eps, q.direction);
  ParamVector gp = gradient(GradQuery{q.loss, plus, q.batch});
  ParamVector gm = gradient(GradQuery{q.loss, minus, q.batch});
  gp.axpy(-1.0, gm);
  gp.scale(1.0 / (2.0 * eps));
  return gp;
}

ParamVector grad_norm_ascent_direction(const GradQuery& q, double xi) {
  require_dim(q.loss, q.point, "grad_norm_ascent_direction");
  if (xi < 0.0) {
    throw std::invalid_argument("grad_norm_ascent_direction: xi must be >= 0");
  }
  ParamVector g = gradient(q);
  ParamVector Hg = hvp(HvpQuery{q.loss, q.point, g, q.batch});
  const double denom = g.norm() + xi;
  if (denom == 0.0) {
    // Zero gradient and xi == 0: the surface has no ascent direction here.
    return ParamVector(q.point.dim());
  }
  Hg.scale(1.0 / denom);
  return Hg;
}

GraphLoss::GraphLoss(std::size_t dimension, Builder builder,
                     std::shared_ptr<const SegmentLayout> layout)
    : dim_(dimension), builder_(std::move(builder)), layout_(std::move(layout)) {
  if (layout_ && layout_->dim() != dim_) {
    throw std::invalid_argument("GraphLoss: layout does not cover dimension");
  }
}

namespace {

// Tape reuse across queries on the same thread; graphs are rebuilt per query
// so value-dependent structure (e.g. shifted log-sum-exp) stays correct.
ad::Tape& scratch_tape() {
  thread_local ad::Tape tape;
  return tape;
}

std::vector<ad::Var>& scratch_vars() {
  thread_local std::vector<ad::Var> vars;
  return vars;
}

}  // namespace

double GraphLoss::value(const ParamVector& point, const Batch& batch) const {
  ad::Tape& tape = scratch_tape();
  tape.reset(false);
  auto& vars = scratch_vars();
  vars.clear();
  for (std::size_t i = 0; i < dim_; ++i) {
    vars.emplace_back(&tape, tape.input(point[i], 0.0));
  }
  ad::Var root = builder_(std::span<const ad::Var>(vars), batch, tape);
  return root.value();
}

double GraphLoss::value_and_gradient(const ParamVector& point,
                                     const Batch& batch,
                                     ParamVector& grad_out) const {
  ad::Tape& tape = scratch_tape();
  tape.reset(false);
  auto& vars = scratch_vars();
  vars.clear();
  for (std::size_t i = 0; i < dim_; ++i) {
    vars.emplace_back(&tape, tape.input(point[i], 0.0));
  }
  ad::Var root = builder_(std::span<const ad::Var>(vars), batch, tape);
  tape.backward(root.index());
  for (std::size_t i = 0; i < dim_; ++i) {
    grad_out[i] = tape.adjoint(vars[i].index());
  }
  return root.value();
}

void GraphLoss::hvp_with_gradient(const ParamVector& point,
                                  const ParamVector& direction,
                                  const Batch& batch, ParamVector& hvp_out,
                                  ParamVector& grad_out) const {
  ad::Tape& tape = scratch_tape();
  tape.reset(true);
  auto& vars = scratch_vars();
  vars.clear();
  for (std::size_t i = 0; i < dim_; ++i) {
    vars.emplace_back(&tape, tape.input(point[i], direction[i]));
  }
  ad::Var root = builder_(std::span<const ad::Var>(vars), batch, tape);
  tape.backward(root.index());
  for (std::size_t i = 0; i < dim_; ++i) {
    grad_out[i] = tape.adjoint(vars[i].index());
    hvp_out[i] = tape.adjoint_tangent(vars[i].index());
  }
}

}  // namespace gam
