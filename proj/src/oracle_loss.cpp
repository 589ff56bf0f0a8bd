#include "gam/oracle_loss.hpp"

#include <stdexcept>

namespace gam {

OracleLoss::OracleLoss(const DifferentiableLoss& base, OracleLossSpec spec)
    : base_(base), spec_(spec) {
  if (spec_.weight_decay < 0.0) {
    throw std::invalid_argument("OracleLoss: weight_decay must be >= 0");
  }
  if (spec_.sam_rho && !(*spec_.sam_rho >= 0.0)) {
    throw std::invalid_argument("OracleLoss: sam_rho must be >= 0");
  }
  if (spec_.xi < 0.0) {
    throw std::invalid_argument("OracleLoss: xi must be >= 0");
  }
}

namespace {

// Weight mask: bias segments are skipped. Without a layout everything decays.
template <typename Fn>
void for_each_weight(const std::shared_ptr<const SegmentLayout>& layout,
                     std::size_t dim, Fn&& fn) {
  if (!layout) {
    for (std::size_t i = 0; i < dim; ++i) fn(i);
    return;
  }
  for (const auto& seg : layout->segments()) {
    if (seg.is_bias) continue;
    for (std::size_t i = seg.offset; i < seg.offset + seg.size; ++i) fn(i);
  }
}

}  // namespace

ParamVector OracleLoss::sam_point(const ParamVector& point,
                                  const Batch& batch) const {
  if (!spec_.sam_rho || *spec_.sam_rho == 0.0) return point;
  ParamVector g = gradient(GradQuery{base_, point, batch});
  const double denom = g.norm() + spec_.xi;
  if (denom == 0.0) return point;
  return add_scaled(point, *spec_.sam_rho / denom, g);
}

double OracleLoss::decay_value(const ParamVector& point) const {
  if (spec_.weight_decay == 0.0) return 0.0;
  double s = 0.0;
  for_each_weight(layout(), point.dim(), [&](std::size_t i) {
    s += point[i] * point[i];
  });
  return 0.5 * spec_.weight_decay * s;
}

void OracleLoss::add_decay_gradient(const ParamVector& point,
                                    ParamVector& grad) const {
  if (spec_.weight_decay == 0.0) return;
  for_each_weight(layout(), point.dim(), [&](std::size_t i) {
    grad[i] += spec_.weight_decay * point[i];
  });
}

double OracleLoss::value(const ParamVector& point, const Batch& batch) const {
  const ParamVector shifted = sam_point(point, batch);
  return base_.value(shifted, batch) + decay_value(point);
}

double OracleLoss::value_and_gradient(const ParamVector& point,
                                      const Batch& batch,
                                      ParamVector& grad_out) const {
  const ParamVector shifted = sam_point(point, batch);
  const double v = base_.value_and_gradient(shifted, batch, grad_out);
  add_decay_gradient(point, grad_out);
  return v + decay_value(point);
}

void OracleLoss::hvp_with_gradient(const ParamVector& point,
                                   const ParamVector& direction,
                                   const Batch& batch, ParamVector& hvp_out,
                                   ParamVector& grad_out) const {
  if (spec_.sam_rho && *spec_.sam_rho > 0.0) {
    throw std::logic_error(
        "OracleLoss: hvp is undefined for a sam-composed oracle");
  }
  base_.hvp_with_gradient(point, direction, batch, hvp_out, grad_out);
  add_decay_gradient(point, grad_out);
  if (spec_.weight_decay != 0.0) {
    for_each_weight(layout(), point.dim(), [&](std::size_t i) {
      hvp_out[i] += spec_.weight_decay * direction[i];
    });
  }
}

OracleLoss make_oracle(const DifferentiableLoss& base, OracleLossSpec spec) {
  return OracleLoss(base, spec);
}

}  // namespace gam
