#pragma once

#include <optional>

#include "gam/loss.hpp"

namespace gam {

// Optional wrappers around a base loss: L2 weight decay on non-bias segments
// and/or a one-step adversarial (SAM) shift of the query point.
struct OracleLossSpec {
  double weight_decay = 0.0;
  std::optional<double> sam_rho;  // radius of the gradient-aligned shift
  double xi = 1e-12;              // normalization guard for the shift
};

// Composition rules:
//   value    = base(theta_sam) + 0.5 * wd * ||theta_weights||^2
//   gradient = base_grad(theta_sam) + wd * theta_weights
//   hvp      = base_hvp + wd * v_weights; undefined when sam_rho is set
//              (the shifted gradient field is not a gradient of anything),
//              so it throws std::logic_error in that case.
// theta_sam = theta + rho * g / (||g|| + xi) with g the base gradient at
// theta; equal to theta when sam_rho is unset.
class OracleLoss : public DifferentiableLoss {
 public:
  OracleLoss(const DifferentiableLoss& base, OracleLossSpec spec);

  std::size_t dimension() const override { return base_.dimension(); }
  std::shared_ptr<const SegmentLayout> layout() const override {
    return base_.layout();
  }

  double value(const ParamVector& point, const Batch& batch) const override;
  double value_and_gradient(const ParamVector& point, const Batch& batch,
                            ParamVector& grad_out) const override;
  void hvp_with_gradient(const ParamVector& point, const ParamVector& direction,
                         const Batch& batch, ParamVector& hvp_out,
                         ParamVector& grad_out) const override;

  const OracleLossSpec& spec() const { return spec_; }

 private:
  ParamVector sam_point(const ParamVector& point, const Batch& batch) const;
  void add_decay_gradient(const ParamVector& point, ParamVector& grad) const;
  double decay_value(const ParamVector& point) const;

  const DifferentiableLoss& base_;
  OracleLossSpec spec_;
};

OracleLoss make_oracle(const DifferentiableLoss& base, OracleLossSpec spec);

}  // namespace gam
