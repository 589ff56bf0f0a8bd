#pragma once

#include <vector>

#include "gam/loss.hpp"

namespace gam {

// Diagonal quadratic 0.5 * sum_i diag[i] * (theta[i] - center[i])^2.
// Batch-independent; gradient and HVP are closed form, which makes this the
// reference loss for optimizer traces and spectral checks.
struct QuadraticSpec {
  std::vector<double> diag;
  std::vector<double> center;  // empty means origin
};

class QuadraticLoss : public DifferentiableLoss {
 public:
  explicit QuadraticLoss(QuadraticSpec spec);

  std::size_t dimension() const override { return spec_.diag.size(); }
  std::shared_ptr<const SegmentLayout> layout() const override {
    return layout_;
  }

  double value(const ParamVector& point, const Batch& batch) const override;
  double value_and_gradient(const ParamVector& point, const Batch& batch,
                            ParamVector& grad_out) const override;
  void hvp_with_gradient(const ParamVector& point, const ParamVector& direction,
                         const Batch& batch, ParamVector& hvp_out,
                         ParamVector& grad_out) const override;

  const QuadraticSpec& spec() const { return spec_; }

 private:
  QuadraticSpec spec_;
  std::shared_ptr<const SegmentLayout> layout_;
};

// Dense symmetric quadratic 0.5 * (theta - c)^T A (theta - c); A is
// symmetrized at construction. Used by trace and spectrum tests where a
// non-diagonal Hessian with a known spectrum is needed.
class DenseQuadraticLoss : public DifferentiableLoss {
 public:
  DenseQuadraticLoss(Matrix a, std::vector<double> center);

  std::size_t dimension() const override { return center_.size(); }
  std::shared_ptr<const SegmentLayout> layout() const override {
    return layout_;
  }

  double value(const ParamVector& point, const Batch& batch) const override;
  double value_and_gradient(const ParamVector& point, const Batch& batch,
                            ParamVector& grad_out) const override;
  void hvp_with_gradient(const ParamVector& point, const ParamVector& direction,
                         const Batch& batch, ParamVector& hvp_out,
                         ParamVector& grad_out) const override;

  double exact_trace() const;

 private:
  Matrix a_;
  std::vector<double> center_;
  std::shared_ptr<const SegmentLayout> layout_;
};

}  // namespace gam
