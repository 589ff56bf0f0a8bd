#pragma once

#include <functional>
#include <memory>
#include <span>

#include "gam/dataset.hpp"
#include "gam/param_vector.hpp"
#include "gam/tape.hpp"

namespace gam {

// A twice-differentiable scalar loss over a flat parameter vector, queried
// per batch. Implementations are immutable after construction and safe to
// share across threads; each query carries its own scratch state.
class DifferentiableLoss {
 public:
  virtual ~DifferentiableLoss() = default;

  virtual std::size_t dimension() const = 0;
  virtual std::shared_ptr<const SegmentLayout> layout() const = 0;

  virtual double value(const ParamVector& point, const Batch& batch) const = 0;

  // Returns the loss value; writes the gradient. One pass where possible.
  virtual double value_and_gradient(const ParamVector& point,
                                    const Batch& batch,
                                    ParamVector& grad_out) const = 0;

  // Hessian-vector product at point along direction; writes into hvp_out and
  // also reports the gradient (free with forward-over-reverse).
  virtual void hvp_with_gradient(const ParamVector& point,
                                 const ParamVector& direction,
                                 const Batch& batch, ParamVector& hvp_out,
                                 ParamVector& grad_out) const = 0;
};

struct GradQuery {
  const DifferentiableLoss& loss;
  const ParamVector& point;
  const Batch& batch;
};

struct HvpQuery {
  const DifferentiableLoss& loss;
  const ParamVector& point;
  const ParamVector& direction;
  const Batch& batch;
};

double evaluate(const DifferentiableLoss& loss, const ParamVector& point,
                const Batch& batch);

ParamVector gradient(const GradQuery& q);

// Exact Hessian-vector product (tangent pass over the adjoint graph).
ParamVector hvp(const HvpQuery& q);

// Central-difference check: (grad(p + eps v) - grad(p - eps v)) / (2 eps).
ParamVector hvp_fd(const HvpQuery& q, double eps);

// Ascent direction of the gradient-norm surface:
//   H(point) g(point) / (||g(point)|| + xi).
ParamVector grad_norm_ascent_direction(const GradQuery& q, double xi);

// Loss defined by a tape-builder callback; the bridge used by models and by
// tests that need ad-hoc analytic losses.
class GraphLoss : public DifferentiableLoss {
 public:
  using Builder =
      std::function<ad::Var(std::span<const ad::Var>, const Batch&, ad::Tape&)>;

  GraphLoss(std::size_t dimension, Builder builder,
            std::shared_ptr<const SegmentLayout> layout = nullptr);

  std::size_t dimension() const override { return dim_; }
  std::shared_ptr<const SegmentLayout> layout() const override {
    return layout_;
  }

  double value(const ParamVector& point, const Batch& batch) const override;
  double value_and_gradient(const ParamVector& point, const Batch& batch,
                            ParamVector& grad_out) const override;
  void hvp_with_gradient(const ParamVector& point, const ParamVector& direction,
                         const Batch& batch, ParamVector& hvp_out,
                         ParamVector& grad_out) const override;

 private:
  std::size_t dim_;
  Builder builder_;
  std::shared_ptr<const SegmentLayout> layout_;
};

}  // namespace gam
