#include "gam/quadratic.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gam {

namespace {

std::shared_ptr<const SegmentLayout> single_segment(std::size_t dim) {
  return std::make_shared<SegmentLayout>(
      std::vector<Segment>{{"theta", 0, dim, false}});
}

}  // namespace

QuadraticLoss::QuadraticLoss(QuadraticSpec spec) : spec_(std::move(spec)) {
  if (spec_.diag.empty()) {
    throw std::invalid_argument("QuadraticLoss: diag must be non-empty");
  }
  if (spec_.center.empty()) {
    spec_.center.assign(spec_.diag.size(), 0.0);
  }
  if (spec_.center.size() != spec_.diag.size()) {
    throw std::invalid_argument("QuadraticLoss: center dimension " +
                                std::to_string(spec_.center.size()) +
                                " != diag dimension " +
                                std::to_string(spec_.diag.size()));
  }
  for (double a : spec_.diag) {
    if (!std::isfinite(a)) {
      throw std::invalid_argument("QuadraticLoss: non-finite diag entry");
    }
  }
  layout_ = single_segment(spec_.diag.size());
}

double QuadraticLoss::value(const ParamVector& point,
                            const Batch& /*batch*/) const {
  double s = 0.0;
  for (std::size_t i = 0; i < spec_.diag.size(); ++i) {
    const double d = point[i] - spec_.center[i];
    s += spec_.diag[i] * d * d;
  }
  return 0.5 * s;
}

double QuadraticLoss::value_and_gradient(const ParamVector& point,
                                         const Batch& batch,
                                         ParamVector& grad_out) const {
  for (std::size_t i = 0; i < spec_.diag.size(); ++i) {
    grad_out[i] = spec_.diag[i] * (point[i] - spec_.center[i]);
  }
  return value(point, batch);
}

void QuadraticLoss::hvp_with_gradient(const ParamVector& point,
                                      const ParamVector& direction,
                                      const Batch& /*batch*/,
                                      ParamVector& hvp_out,
                                      ParamVector& grad_out) const {
  for (std::size_t i = 0; i < spec_.diag.size(); ++i) {
    hvp_out[i] = spec_.diag[i] * direction[i];
    grad_out[i] = spec_.diag[i] * (point[i] - spec_.center[i]);
  }
}

DenseQuadraticLoss::DenseQuadraticLoss(Matrix a, std::vector<double> center)
    : a_(std::move(a)), center_(std::move(center)) {
  if (a_.rows != a_.cols || a_.rows == 0) {
    throw std::invalid_argument("DenseQuadraticLoss: matrix must be square");
  }
  if (center_.empty()) center_.assign(a_.rows, 0.0);
  if (center_.size() != a_.rows) {
    throw std::invalid_argument("DenseQuadraticLoss: center dimension "
                                "does not match matrix");
  }
  for (std::size_t i = 0; i < a_.rows; ++i) {
    for (std::size_t j = i + 1; j < a_.cols; ++j) {
      const double s = 0.5 * (a_.at(i, j) + a_.at(j, i));
      a_.at(i, j) = s;
      a_.at(j, i) = s;
    }
  }
  layout_ = single_segment(center_.size());
}

double DenseQuadraticLoss::value(const ParamVector& point,
                                 const Batch& /*batch*/) const {
  const std::size_t d = center_.size();
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      row += a_.at(i, j) * (point[j] - center_[j]);
    }
    s += (point[i] - center_[i]) * row;
  }
  return 0.5 * s;
}

double DenseQuadraticLoss::value_and_gradient(const ParamVector& point,
                                              const Batch& batch,
                                              ParamVector& grad_out) const {
  const std::size_t d = center_.size();
  for (std::size_t i = 0; i < d; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      row += a_.at(i, j) * (point[j] - center_[j]);
    }
    grad_out[i] = row;
  }
  return value(point, batch);
}

void DenseQuadraticLoss::hvp_with_gradient(const ParamVector& point,
                                           const ParamVector& direction,
                                           const Batch& batch,
                                           ParamVector& hvp_out,
                                           ParamVector& grad_out) const {
  value_and_gradient(point, batch, grad_out);
  const std::size_t d = center_.size();
  for (std::size_t i = 0; i < d; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < d; ++j) row += a_.at(i, j) * direction[j];
    hvp_out[i] = row;
  }
}

double DenseQuadraticLoss::exact_trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < a_.rows; ++i) t += a_.at(i, i);
  return t;
}

}  // namespace gam
