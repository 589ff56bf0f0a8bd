#include "gam/param_vector.hpp"

#include <cmath>
#include <stdexcept>

#include "gam/errors.hpp"

namespace gam {

SegmentLayout::SegmentLayout(std::vector<Segment> segments)
    : segments_(std::move(segments)) {
  std::size_t expect = 0;
  for (const auto& s : segments_) {
    if (s.offset != expect) {
      throw std::invalid_argument("segment '" + s.name +
                                  "' does not start at offset " +
                                  std::to_string(expect));
    }
    if (s.size == 0) {
      throw std::invalid_argument("segment '" + s.name + "' is empty");
    }
    expect += s.size;
  }
  dim_ = expect;
}

const Segment* SegmentLayout::find(const std::string& name) const {
  for (const auto& s : segments_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

ParamVector::ParamVector(std::vector<double> values,
                         std::shared_ptr<const SegmentLayout> layout)
    : values_(std::move(values)), layout_(std::move(layout)) {
  if (layout_ && layout_->dim() != values_.size()) {
    throw std::invalid_argument(
        "layout dimension " + std::to_string(layout_->dim()) +
        " does not match vector size " + std::to_string(values_.size()));
  }
  check_finite("ParamVector construction");
}

void ParamVector::set_layout(std::shared_ptr<const SegmentLayout> layout) {
  if (layout && layout->dim() != values_.size()) {
    throw std::invalid_argument("layout dimension mismatch in set_layout");
  }
  layout_ = std::move(layout);
}

double ParamVector::norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

double ParamVector::dot(const ParamVector& other) const {
  if (other.dim() != dim()) {
    throw std::invalid_argument("dot: dimension mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) s += values_[i] * other[i];
  return s;
}

void ParamVector::axpy(double a, const ParamVector& x) {
  if (x.dim() != dim()) throw std::invalid_argument("axpy: dimension mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += a * x[i];
  check_finite("axpy");
}

void ParamVector::scale(double a) {
  for (auto& v : values_) v *= a;
  check_finite("scale");
}

void ParamVector::check_finite(const char* context) const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw NumericError(std::string(context) + ": non-finite entry at index " +
                         std::to_string(i));
    }
  }
}

ParamVector ParamVector::zeros_like() const {
  ParamVector z(dim());
  z.layout_ = layout_;
  return z;
}

ParamVector add_scaled(const ParamVector& a, double s, const ParamVector& b) {
  ParamVector out = a;
  out.axpy(s, b);
  return out;
}

}  // namespace gam
