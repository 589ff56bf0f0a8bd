#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace gam {

struct Segment {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
  bool is_bias = false;  // bias segments are excluded from weight decay
};

// Named, contiguous, non-overlapping cover of [0, dim).
class SegmentLayout {
 public:
  SegmentLayout() = default;
  explicit SegmentLayout(std::vector<Segment> segments);

  std::size_t dim() const { return dim_; }
  const std::vector<Segment>& segments() const { return segments_; }
  const Segment* find(const std::string& name) const;

 private:
  std::vector<Segment> segments_;
  std::size_t dim_ = 0;
};

// Flat parameter vector. Every public mutating operation checks that the
// result is finite and throws NumericError otherwise.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t dim) : values_(dim, 0.0) {}
  ParamVector(std::vector<double> values,
              std::shared_ptr<const SegmentLayout> layout = nullptr);

  std::size_t dim() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  const std::shared_ptr<const SegmentLayout>& layout() const { return layout_; }
  void set_layout(std::shared_ptr<const SegmentLayout> layout);

  double norm() const;
  double dot(const ParamVector& other) const;

  // this += a * x
  void axpy(double a, const ParamVector& x);
  void scale(double a);
  void check_finite(const char* context) const;

  ParamVector zeros_like() const;

 private:
  std::vector<double> values_;
  std::shared_ptr<const SegmentLayout> layout_;
};

ParamVector add_scaled(const ParamVector& a, double s, const ParamVector& b);

}  // namespace gam
