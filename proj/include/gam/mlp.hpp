#pragma once

#include <cstdint>
#include <vector>

#include "gam/loss.hpp"

namespace gam {

enum class Activation { kTanh, kRelu };

enum class Task { kSoftmaxCrossEntropy, kMse };

struct MlpSpec {
  std::vector<int> layer_widths;  // input width first, output width last
  Activation activation = Activation::kTanh;
  std::uint64_t init_seed = 1;
  double init_scale = 1.0;
};

// Total parameter count: sum over layers of in*out + out.
std::size_t mlp_dimension(const MlpSpec& spec);

std::shared_ptr<const SegmentLayout> mlp_layout(const MlpSpec& spec);

// Weights uniform(-s, s) with s = init_scale / sqrt(fan_in); biases zero.
// Deterministic in init_seed.
ParamVector init_params(const MlpSpec& spec);

// Fully connected network evaluated per example through the tape; batch loss
// is the mean per-example loss. Cross-entropy runs through a max-shifted
// log-sum-exp; the shift is a constant, so derivatives are exact.
class MlpLoss : public DifferentiableLoss {
 public:
  MlpLoss(MlpSpec spec, Task task);

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

  // Raw network outputs, no tape involved.
  Matrix predict(const ParamVector& point, const Matrix& inputs) const;
  // argmax over outputs; ties resolve to the lowest class index.
  std::vector<int> predict_labels(const ParamVector& point,
                                  const Matrix& inputs) const;

  const MlpSpec& spec() const { return spec_; }
  Task task() const { return task_; }

 private:
  ad::Var build(std::span<const ad::Var> params, const Batch& batch,
                ad::Tape& tape) const;
  void check_batch(const Batch& batch) const;

  MlpSpec spec_;
  Task task_;
  std::size_t dim_;
  std::shared_ptr<const SegmentLayout> layout_;
};

// Fraction of rows where predicted label equals the dataset label.
double accuracy(const MlpLoss& loss, const ParamVector& point,
                const Matrix& inputs, const std::vector<int>& labels);

}  // namespace gam
