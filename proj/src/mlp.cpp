#include "gam/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gam/errors.hpp"
#include "gam/rng.hpp"

namespace gam {

namespace {

void validate_spec(const MlpSpec& spec) {
  if (spec.layer_widths.size() < 2) {
    throw std::invalid_argument("MlpSpec: need at least input and output widths");
  }
  for (int w : spec.layer_widths) {
    if (w < 1) throw std::invalid_argument("MlpSpec: widths must be >= 1");
  }
  if (!(spec.init_scale > 0.0)) {
    throw std::invalid_argument("MlpSpec: init_scale must be > 0");
  }
}

}  // namespace

std::size_t mlp_dimension(const MlpSpec& spec) {
  validate_spec(spec);
  std::size_t d = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_widths.size(); ++l) {
    d += static_cast<std::size_t>(spec.layer_widths[l]) *
             static_cast<std::size_t>(spec.layer_widths[l + 1]) +
         static_cast<std::size_t>(spec.layer_widths[l + 1]);
  }
  return d;
}

std::shared_ptr<const SegmentLayout> mlp_layout(const MlpSpec& spec) {
  validate_spec(spec);
  std::vector<Segment> segs;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_widths.size(); ++l) {
    const auto in = static_cast<std::size_t>(spec.layer_widths[l]);
    const auto out = static_cast<std::size_t>(spec.layer_widths[l + 1]);
    segs.push_back({"w" + std::to_string(l + 1), off, in * out, false});
    off += in * out;
    segs.push_back({"b" + std::to_string(l + 1), off, out, true});
    off += out;
  }
  return std::make_shared<SegmentLayout>(std::move(segs));
}

ParamVector init_params(const MlpSpec& spec) {
  validate_spec(spec);
  Rng rng(spec.init_seed);
  std::vector<double> v(mlp_dimension(spec));
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_widths.size(); ++l) {
    const auto in = static_cast<std::size_t>(spec.layer_widths[l]);
    const auto out = static_cast<std::size_t>(spec.layer_widths[l + 1]);
    const double s = spec.init_scale / std::sqrt(static_cast<double>(in));
    for (std::size_t i = 0; i < in * out; ++i) v[off++] = rng.uniform(-s, s);
    off += out;  // biases stay zero
  }
  return ParamVector(std::move(v), mlp_layout(spec));
}

MlpLoss::MlpLoss(MlpSpec spec, Task task)
    : spec_(std::move(spec)), task_(task) {
  validate_spec(spec_);
  dim_ = mlp_dimension(spec_);
  layout_ = mlp_layout(spec_);
}

void MlpLoss::check_batch(const Batch& batch) const {
  if (batch.size() == 0) {
    throw std::invalid_argument("MlpLoss: empty batch");
  }
  if (batch.inputs.cols != static_cast<std::size_t>(spec_.layer_widths.front())) {
    throw std::invalid_argument(
        "MlpLoss: batch feature width " + std::to_string(batch.inputs.cols) +
        " does not match input width " +
        std::to_string(spec_.layer_widths.front()));
  }
  const auto out_w = static_cast<std::size_t>(spec_.layer_widths.back());
  if (task_ == Task::kSoftmaxCrossEntropy) {
    if (batch.labels.size() != batch.size()) {
      throw std::invalid_argument("MlpLoss: cross-entropy needs labels");
    }
    for (int lab : batch.labels) {
      if (lab < 0 || static_cast<std::size_t>(lab) >= out_w) {
        throw std::invalid_argument("MlpLoss: label " + std::to_string(lab) +
                                    " out of range for " +
                                    std::to_string(out_w) + " outputs");
      }
    }
  } else {
    if (batch.targets.rows != batch.size() || batch.targets.cols != out_w) {
      throw std::invalid_argument("MlpLoss: mse needs per-row targets of "
                                  "output width");
    }
  }
}

ad::Var MlpLoss::build(std::span<const ad::Var> params, const Batch& batch,
                       ad::Tape& tape) const {
  const std::size_t layers = spec_.layer_widths.size() - 1;
  const std::size_t b = batch.size();

  std::vector<ad::Var> h;
  std::vector<ad::Var> z;
  ad::Var total;
  for (std::size_t r = 0; r < b; ++r) {
    h.clear();
    for (std::size_t c = 0; c < batch.inputs.cols; ++c) {
      h.emplace_back(&tape, tape.constant(batch.inputs.at(r, c)));
    }
    std::size_t off = 0;
    for (std::size_t l = 0; l < layers; ++l) {
      const auto in = static_cast<std::size_t>(spec_.layer_widths[l]);
      const auto out = static_cast<std::size_t>(spec_.layer_widths[l + 1]);
      z.clear();
      for (std::size_t j = 0; j < out; ++j) {
        ad::Var acc = params[off + in * out + j];  // bias
        for (std::size_t i = 0; i < in; ++i) {
          acc = acc + h[i] * params[off + i * out + j];
        }
        z.push_back(acc);
      }
      off += in * out + out;
      if (l + 1 < layers) {
        for (auto& v : z) {
          v = spec_.activation == Activation::kTanh ? ad::tanh(v) : ad::relu(v);
        }
      }
      h = z;
    }

    ad::Var ex_loss;
    if (task_ == Task::kSoftmaxCrossEntropy) {
      // Max shift by the current primal values; any constant shift leaves
      // log-sum-exp identical, so gradients and HVPs stay exact.
      double m = h[0].value();
      for (const auto& v : h) m = std::max(m, v.value());
      ad::Var sum_exp = ad::exp(h[0] - m);
      for (std::size_t j = 1; j < h.size(); ++j) {
        sum_exp = sum_exp + ad::exp(h[j] - m);
      }
      const auto lab = static_cast<std::size_t>(batch.labels[r]);
      ex_loss = ad::log(sum_exp) + m - h[lab];
    } else {
      ad::Var acc = ad::square(h[0] - batch.targets.at(r, 0));
      for (std::size_t j = 1; j < h.size(); ++j) {
        acc = acc + ad::square(h[j] - batch.targets.at(r, j));
      }
      ex_loss = acc / static_cast<double>(h.size());
    }
    total = (r == 0) ? ex_loss : total + ex_loss;
  }
  return total / static_cast<double>(b);
}

double MlpLoss::value(const ParamVector& point, const Batch& batch) const {
  check_batch(batch);
  GraphLoss g(dim_,
              [this](std::span<const ad::Var> p, const Batch& bt,
                     ad::Tape& t) { return build(p, bt, t); },
              layout_);
  return g.value(point, batch);
}

double MlpLoss::value_and_gradient(const ParamVector& point, const Batch& batch,
                                   ParamVector& grad_out) const {
  check_batch(batch);
  GraphLoss g(dim_,
              [this](std::span<const ad::Var> p, const Batch& bt,
                     ad::Tape& t) { return build(p, bt, t); },
              layout_);
  return g.value_and_gradient(point, batch, grad_out);
}

void MlpLoss::hvp_with_gradient(const ParamVector& point,
                                const ParamVector& direction,
                                const Batch& batch, ParamVector& hvp_out,
                                ParamVector& grad_out) const {
  check_batch(batch);
  GraphLoss g(dim_,
              [this](std::span<const ad::Var> p, const Batch& bt,
                     ad::Tape& t) { return build(p, bt, t); },
              layout_);
  g.hvp_with_gradient(point, direction, batch, hvp_out, grad_out);
}

Matrix MlpLoss::predict(const ParamVector& point, const Matrix& inputs) const {
  if (inputs.cols != static_cast<std::size_t>(spec_.layer_widths.front())) {
    throw std::invalid_argument("predict: feature width mismatch");
  }
  const std::size_t layers = spec_.layer_widths.size() - 1;
  const auto out_w = static_cast<std::size_t>(spec_.layer_widths.back());
  Matrix out(inputs.rows, out_w);
  std::vector<double> h, z;
  for (std::size_t r = 0; r < inputs.rows; ++r) {
    h.assign(inputs.row(r).begin(), inputs.row(r).end());
    std::size_t off = 0;
    for (std::size_t l = 0; l < layers; ++l) {
      const auto in = static_cast<std::size_t>(spec_.layer_widths[l]);
      const auto ow = static_cast<std::size_t>(spec_.layer_widths[l + 1]);
      z.assign(ow, 0.0);
      for (std::size_t j = 0; j < ow; ++j) {
        double acc = point[off + in * ow + j];
        for (std::size_t i = 0; i < in; ++i) {
          acc += h[i] * point[off + i * ow + j];
        }
        z[j] = acc;
      }
      off += in * ow + ow;
      if (l + 1 < layers) {
        for (auto& v : z) {
          v = spec_.activation == Activation::kTanh ? std::tanh(v)
                                                    : std::max(v, 0.0);
        }
      }
      h = z;
    }
    for (std::size_t j = 0; j < out_w; ++j) out.at(r, j) = h[j];
  }
  return out;
}

std::vector<int> MlpLoss::predict_labels(const ParamVector& point,
                                         const Matrix& inputs) const {
  Matrix scores = predict(point, inputs);
  std::vector<int> labels(scores.rows);
  for (std::size_t r = 0; r < scores.rows; ++r) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < scores.cols; ++j) {
      if (scores.at(r, j) > scores.at(r, best)) best = j;  // ties keep lowest
    }
    labels[r] = static_cast<int>(best);
  }
  return labels;
}

double accuracy(const MlpLoss& loss, const ParamVector& point,
                const Matrix& inputs, const std::vector<int>& labels) {
  if (labels.size() != inputs.rows) {
    throw std::invalid_argument("accuracy: label count mismatch");
  }
  if (labels.empty()) return 0.0;
  auto pred = loss.predict_labels(point, inputs);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (pred[i] == labels[i]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

}  // namespace gam
