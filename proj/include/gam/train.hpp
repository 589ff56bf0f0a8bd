#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gam/dataset.hpp"
#include "gam/mlp.hpp"
#include "gam/optimizer.hpp"

namespace gam {

enum class OptimizerKind { kSgd, kSam, kGam, kSamGam };

struct TrainSetup {
  OptimizerKind kind = OptimizerKind::kSgd;
  OptimizerState state;         // hyperparameters; t/momentum reset inside
  double weight_decay = 0.0;
  double gam_apply_ratio = 1.0;  // fraction of each epoch's iterations
  int epochs = 1;
  std::size_t batch_size = 0;    // 0 means full batch
  std::uint64_t seed = 0;

  // Optional hooks. step_observer sees every optimizer step (1-based step
  // index); epoch_observer sees the parameters after each completed epoch.
  std::function<void(std::int64_t, const StepReport&)> step_observer;
  std::function<void(int, const ParamVector&)> epoch_observer;
};

struct EpochRow {
  int epoch = 0;            // 1-based
  std::int64_t step = 0;    // cumulative optimizer steps so far
  double train_loss = 0.0;  // full-train empirical loss at epoch end
  double train_acc = 0.0;   // 0 when the model has no class labels
  double test_acc = 0.0;
  double mean_overall_grad_norm_sq = 0.0;
  double wall_ms = 0.0;
};

struct TrainResult {
  std::vector<EpochRow> rows;  // completed epochs only
  ParamVector params;
  OptimizerState state;
  bool diverged = false;
  std::string message;
};

// Seeded-shuffle minibatch training. The first ceil(ratio * iters) iterations
// of each epoch take the gradient-norm-aware step; the rest take the base
// step (plain for kGam, perturbed for kSamGam). A non-finite loss stops the
// run with the completed epochs' rows and diverged set.
TrainResult train_run(const DifferentiableLoss& empirical,
                      const MlpLoss* accuracy_model, const TrainTestData& data,
                      const ParamVector& init, const TrainSetup& setup);

}  // namespace gam
