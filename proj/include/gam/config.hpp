#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gam/flatness.hpp"
#include "gam/mlp.hpp"
#include "gam/schedule.hpp"
#include "gam/train.hpp"

namespace gam {

enum class DatasetKind { kTwoMoons, kGaussianBlobs, kCsv, kIdx, kQuadratic };

struct DatasetConfig {
  DatasetKind kind = DatasetKind::kTwoMoons;
  // two_moons / gaussian_blobs
  std::size_t n = 0;
  double noise = 0.1;
  int k = 2;
  int dim = 2;
  double spread = 1.0;
  // csv
  std::string path;
  int label_col = 0;
  // idx
  std::string images_path;
  std::string labels_path;
  std::size_t subset_n = 0;
  // quadratic: explicit eigenvalues, or quad_dim of them defaulting to 1.0
  std::vector<double> diag;
  int quad_dim = 0;
};

enum class ModelKind { kMlp, kQuadratic };

struct ModelConfig {
  ModelKind kind = ModelKind::kMlp;
  std::vector<int> layer_widths;  // full stack, input and output included
  Activation activation = Activation::kTanh;
  Task task = Task::kSoftmaxCrossEntropy;
  std::uint64_t init_seed = 1;
  double init_scale = 1.0;
};

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kSgd;
  double eta0 = 0.1;
  double rho0 = 0.1;
  double alpha = 0.1;
  double xi = 1e-12;
  double momentum = 0.9;
  double weight_decay = 0.0;
  double gam_apply_ratio = 1.0;
  ScheduleKind lr_schedule = ScheduleKind::kCosine;
  ScheduleKind rho_schedule = ScheduleKind::kConstant;
};

struct DiagnosticsConfig {
  double rho = 0.1;
  int num_directions = 100;
  double step_norm = 0.01;
  int num_steps = 10;
  int ascent_steps = 20;
  double ascent_lr = 0.0;  // 0 selects rho/10
  std::uint64_t probe_seed = 1;
  int top_k = 5;
  int power_iters = 200;
  double power_tol = 1e-9;
  int hutchinson_probes = 32;
  std::vector<int> spectrum_epochs;
  std::vector<int> slice_dims;  // subset of {1, 2}; emitted after training
  double slice_half_width = 1.0;
  int slice_points = 41;
};

struct RunConfig {
  DatasetConfig dataset;
  ModelConfig model;
  OptimizerConfig optimizer;
  int epochs = 1;
  std::size_t batch_size = 0;  // 0: resolved to min(128, n) when n is known
  std::uint64_t seed = 1;
  DiagnosticsConfig diagnostics;
  std::string output_dir = "out";
};

// Parse + validate + apply defaults. Unknown keys are errors naming the full
// key path. File paths referenced by the dataset must exist. batch_size is
// resolved against n for generated datasets; file-backed datasets resolve it
// at load time.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const nlohmann::json& j);

// Fully resolved config as JSON; serializing and re-parsing is the identity.
nlohmann::json config_to_json(const RunConfig& cfg);

// Sorted-key, 2-space-indented form used for manifests and round-trip tests.
std::string canonical_config(const RunConfig& cfg);

ProbeConfig probe_from_diagnostics(const DiagnosticsConfig& d);

}  // namespace gam
