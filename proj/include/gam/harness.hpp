#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "gam/config.hpp"
#include "gam/flatness.hpp"
#include "gam/quadratic.hpp"
#include "gam/train.hpp"

namespace gam {

// Dataset, model, and initial point built from a validated config. The loss
// reference stays valid as long as this struct lives.
struct Materialized {
  TrainTestData data;
  std::unique_ptr<MlpLoss> mlp;             // null for quadratic models
  std::unique_ptr<QuadraticLoss> quadratic; // null for mlp models
  ParamVector init;
  std::size_t batch_size = 0;               // resolved, never 0

  const DifferentiableLoss& loss() const;
};

Materialized materialize(const RunConfig& cfg);

// metrics.csv: header plus one row per epoch; doubles in shortest
// round-trip form so identical runs produce identical bytes.
void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<EpochRow>& rows);

// Comparison mode: equality of everything except the wall_ms column.
bool metrics_equal_ignoring_wall_ms(const std::filesystem::path& a,
                                    const std::filesystem::path& b);

nlohmann::json flatness_to_json(const FlatnessReport& report);

// Flat little-endian 64-bit array at bin_path plus a JSON sidecar (same stem,
// .json) carrying the dimension and the segment table.
void save_checkpoint(const std::filesystem::path& bin_path,
                     const ParamVector& params);
ParamVector load_checkpoint(const std::filesystem::path& bin_path);

// One full experiment: train, write metrics.csv, flatness_<epoch>.json at
// the configured epochs, optional slice csvs, the final checkpoint, and
// manifest.json (written last). Returns the training result; a diverged run
// still writes everything and is flagged in the manifest.
TrainResult run_experiment(const RunConfig& cfg);

struct SweepCell {
  double rho = 0.0;
  double alpha = 0.0;
  std::string status;  // ok | diverged | error
  double final_test_acc = 0.0;
  double best_test_acc = 0.0;
  double final_lambda_max = 0.0;
};

// One run per (rho, alpha) cell, row-major over the grids, each with seed
// derive_seed(base seed, cell index) and its own output subdirectory. Cells
// run concurrently (at most 8 in flight); failures are recorded and the
// sweep continues. Writes summary.csv under the base output_dir.
std::vector<SweepCell> sweep_experiment(const RunConfig& base,
                                        const std::vector<double>& rhos,
                                        const std::vector<double>& alphas);

// Flatness report at a saved parameter point; writes
// flatness_checkpoint.json under the config's output_dir.
FlatnessReport diagnose_checkpoint(const RunConfig& cfg,
                                   const std::filesystem::path& checkpoint);

// Census at the initial parameters; writes census.csv (minima,maxima,
// directions, sorted).
CensusHistogram census_experiment(const RunConfig& cfg);

// Loss slice at the initial parameters along seeded random directions;
// writes slice_1d.csv or slice_2d.csv.
SliceResult slice_experiment(const RunConfig& cfg, int dim);

}  // namespace gam
