#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "gam/loss.hpp"

namespace gam {

// Probe protocol shared by the census and the R0/R1 estimators.
// step_norm * num_steps is the census radius.
struct ProbeConfig {
  int num_directions = 100;
  double step_norm = 0.01;
  int num_steps = 10;
  std::uint64_t seed = 0;
  int ascent_steps = 20;
  double ascent_lr = 0.0;  // 0 selects rho / 10 at estimation time

  void validate() const;
};

// Histogram over probe directions: (interior minima, interior maxima) count
// pairs mapped to the number of directions that produced that pair.
using CensusHistogram = std::map<std::pair<int, int>, int>;

struct R0R1Estimate {
  double r0_hat = 0.0;
  double r1_hat = 0.0;
};

// Worst loss increase (r0) and rho * worst gradient norm (r1) over a shared
// probe set inside the ball B(point, rho). Both are lower bounds on the true
// suprema; see the implementation notes for the probe schedule.
R0R1Estimate estimate_r0_r1(const DifferentiableLoss& loss,
                            const ParamVector& point, const Batch& batch,
                            double rho, const ProbeConfig& probe);

double estimate_r0(const DifferentiableLoss& loss, const ParamVector& point,
                   const Batch& batch, double rho, const ProbeConfig& probe);

double estimate_r1(const DifferentiableLoss& loss, const ParamVector& point,
                   const Batch& batch, double rho, const ProbeConfig& probe);

struct PowerIterationResult {
  std::vector<double> values;    // sorted descending
  std::vector<bool> converged;   // aligned with values
};

// Top-k Hessian eigenvalues by power iteration with Gram-Schmidt deflation.
// Convergence: successive Rayleigh quotients differ by less than tol.
// Non-converged estimates are still returned, flagged false.
PowerIterationResult power_iteration_topk(const DifferentiableLoss& loss,
                                          const ParamVector& point,
                                          const Batch& batch, int k, int iters,
                                          double tol, std::uint64_t seed);

struct TraceEstimate {
  double trace_hat = 0.0;
  double stderr_hat = 0.0;  // sample std / sqrt(num_probes)
};

// Hutchinson estimator: mean of z' H z over Rademacher probes z.
TraceEstimate hutchinson_trace(const DifferentiableLoss& loss,
                               const ParamVector& point, const Batch& batch,
                               int num_probes, std::uint64_t seed);

// Walks num_steps increments of step_norm along each of num_directions seeded
// unit directions and counts strict interior local minima and maxima of the
// sampled loss sequence. Endpoints never count.
CensusHistogram minima_census(const DifferentiableLoss& loss,
                              const ParamVector& point, const Batch& batch,
                              const ProbeConfig& probe);

// 1-D (dir2 == nullptr) or 2-D loss slice on an odd symmetric grid centered
// at point. Directions are filter-normalized per parameter segment before
// use. values is row-major: values[iy * grid_points + ix] for 2-D.
struct SliceResult {
  std::vector<double> offsets;  // grid coordinates, shared by both axes
  std::vector<double> values;
  bool two_dim = false;
};

SliceResult landscape_slice(const DifferentiableLoss& loss,
                            const ParamVector& point, const Batch& batch,
                            const ParamVector& dir1, const ParamVector* dir2,
                            double grid_half_width, int grid_points);

struct BoundInputs {
  std::int64_t n = 0;       // sample count, > 1
  std::int64_t d = 0;       // parameter dimension, >= 1
  double rho = 0.0;         // > 0
  double M = 0.0;           // loss bound, >= emp_loss
  double delta = 0.0;       // confidence, in (0, 1)
  double theta_norm = 0.0;  // ||theta||
  double emp_loss = 0.0;    // >= 0
  double r1 = 0.0;          // first-order flatness at theta
};

// High-probability generalization bound:
//   emp_loss + r1 + M/sqrt(n)
//     + sqrt(( d/4 ln(1 + ||theta||^2 (sqrt(d)+sqrt(ln n))^2 / (d rho^2))
//             + 1/4 + ln(n/delta) + 2 ln(6n + 3d) ) / (n - 1)).
double generalization_bound(const BoundInputs& b);

struct FlatnessOptions {
  double rho = 0.1;
  ProbeConfig probe;
  int top_k = 5;
  int power_iters = 200;
  double power_tol = 1e-9;
  int hutchinson_probes = 32;
};

struct FlatnessReport {
  double rho = 0.0;
  double r0_hat = 0.0;
  double r1_hat = 0.0;
  std::vector<double> lambda_topk;
  std::vector<bool> lambda_converged;
  double trace_hat = 0.0;
  double trace_stderr = 0.0;
  CensusHistogram census;
};

// One-stop report at a parameter point: R0/R1, top-k spectrum, trace, census.
FlatnessReport measure_flatness(const DifferentiableLoss& loss,
                                const ParamVector& point, const Batch& batch,
                                const FlatnessOptions& opts);

}  // namespace gam
