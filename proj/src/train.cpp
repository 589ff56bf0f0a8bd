#include "gam/train.hpp"

#include <chrono>
#include <cmath>
#include <span>

#include "gam/errors.hpp"
#include "gam/oracle_loss.hpp"
#include "gam/rng.hpp"

namespace gam {

namespace {

constexpr std::uint64_t kShuffleStream = 0x7261;

double accuracy_or_zero(const MlpLoss* model, const ParamVector& params,
                        const Dataset& ds) {
  if (!model || ds.y.empty() || ds.n() == 0) return 0.0;
  return accuracy(*model, params, ds.X, ds.y);
}

}  // namespace

TrainResult train_run(const DifferentiableLoss& empirical,
                      const MlpLoss* accuracy_model, const TrainTestData& data,
                      const ParamVector& init, const TrainSetup& setup) {
  const std::size_t n = data.train.n();
  if (n == 0) throw std::invalid_argument("train_run: empty training set");
  if (setup.epochs < 1)
    throw std::invalid_argument("train_run: epochs must be >= 1");
  if (setup.batch_size > n)
    throw std::invalid_argument("train_run: batch_size exceeds dataset size");
  if (setup.gam_apply_ratio < 0.0 || setup.gam_apply_ratio > 1.0)
    throw std::invalid_argument("train_run: gam_apply_ratio must be in [0, 1]");
  if (init.dim() != empirical.dimension())
    throw std::invalid_argument("train_run: init dimension mismatch");

  const std::size_t bs = setup.batch_size == 0 ? n : setup.batch_size;
  const std::size_t iters = (n + bs - 1) / bs;
  const bool wants_gam =
      setup.kind == OptimizerKind::kGam || setup.kind == OptimizerKind::kSamGam;
  const std::size_t gam_iters =
      wants_gam ? static_cast<std::size_t>(std::ceil(
                      setup.gam_apply_ratio * static_cast<double>(iters)))
                : 0;

  TrainResult res;
  res.params = init;
  OptimizerState& st = res.state;
  st = setup.state;
  st.t = 0;
  st.momentum = ParamVector(init.dim());
  if ((st.lr_schedule == ScheduleKind::kCosine ||
       st.rho_schedule == ScheduleKind::kCosine) &&
      st.horizon == 0) {
    st.horizon = static_cast<std::int64_t>(iters) * setup.epochs;
  }

  OracleLossSpec wd_spec;
  wd_spec.weight_decay = setup.weight_decay;
  wd_spec.xi = st.xi;
  OracleLoss wd_oracle(empirical, wd_spec);
  // With no regularizer the base loss doubles as the oracle; the aliased
  // argument lets gam_step reuse its shared gradient.
  const bool plain = setup.weight_decay == 0.0;
  const DifferentiableLoss& base_loss =
      plain ? empirical : static_cast<const DifferentiableLoss&>(wd_oracle);

  const Batch full_train = data.train.full_batch();
  const std::uint64_t shuffle_base = derive_seed(setup.seed, kShuffleStream);

  for (int epoch = 1; epoch <= setup.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng shuffle_rng(derive_seed(shuffle_base,
                                static_cast<std::uint64_t>(epoch)));
    const std::vector<std::size_t> perm = shuffle_rng.permutation(n);

    double overall_sum = 0.0;
    std::size_t steps_done = 0;
    for (std::size_t it = 0; it < iters; ++it) {
      const std::size_t lo = it * bs;
      const std::size_t hi = std::min(lo + bs, n);
      const Batch batch = data.train.make_batch(
          std::span<const std::size_t>(perm.data() + lo, hi - lo));

      StepReport rep;
      try {
        if (it < gam_iters) {
          if (setup.kind == OptimizerKind::kSamGam) {
            const double rho_t = schedule_value(st.rho_schedule, st.rho0,
                                                st.t + 1, st.horizon);
            OracleLossSpec sam_spec = wd_spec;
            sam_spec.sam_rho = rho_t;
            OracleLoss sam_oracle(empirical, sam_spec);
            rep = gam_step(st, res.params, sam_oracle, empirical, batch);
          } else {
            rep = gam_step(st, res.params, base_loss, empirical, batch);
          }
        } else if (setup.kind == OptimizerKind::kSam ||
                   setup.kind == OptimizerKind::kSamGam) {
          rep = sam_step(st, res.params, base_loss, batch);
        } else {
          rep = sgd_step(st, res.params, base_loss, batch);
        }
      } catch (const DivergenceError& e) {
        res.diverged = true;
        res.message = e.what();
      } catch (const NumericError& e) {
        res.diverged = true;
        res.message = e.what();
      }
      if (res.diverged) return res;

      overall_sum += rep.overall_grad_norm_sq;
      ++steps_done;
      if (setup.step_observer) setup.step_observer(st.t, rep);
    }

    EpochRow row;
    row.epoch = epoch;
    row.step = st.t;
    row.mean_overall_grad_norm_sq =
        overall_sum / static_cast<double>(steps_done);
    try {
      row.train_loss = evaluate(empirical, res.params, full_train);
    } catch (const NumericError& e) {
      res.diverged = true;
      res.message = e.what();
      return res;
    }
    row.train_acc = accuracy_or_zero(accuracy_model, res.params, data.train);
    row.test_acc = accuracy_or_zero(accuracy_model, res.params, data.test);
    row.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    res.rows.push_back(row);
    if (setup.epoch_observer) setup.epoch_observer(epoch, res.params);
  }
  return res;
}

}  // namespace gam
