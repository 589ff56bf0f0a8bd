// Command-line surface: run, sweep, diagnose, census, slice.
// Exit codes: 0 success, 2 config error, 3 divergence, 4 I/O, 1 anything else.
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gam/config.hpp"
#include "gam/errors.hpp"
#include "gam/harness.hpp"
#include "gam/version.hpp"

namespace {

int dispatch(const std::function<int()>& body) {
  try {
    return body();
  } catch (const gam::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const gam::DivergenceError& e) {
    std::fprintf(stderr, "divergence: %s\n", e.what());
    return 3;
  } catch (const gam::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gradient-norm-aware optimization toolkit"};
  app.set_version_flag("--version", gam::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string checkpoint_path;
  std::vector<double> rhos;
  std::vector<double> alphas;
  int slice_dim = 1;

  CLI::App* cmd_run = app.add_subcommand("run", "train once and emit metrics");
  cmd_run->add_option("config", config_path, "config file")->required();

  CLI::App* cmd_sweep =
      app.add_subcommand("sweep", "grid over rho x alpha, one run per cell");
  cmd_sweep->add_option("config", config_path, "base config file")->required();
  cmd_sweep->add_option("--rho", rhos, "rho grid values")->required();
  cmd_sweep->add_option("--alpha", alphas, "alpha grid values")->required();

  CLI::App* cmd_diag = app.add_subcommand(
      "diagnose", "flatness report at a saved parameter point");
  cmd_diag->add_option("config", config_path, "config file")->required();
  cmd_diag->add_option("--checkpoint", checkpoint_path, "params .bin file")
      ->required();

  CLI::App* cmd_census = app.add_subcommand(
      "census", "directional minima/maxima census at the initial point");
  cmd_census->add_option("config", config_path, "config file")->required();

  CLI::App* cmd_slice = app.add_subcommand(
      "slice", "loss slice along seeded random directions");
  cmd_slice->add_option("config", config_path, "config file")->required();
  cmd_slice->add_option("--dim", slice_dim, "1 or 2")
      ->check(CLI::IsMember({1, 2}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (cmd_run->parsed()) {
    return dispatch([&] {
      gam::RunConfig cfg = gam::load_config(config_path);
      gam::TrainResult result = gam::run_experiment(cfg);
      if (result.diverged) {
        std::fprintf(stderr, "run diverged: %s\n", result.message.c_str());
        return 3;
      }
      std::printf("ok: %zu epochs -> %s\n", result.rows.size(),
                  cfg.output_dir.c_str());
      return 0;
    });
  }
  if (cmd_sweep->parsed()) {
    return dispatch([&] {
      gam::RunConfig cfg = gam::load_config(config_path);
      auto cells = gam::sweep_experiment(cfg, rhos, alphas);
      std::size_t ok = 0;
      for (const auto& c : cells) {
        if (c.status == "ok") ++ok;
      }
      std::printf("sweep: %zu/%zu cells ok -> %s/summary.csv\n", ok,
                  cells.size(), cfg.output_dir.c_str());
      return 0;
    });
  }
  if (cmd_diag->parsed()) {
    return dispatch([&] {
      gam::RunConfig cfg = gam::load_config(config_path);
      gam::FlatnessReport report =
          gam::diagnose_checkpoint(cfg, checkpoint_path);
      std::printf("%s\n", gam::flatness_to_json(report).dump(2).c_str());
      return 0;
    });
  }
  if (cmd_census->parsed()) {
    return dispatch([&] {
      gam::RunConfig cfg = gam::load_config(config_path);
      gam::CensusHistogram census = gam::census_experiment(cfg);
      for (const auto& [key, count] : census) {
        std::printf("minima=%d maxima=%d directions=%d\n", key.first,
                    key.second, count);
      }
      return 0;
    });
  }
  if (cmd_slice->parsed()) {
    return dispatch([&] {
      gam::RunConfig cfg = gam::load_config(config_path);
      gam::SliceResult s = gam::slice_experiment(cfg, slice_dim);
      std::printf("slice: %zu points -> %s\n", s.values.size(),
                  cfg.output_dir.c_str());
      return 0;
    });
  }
  return 1;
}
