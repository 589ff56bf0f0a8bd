#include "gam/harness.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

#include "gam/errors.hpp"
#include "gam/rng.hpp"
#include "gam/version.hpp"

namespace gam {

namespace {

constexpr std::uint64_t kSliceDirStream = 0x5153;
constexpr std::uint64_t kSweepLambdaStream = 0x9a;

std::uint64_t bswap64(std::uint64_t v) {
  return ((v & 0x00000000000000ffULL) << 56) |
         ((v & 0x000000000000ff00ULL) << 40) |
         ((v & 0x0000000000ff0000ULL) << 24) |
         ((v & 0x00000000ff000000ULL) << 8) |
         ((v & 0x000000ff00000000ULL) >> 8) |
         ((v & 0x0000ff0000000000ULL) >> 24) |
         ((v & 0x00ff000000000000ULL) >> 40) |
         ((v & 0xff00000000000000ULL) >> 56);
}

// Shortest round-trip decimal form; identical runs give identical bytes.
std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << content;
  if (!out.good()) throw IoError("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

MlpSpec mlp_spec_from(const ModelConfig& m) {
  MlpSpec spec;
  spec.layer_widths = m.layer_widths;
  spec.activation = m.activation;
  spec.init_seed = m.init_seed;
  spec.init_scale = m.init_scale;
  return spec;
}

TrainTestData load_data(const RunConfig& cfg) {
  const DatasetConfig& d = cfg.dataset;
  switch (d.kind) {
    case DatasetKind::kTwoMoons:
      return make_two_moons(d.n, d.noise, cfg.seed);
    case DatasetKind::kGaussianBlobs:
      return make_gaussian_blobs(d.n, d.k, d.dim, d.spread, cfg.seed);
    case DatasetKind::kCsv:
      return load_csv(d.path, d.label_col, cfg.seed);
    case DatasetKind::kIdx:
      return load_idx(d.images_path, d.labels_path, d.subset_n, cfg.seed);
    case DatasetKind::kQuadratic:
      return make_quadratic_dataset();
  }
  throw std::logic_error("load_data: unknown dataset kind");
}

}  // namespace

const DifferentiableLoss& Materialized::loss() const {
  if (mlp) return *mlp;
  return *quadratic;
}

Materialized materialize(const RunConfig& cfg) {
  Materialized m;
  m.data = load_data(cfg);
  const std::size_t n = m.data.train.n();

  m.batch_size = cfg.batch_size == 0 ? std::min<std::size_t>(128, n)
                                     : cfg.batch_size;
  if (m.batch_size > n) {
    throw ConfigError("config: key 'batch_size' (" +
                      std::to_string(m.batch_size) +
                      ") exceeds the dataset size " + std::to_string(n));
  }

  if (cfg.model.kind == ModelKind::kQuadratic) {
    m.quadratic = std::make_unique<QuadraticLoss>(
        QuadraticSpec{cfg.dataset.diag, {}});
    m.init = ParamVector(std::vector<double>(cfg.dataset.diag.size(), 1.0));
    return m;
  }

  const std::vector<int>& widths = cfg.model.layer_widths;
  if (static_cast<std::size_t>(widths.front()) != m.data.train.X.cols) {
    throw ConfigError(
        "config: key 'model.layer_widths' input width must equal the "
        "feature count " + std::to_string(m.data.train.X.cols));
  }
  if (cfg.model.task == Task::kSoftmaxCrossEntropy) {
    const int classes = m.data.train.num_classes();
    if (widths.back() != classes) {
      throw ConfigError(
          "config: key 'model.layer_widths' output width must equal the "
          "number of classes (" + std::to_string(classes) + ")");
    }
  } else if (m.data.train.Y.rows == 0) {
    // regression targets from class labels
    const int classes = m.data.train.num_classes();
    if (widths.back() != classes) {
      throw ConfigError(
          "config: key 'model.layer_widths' output width must equal the "
          "one-hot width (" + std::to_string(classes) + ")");
    }
    m.data.train.Y = one_hot(m.data.train.y, classes);
    if (!m.data.test.y.empty()) {
      m.data.test.Y = one_hot(m.data.test.y, classes);
    }
  }

  MlpSpec spec = mlp_spec_from(cfg.model);
  m.mlp = std::make_unique<MlpLoss>(spec, cfg.model.task);
  m.init = init_params(spec);
  return m;
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<EpochRow>& rows) {
  std::string out =
      "epoch,step,train_loss,train_acc,test_acc,mean_overall_grad_norm_sq,"
      "wall_ms\n";
  for (const EpochRow& r : rows) {
    out += std::to_string(r.epoch);
    out += ',';
    out += std::to_string(r.step);
    out += ',';
    out += fmt_double(r.train_loss);
    out += ',';
    out += fmt_double(r.train_acc);
    out += ',';
    out += fmt_double(r.test_acc);
    out += ',';
    out += fmt_double(r.mean_overall_grad_norm_sq);
    out += ',';
    out += fmt_double(r.wall_ms);
    out += '\n';
  }
  write_text_file(path, out);
}

bool metrics_equal_ignoring_wall_ms(const std::filesystem::path& a,
                                    const std::filesystem::path& b) {
  auto split_lines = [](const std::string& s) {
    std::vector<std::string> lines;
    std::istringstream in(s);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
  };
  const auto la = split_lines(read_text_file(a));
  const auto lb = split_lines(read_text_file(b));
  if (la.size() != lb.size() || la.empty()) return la == lb;
  if (la[0] != lb[0]) return false;
  for (std::size_t i = 1; i < la.size(); ++i) {
    const auto ca = la[i].rfind(',');
    const auto cb = lb[i].rfind(',');
    if (ca == std::string::npos || cb == std::string::npos) return false;
    if (la[i].compare(0, ca, lb[i], 0, cb) != 0) return false;
  }
  return true;
}

nlohmann::json flatness_to_json(const FlatnessReport& report) {
  nlohmann::json j;
  j["rho"] = report.rho;
  j["r0_hat"] = report.r0_hat;
  j["r1_hat"] = report.r1_hat;
  j["lambda_topk"] = report.lambda_topk;
  j["lambda_converged"] = report.lambda_converged;
  j["trace_hat"] = report.trace_hat;
  j["trace_stderr"] = report.trace_stderr;
  nlohmann::json census = nlohmann::json::array();
  for (const auto& [key, count] : report.census) {
    census.push_back({{"minima", key.first},
                      {"maxima", key.second},
                      {"directions", count}});
  }
  j["census"] = census;
  return j;
}

void save_checkpoint(const std::filesystem::path& bin_path,
                     const ParamVector& params) {
  std::string bytes;
  bytes.reserve(params.dim() * 8);
  for (std::size_t i = 0; i < params.dim(); ++i) {
    auto u = std::bit_cast<std::uint64_t>(params[i]);
    if constexpr (std::endian::native == std::endian::big) {
      u = bswap64(u);
    }
    char chunk[8];
    std::memcpy(chunk, &u, 8);
    bytes.append(chunk, 8);
  }
  write_text_file(bin_path, bytes);

  nlohmann::json side;
  side["dim"] = params.dim();
  nlohmann::json segs = nlohmann::json::array();
  if (params.layout()) {
    for (const Segment& s : params.layout()->segments()) {
      segs.push_back({{"name", s.name},
                      {"offset", s.offset},
                      {"size", s.size},
                      {"is_bias", s.is_bias}});
    }
  }
  side["segments"] = segs;
  std::filesystem::path side_path = bin_path;
  side_path.replace_extension(".json");
  write_text_file(side_path, side.dump(2) + "\n");
}

ParamVector load_checkpoint(const std::filesystem::path& bin_path) {
  std::filesystem::path side_path = bin_path;
  side_path.replace_extension(".json");
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(read_text_file(side_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("checkpoint sidecar is not valid JSON: " +
                  side_path.string() + ": " + e.what());
  }
  const auto dim = side.at("dim").get<std::size_t>();
  const std::string bytes = read_text_file(bin_path);
  if (bytes.size() != dim * 8) {
    throw IoError("checkpoint " + bin_path.string() + " holds " +
                  std::to_string(bytes.size()) + " bytes, expected " +
                  std::to_string(dim * 8));
  }
  std::vector<double> values(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    std::uint64_t u;
    std::memcpy(&u, bytes.data() + i * 8, 8);
    if constexpr (std::endian::native == std::endian::big) {
      u = bswap64(u);
    }
    values[i] = std::bit_cast<double>(u);
  }
  std::shared_ptr<const SegmentLayout> layout;
  if (!side.at("segments").empty()) {
    std::vector<Segment> segs;
    for (const auto& s : side.at("segments")) {
      segs.push_back({s.at("name").get<std::string>(),
                      s.at("offset").get<std::size_t>(),
                      s.at("size").get<std::size_t>(),
                      s.at("is_bias").get<bool>()});
    }
    layout = std::make_shared<SegmentLayout>(std::move(segs));
  }
  return ParamVector(std::move(values), layout);
}

namespace {

void write_slice_csv(const std::filesystem::path& path, const SliceResult& s) {
  std::string out;
  if (!s.two_dim) {
    out = "offset,value\n";
    for (std::size_t i = 0; i < s.offsets.size(); ++i) {
      out += fmt_double(s.offsets[i]);
      out += ',';
      out += fmt_double(s.values[i]);
      out += '\n';
    }
  } else {
    out = "offset_1,offset_2,value\n";
    const std::size_t g = s.offsets.size();
    for (std::size_t iy = 0; iy < g; ++iy) {
      for (std::size_t ix = 0; ix < g; ++ix) {
        out += fmt_double(s.offsets[iy]);
        out += ',';
        out += fmt_double(s.offsets[ix]);
        out += ',';
        out += fmt_double(s.values[iy * g + ix]);
        out += '\n';
      }
    }
  }
  write_text_file(path, out);
}

SliceResult make_slice(const Materialized& mat, const RunConfig& cfg,
                       const ParamVector& at, int dim) {
  Rng rng(derive_seed(cfg.seed, kSliceDirStream));
  ParamVector dir1(rng.normal_vector(at.dim()));
  if (dim == 1) {
    return landscape_slice(mat.loss(), at, mat.data.train.full_batch(), dir1,
                           nullptr, cfg.diagnostics.slice_half_width,
                           cfg.diagnostics.slice_points);
  }
  ParamVector dir2(rng.normal_vector(at.dim()));
  return landscape_slice(mat.loss(), at, mat.data.train.full_batch(), dir1,
                         &dir2, cfg.diagnostics.slice_half_width,
                         cfg.diagnostics.slice_points);
}

void write_manifest(const std::filesystem::path& dir, const RunConfig& cfg,
                    const std::string& status, const std::string& message) {
  nlohmann::json j;
  j["config"] = config_to_json(cfg);
  j["version"] = kVersion;
  j["status"] = status;
  j["message"] = message;
  write_text_file(dir / "manifest.json", j.dump(2) + "\n");
}

TrainResult run_experiment_on(const RunConfig& cfg_in, Materialized& mat) {
  RunConfig cfg = cfg_in;
  cfg.batch_size = mat.batch_size;  // manifest shows the resolved value

  const std::filesystem::path dir(cfg.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + dir.string() + ": " +
                  ec.message());
  }

  const Batch full_train = mat.data.train.full_batch();
  const std::set<int> spectrum(cfg.diagnostics.spectrum_epochs.begin(),
                               cfg.diagnostics.spectrum_epochs.end());

  TrainSetup setup;
  setup.kind = cfg.optimizer.kind;
  setup.state.momentum = ParamVector(mat.init.dim());
  setup.state.eta0 = cfg.optimizer.eta0;
  setup.state.rho0 = cfg.optimizer.rho0;
  setup.state.alpha = cfg.optimizer.alpha;
  setup.state.xi = cfg.optimizer.xi;
  setup.state.momentum_coef = cfg.optimizer.momentum;
  setup.state.lr_schedule = cfg.optimizer.lr_schedule;
  setup.state.rho_schedule = cfg.optimizer.rho_schedule;
  setup.weight_decay = cfg.optimizer.weight_decay;
  setup.gam_apply_ratio = cfg.optimizer.gam_apply_ratio;
  setup.epochs = cfg.epochs;
  setup.batch_size = mat.batch_size;
  setup.seed = cfg.seed;
  setup.epoch_observer = [&](int epoch, const ParamVector& params) {
    if (!spectrum.contains(epoch)) return;
    FlatnessOptions opts;
    opts.rho = cfg.diagnostics.rho;
    opts.probe = probe_from_diagnostics(cfg.diagnostics);
    opts.top_k = cfg.diagnostics.top_k;
    opts.power_iters = cfg.diagnostics.power_iters;
    opts.power_tol = cfg.diagnostics.power_tol;
    opts.hutchinson_probes = cfg.diagnostics.hutchinson_probes;
    FlatnessReport report =
        measure_flatness(mat.loss(), params, full_train, opts);
    write_text_file(dir / ("flatness_" + std::to_string(epoch) + ".json"),
                    flatness_to_json(report).dump(2) + "\n");
  };

  TrainResult result =
      train_run(mat.loss(), mat.mlp.get(), mat.data, mat.init, setup);

  write_metrics_csv(dir / "metrics.csv", result.rows);
  save_checkpoint(dir / "params.bin", result.params);
  for (int sdim : cfg.diagnostics.slice_dims) {
    SliceResult s = make_slice(mat, cfg, result.params, sdim);
    write_slice_csv(dir / ("slice_" + std::to_string(sdim) + "d.csv"), s);
  }
  write_manifest(dir, cfg, result.diverged ? "diverged" : "ok",
                 result.message);
  return result;
}

}  // namespace

TrainResult run_experiment(const RunConfig& cfg) {
  Materialized mat = materialize(cfg);
  return run_experiment_on(cfg, mat);
}

std::vector<SweepCell> sweep_experiment(const RunConfig& base,
                                        const std::vector<double>& rhos,
                                        const std::vector<double>& alphas) {
  if (rhos.empty() || alphas.empty()) {
    throw ConfigError("sweep: both grids must be nonempty");
  }
  const std::filesystem::path base_dir(base.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(base_dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + base_dir.string() +
                  ": " + ec.message());
  }

  const std::size_t cells = rhos.size() * alphas.size();
  std::vector<SweepCell> out(cells);

  auto run_cell = [&](std::size_t index) {
    const double rho = rhos[index / alphas.size()];
    const double alpha = alphas[index % alphas.size()];
    SweepCell cell;
    cell.rho = rho;
    cell.alpha = alpha;

    RunConfig cfg = base;
    cfg.optimizer.rho0 = rho;
    cfg.optimizer.alpha = alpha;
    cfg.seed = derive_seed(base.seed, index);
    cfg.output_dir = (base_dir / ("cell" + std::to_string(index) + "_rho" +
                                  fmt_double(rho) + "_alpha" +
                                  fmt_double(alpha)))
                         .string();
    try {
      Materialized mat = materialize(cfg);
      TrainResult result = run_experiment_on(cfg, mat);
      cell.status = result.diverged ? "diverged" : "ok";
      if (!result.rows.empty()) {
        cell.final_test_acc = result.rows.back().test_acc;
        for (const EpochRow& r : result.rows) {
          cell.best_test_acc = std::max(cell.best_test_acc, r.test_acc);
        }
      }
      PowerIterationResult top = power_iteration_topk(
          mat.loss(), result.params, mat.data.train.full_batch(), 1,
          cfg.diagnostics.power_iters, cfg.diagnostics.power_tol,
          derive_seed(cfg.seed, kSweepLambdaStream));
      cell.final_lambda_max = top.values.at(0);
    } catch (const std::exception&) {
      cell.status = "error";
    }
    return cell;
  };

  // bounded fan-out, deterministic ordered reduction
  const std::size_t max_inflight = 8;
  for (std::size_t begin = 0; begin < cells; begin += max_inflight) {
    const std::size_t end = std::min(cells, begin + max_inflight);
    std::vector<std::future<SweepCell>> batch;
    batch.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      batch.push_back(std::async(std::launch::async, run_cell, i));
    }
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = batch[i - begin].get();
    }
  }

  std::string summary =
      "rho,alpha,status,final_test_acc,best_test_acc,final_lambda_max\n";
  for (const SweepCell& c : out) {
    summary += fmt_double(c.rho);
    summary += ',';
    summary += fmt_double(c.alpha);
    summary += ',';
    summary += c.status;
    summary += ',';
    summary += fmt_double(c.final_test_acc);
    summary += ',';
    summary += fmt_double(c.best_test_acc);
    summary += ',';
    summary += fmt_double(c.final_lambda_max);
    summary += '\n';
  }
  write_text_file(base_dir / "summary.csv", summary);
  return out;
}

FlatnessReport diagnose_checkpoint(const RunConfig& cfg,
                                   const std::filesystem::path& checkpoint) {
  Materialized mat = materialize(cfg);
  ParamVector params = load_checkpoint(checkpoint);
  if (params.dim() != mat.loss().dimension()) {
    throw ConfigError("checkpoint dimension " + std::to_string(params.dim()) +
                      " does not match the model dimension " +
                      std::to_string(mat.loss().dimension()));
  }
  FlatnessOptions opts;
  opts.rho = cfg.diagnostics.rho;
  opts.probe = probe_from_diagnostics(cfg.diagnostics);
  opts.top_k = cfg.diagnostics.top_k;
  opts.power_iters = cfg.diagnostics.power_iters;
  opts.power_tol = cfg.diagnostics.power_tol;
  opts.hutchinson_probes = cfg.diagnostics.hutchinson_probes;
  FlatnessReport report = measure_flatness(
      mat.loss(), params, mat.data.train.full_batch(), opts);

  const std::filesystem::path dir(cfg.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + dir.string() + ": " +
                  ec.message());
  }
  write_text_file(dir / "flatness_checkpoint.json",
                  flatness_to_json(report).dump(2) + "\n");
  return report;
}

CensusHistogram census_experiment(const RunConfig& cfg) {
  Materialized mat = materialize(cfg);
  CensusHistogram census =
      minima_census(mat.loss(), mat.init, mat.data.train.full_batch(),
                    probe_from_diagnostics(cfg.diagnostics));
  const std::filesystem::path dir(cfg.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + dir.string() + ": " +
                  ec.message());
  }
  std::string out = "minima,maxima,directions\n";
  for (const auto& [key, count] : census) {
    out += std::to_string(key.first);
    out += ',';
    out += std::to_string(key.second);
    out += ',';
    out += std::to_string(count);
    out += '\n';
  }
  write_text_file(dir / "census.csv", out);
  return census;
}

SliceResult slice_experiment(const RunConfig& cfg, int dim) {
  if (dim != 1 && dim != 2) {
    throw ConfigError("slice: dim must be 1 or 2");
  }
  Materialized mat = materialize(cfg);
  SliceResult s = make_slice(mat, cfg, mat.init, dim);
  const std::filesystem::path dir(cfg.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + dir.string() + ": " +
                  ec.message());
  }
  write_slice_csv(dir / ("slice_" + std::to_string(dim) + "d.csv"), s);
  return s;
}

}  // namespace gam
