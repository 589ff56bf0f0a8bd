#include "gam/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "gam/errors.hpp"

namespace gam {

namespace {

using nlohmann::json;

// Tracks which keys of one JSON object were consumed so leftovers can be
// reported with their full path.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw ConfigError("config: '" + path_ + "' must be an object");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <typename T>
  T require(const char* key) {
    if (!j_.contains(key)) {
      throw ConfigError("config: missing required key '" + full(key) + "'");
    }
    return get_as<T>(key);
  }

  template <typename T>
  T get(const char* key, T fallback) {
    if (!j_.contains(key)) return fallback;
    return get_as<T>(key);
  }

  const json& raw(const char* key) {
    if (!j_.contains(key)) {
      throw ConfigError("config: missing required key '" + full(key) + "'");
    }
    seen_.insert(key);
    return j_.at(key);
  }

  // Every key must have been consumed by now.
  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) {
        throw ConfigError("config: unknown key '" + full(key.c_str()) + "'");
      }
    }
  }

  std::string full(const char* key) const {
    return path_.empty() ? std::string(key) : path_ + "." + key;
  }

 private:
  template <typename T>
  T get_as(const char* key) {
    seen_.insert(key);
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config: key '" + full(key) +
                        "' has the wrong type: " + e.what());
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

[[noreturn]] void bad_value(const std::string& path, const std::string& what) {
  throw ConfigError("config: key '" + path + "' " + what);
}

void require_positive(double v, const std::string& path) {
  if (!(v > 0.0)) bad_value(path, "must be > 0");
}

void require_nonnegative(double v, const std::string& path) {
  if (v < 0.0) bad_value(path, "must be >= 0");
}

void require_file(const std::string& p, const std::string& path) {
  if (!std::filesystem::exists(p)) {
    bad_value(path, "references a path that does not exist: " + p);
  }
}

DatasetKind parse_dataset_kind(const std::string& s, const std::string& path) {
  if (s == "two_moons") return DatasetKind::kTwoMoons;
  if (s == "gaussian_blobs") return DatasetKind::kGaussianBlobs;
  if (s == "csv") return DatasetKind::kCsv;
  if (s == "idx") return DatasetKind::kIdx;
  if (s == "quadratic") return DatasetKind::kQuadratic;
  bad_value(path, "must be one of two_moons, gaussian_blobs, csv, idx, "
                  "quadratic; got '" + s + "'");
}

const char* dataset_kind_name(DatasetKind k) {
  switch (k) {
    case DatasetKind::kTwoMoons: return "two_moons";
    case DatasetKind::kGaussianBlobs: return "gaussian_blobs";
    case DatasetKind::kCsv: return "csv";
    case DatasetKind::kIdx: return "idx";
    case DatasetKind::kQuadratic: return "quadratic";
  }
  return "?";
}

OptimizerKind parse_optimizer_kind(const std::string& s,
                                   const std::string& path) {
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "sam") return OptimizerKind::kSam;
  if (s == "gam") return OptimizerKind::kGam;
  if (s == "sam+gam") return OptimizerKind::kSamGam;
  bad_value(path, "must be one of sgd, sam, gam, sam+gam; got '" + s + "'");
}

const char* optimizer_kind_name(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kSam: return "sam";
    case OptimizerKind::kGam: return "gam";
    case OptimizerKind::kSamGam: return "sam+gam";
  }
  return "?";
}

ScheduleKind parse_schedule(const std::string& s, const std::string& path) {
  if (s == "constant") return ScheduleKind::kConstant;
  if (s == "inv_sqrt") return ScheduleKind::kInvSqrt;
  if (s == "cosine") return ScheduleKind::kCosine;
  bad_value(path, "must be one of constant, inv_sqrt, cosine; got '" + s + "'");
}

const char* schedule_name(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::kConstant: return "constant";
    case ScheduleKind::kInvSqrt: return "inv_sqrt";
    case ScheduleKind::kCosine: return "cosine";
  }
  return "?";
}

DatasetConfig parse_dataset(const json& j) {
  Fields f(j, "dataset");
  DatasetConfig d;
  d.kind = parse_dataset_kind(f.require<std::string>("kind"), f.full("kind"));
  switch (d.kind) {
    case DatasetKind::kTwoMoons:
      d.n = f.require<std::size_t>("n");
      d.noise = f.get<double>("noise", 0.1);
      if (d.n < 2) bad_value(f.full("n"), "must be at least 2");
      require_nonnegative(d.noise, f.full("noise"));
      break;
    case DatasetKind::kGaussianBlobs:
      d.n = f.require<std::size_t>("n");
      d.k = f.require<int>("k");
      d.dim = f.require<int>("dim");
      d.spread = f.get<double>("spread", 1.0);
      if (d.k < 2) bad_value(f.full("k"), "must be >= 2");
      if (d.dim < 1) bad_value(f.full("dim"), "must be >= 1");
      if (d.n < static_cast<std::size_t>(d.k)) {
        bad_value(f.full("n"), "must be >= k");
      }
      require_positive(d.spread, f.full("spread"));
      break;
    case DatasetKind::kCsv:
      d.path = f.require<std::string>("path");
      d.label_col = f.require<int>("label_col");
      require_file(d.path, f.full("path"));
      if (d.label_col < 0) bad_value(f.full("label_col"), "must be >= 0");
      break;
    case DatasetKind::kIdx:
      d.images_path = f.require<std::string>("images_path");
      d.labels_path = f.require<std::string>("labels_path");
      d.subset_n = f.get<std::size_t>("subset_n", 0);
      require_file(d.images_path, f.full("images_path"));
      require_file(d.labels_path, f.full("labels_path"));
      break;
    case DatasetKind::kQuadratic:
      if (f.has("diag")) {
        d.diag = f.get<std::vector<double>>("diag", {});
        if (d.diag.empty()) bad_value(f.full("diag"), "must be nonempty");
        d.quad_dim = static_cast<int>(d.diag.size());
      } else {
        d.quad_dim = f.require<int>("dim");
        if (d.quad_dim < 1) bad_value(f.full("dim"), "must be >= 1");
        d.diag.assign(static_cast<std::size_t>(d.quad_dim), 1.0);
      }
      break;
  }
  f.finish();
  return d;
}

ModelConfig parse_model(const json& j, const DatasetConfig& ds) {
  Fields f(j, "model");
  ModelConfig m;
  const std::string kind = f.require<std::string>("kind");
  if (kind == "mlp") {
    m.kind = ModelKind::kMlp;
  } else if (kind == "quadratic") {
    m.kind = ModelKind::kQuadratic;
  } else {
    bad_value(f.full("kind"), "must be one of mlp, quadratic; got '" + kind +
                                  "'");
  }
  if (m.kind == ModelKind::kQuadratic) {
    if (ds.kind != DatasetKind::kQuadratic) {
      bad_value(f.full("kind"),
                "quadratic model requires dataset.kind = quadratic");
    }
    f.finish();
    return m;
  }
  if (ds.kind == DatasetKind::kQuadratic) {
    bad_value(f.full("kind"), "mlp model cannot train on a quadratic dataset");
  }
  m.layer_widths = f.require<std::vector<int>>("layer_widths");
  if (m.layer_widths.size() < 2) {
    bad_value(f.full("layer_widths"), "needs input and output widths");
  }
  for (int w : m.layer_widths) {
    if (w < 1) bad_value(f.full("layer_widths"), "widths must be >= 1");
  }
  const std::string act = f.get<std::string>("activation", "tanh");
  if (act == "tanh") {
    m.activation = Activation::kTanh;
  } else if (act == "relu") {
    m.activation = Activation::kRelu;
  } else {
    bad_value(f.full("activation"), "must be tanh or relu; got '" + act + "'");
  }
  const std::string task = f.get<std::string>("task", "cross_entropy");
  if (task == "cross_entropy") {
    m.task = Task::kSoftmaxCrossEntropy;
  } else if (task == "mse") {
    m.task = Task::kMse;
  } else {
    bad_value(f.full("task"), "must be cross_entropy or mse; got '" + task +
                                  "'");
  }
  m.init_seed = f.get<std::uint64_t>("init_seed", 1);
  m.init_scale = f.get<double>("init_scale", 1.0);
  require_positive(m.init_scale, f.full("init_scale"));
  // feature widths are known up front for the generators
  if (ds.kind == DatasetKind::kTwoMoons && m.layer_widths.front() != 2) {
    bad_value(f.full("layer_widths"), "two_moons inputs have width 2");
  }
  if (ds.kind == DatasetKind::kGaussianBlobs &&
      m.layer_widths.front() != ds.dim) {
    bad_value(f.full("layer_widths"),
              "input width must equal dataset.dim = " + std::to_string(ds.dim));
  }
  f.finish();
  return m;
}

OptimizerConfig parse_optimizer(const json& j) {
  Fields f(j, "optimizer");
  OptimizerConfig o;
  o.kind = parse_optimizer_kind(f.require<std::string>("kind"), f.full("kind"));
  o.eta0 = f.get<double>("eta0", 0.1);
  o.rho0 = f.get<double>("rho0", 0.1);
  o.alpha = f.get<double>("alpha", 0.1);
  o.xi = f.get<double>("xi", 1e-12);
  o.momentum = f.get<double>("momentum", 0.9);
  o.weight_decay = f.get<double>("weight_decay", 0.0);
  o.gam_apply_ratio = f.get<double>("gam_apply_ratio", 1.0);
  o.lr_schedule =
      parse_schedule(f.get<std::string>("lr_schedule", "cosine"),
                     f.full("lr_schedule"));
  o.rho_schedule =
      parse_schedule(f.get<std::string>("rho_schedule", "constant"),
                     f.full("rho_schedule"));
  require_positive(o.eta0, f.full("eta0"));
  require_nonnegative(o.rho0, f.full("rho0"));
  require_nonnegative(o.alpha, f.full("alpha"));
  require_nonnegative(o.xi, f.full("xi"));
  require_nonnegative(o.momentum, f.full("momentum"));
  if (o.momentum >= 1.0) bad_value(f.full("momentum"), "must be < 1");
  require_nonnegative(o.weight_decay, f.full("weight_decay"));
  if (o.gam_apply_ratio < 0.0 || o.gam_apply_ratio > 1.0) {
    bad_value(f.full("gam_apply_ratio"), "must be in [0, 1]");
  }
  f.finish();
  return o;
}

DiagnosticsConfig parse_diagnostics(const json& j, int epochs) {
  Fields f(j, "diagnostics");
  DiagnosticsConfig d;
  d.rho = f.get<double>("rho", 0.1);
  d.num_directions = f.get<int>("num_directions", 100);
  d.step_norm = f.get<double>("step_norm", 0.01);
  d.num_steps = f.get<int>("num_steps", 10);
  d.ascent_steps = f.get<int>("ascent_steps", 20);
  d.ascent_lr = f.get<double>("ascent_lr", 0.0);
  d.probe_seed = f.get<std::uint64_t>("probe_seed", 1);
  d.top_k = f.get<int>("top_k", 5);
  d.power_iters = f.get<int>("power_iters", 200);
  d.power_tol = f.get<double>("power_tol", 1e-9);
  d.hutchinson_probes = f.get<int>("hutchinson_probes", 32);
  d.spectrum_epochs = f.get<std::vector<int>>("spectrum_epochs", {});
  d.slice_dims = f.get<std::vector<int>>("slice_dims", {});
  d.slice_half_width = f.get<double>("slice_half_width", 1.0);
  d.slice_points = f.get<int>("slice_points", 41);

  require_positive(d.rho, f.full("rho"));
  if (d.num_directions < 1) bad_value(f.full("num_directions"), "must be >= 1");
  require_positive(d.step_norm, f.full("step_norm"));
  if (d.num_steps < 1) bad_value(f.full("num_steps"), "must be >= 1");
  if (d.ascent_steps < 0) bad_value(f.full("ascent_steps"), "must be >= 0");
  require_nonnegative(d.ascent_lr, f.full("ascent_lr"));
  if (d.top_k < 1) bad_value(f.full("top_k"), "must be >= 1");
  if (d.power_iters < 1) bad_value(f.full("power_iters"), "must be >= 1");
  require_positive(d.power_tol, f.full("power_tol"));
  if (d.hutchinson_probes < 2) {
    bad_value(f.full("hutchinson_probes"), "must be >= 2");
  }
  for (int e : d.spectrum_epochs) {
    if (e < 1 || e > epochs) {
      bad_value(f.full("spectrum_epochs"),
                "entries must lie in [1, epochs]; got " + std::to_string(e));
    }
  }
  std::vector<int> sorted_epochs = d.spectrum_epochs;
  std::sort(sorted_epochs.begin(), sorted_epochs.end());
  if (std::adjacent_find(sorted_epochs.begin(), sorted_epochs.end()) !=
      sorted_epochs.end()) {
    bad_value(f.full("spectrum_epochs"), "entries must be distinct");
  }
  for (int dim : d.slice_dims) {
    if (dim != 1 && dim != 2) {
      bad_value(f.full("slice_dims"), "entries must be 1 or 2");
    }
  }
  require_positive(d.slice_half_width, f.full("slice_half_width"));
  if (d.slice_points < 3 || d.slice_points % 2 == 0) {
    bad_value(f.full("slice_points"), "must be odd and >= 3");
  }
  f.finish();
  return d;
}

}  // namespace

RunConfig parse_config(const json& j) {
  Fields f(j, "");
  RunConfig cfg;
  cfg.dataset = parse_dataset(f.raw("dataset"));
  cfg.model = parse_model(f.raw("model"), cfg.dataset);
  cfg.optimizer = parse_optimizer(f.raw("optimizer"));
  cfg.epochs = f.get<int>("epochs", 1);
  if (cfg.epochs < 1) bad_value("epochs", "must be >= 1");
  cfg.batch_size = f.get<std::size_t>("batch_size", 0);
  cfg.seed = f.get<std::uint64_t>("seed", 1);
  cfg.output_dir = f.get<std::string>("output_dir", "out");
  if (cfg.output_dir.empty()) bad_value("output_dir", "must be nonempty");
  if (f.has("diagnostics")) {
    cfg.diagnostics = parse_diagnostics(f.raw("diagnostics"), cfg.epochs);
  }
  f.finish();

  // n is declared in the config for every non-file dataset, so the batch
  // size resolves (and is checked) right here. File-backed datasets do the
  // same against the row count once loaded.
  std::size_t n = 0;
  switch (cfg.dataset.kind) {
    case DatasetKind::kTwoMoons:
    case DatasetKind::kGaussianBlobs:
      n = cfg.dataset.n;
      break;
    case DatasetKind::kQuadratic:
      n = 1;
      break;
    case DatasetKind::kCsv:
    case DatasetKind::kIdx:
      n = 0;
      break;
  }
  if (n > 0) {
    if (cfg.batch_size == 0) cfg.batch_size = std::min<std::size_t>(128, n);
    if (cfg.batch_size > n) {
      throw ConfigError("config: key 'batch_size' (" +
                        std::to_string(cfg.batch_size) +
                        ") exceeds the dataset size " + std::to_string(n));
    }
  }

  // quadratic runs carry no labels, so classification widths do not apply
  if (cfg.model.kind == ModelKind::kMlp &&
      cfg.model.task == Task::kSoftmaxCrossEntropy) {
    int classes = 0;
    if (cfg.dataset.kind == DatasetKind::kTwoMoons) classes = 2;
    if (cfg.dataset.kind == DatasetKind::kGaussianBlobs) classes = cfg.dataset.k;
    if (classes > 0 && cfg.model.layer_widths.back() != classes) {
      throw ConfigError(
          "config: key 'model.layer_widths' output width must equal the "
          "number of classes (" + std::to_string(classes) + ")");
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: parse error in " + path.string() + ": " +
                      e.what());
  }
  return parse_config(j);
}

nlohmann::json config_to_json(const RunConfig& cfg) {
  json ds;
  ds["kind"] = dataset_kind_name(cfg.dataset.kind);
  switch (cfg.dataset.kind) {
    case DatasetKind::kTwoMoons:
      ds["n"] = cfg.dataset.n;
      ds["noise"] = cfg.dataset.noise;
      break;
    case DatasetKind::kGaussianBlobs:
      ds["n"] = cfg.dataset.n;
      ds["k"] = cfg.dataset.k;
      ds["dim"] = cfg.dataset.dim;
      ds["spread"] = cfg.dataset.spread;
      break;
    case DatasetKind::kCsv:
      ds["path"] = cfg.dataset.path;
      ds["label_col"] = cfg.dataset.label_col;
      break;
    case DatasetKind::kIdx:
      ds["images_path"] = cfg.dataset.images_path;
      ds["labels_path"] = cfg.dataset.labels_path;
      ds["subset_n"] = cfg.dataset.subset_n;
      break;
    case DatasetKind::kQuadratic:
      ds["diag"] = cfg.dataset.diag;
      break;
  }

  json model;
  if (cfg.model.kind == ModelKind::kQuadratic) {
    model["kind"] = "quadratic";
  } else {
    model["kind"] = "mlp";
    model["layer_widths"] = cfg.model.layer_widths;
    model["activation"] =
        cfg.model.activation == Activation::kTanh ? "tanh" : "relu";
    model["task"] = cfg.model.task == Task::kSoftmaxCrossEntropy
                        ? "cross_entropy"
                        : "mse";
    model["init_seed"] = cfg.model.init_seed;
    model["init_scale"] = cfg.model.init_scale;
  }

  json opt;
  opt["kind"] = optimizer_kind_name(cfg.optimizer.kind);
  opt["eta0"] = cfg.optimizer.eta0;
  opt["rho0"] = cfg.optimizer.rho0;
  opt["alpha"] = cfg.optimizer.alpha;
  opt["xi"] = cfg.optimizer.xi;
  opt["momentum"] = cfg.optimizer.momentum;
  opt["weight_decay"] = cfg.optimizer.weight_decay;
  opt["gam_apply_ratio"] = cfg.optimizer.gam_apply_ratio;
  opt["lr_schedule"] = schedule_name(cfg.optimizer.lr_schedule);
  opt["rho_schedule"] = schedule_name(cfg.optimizer.rho_schedule);

  json diag;
  diag["rho"] = cfg.diagnostics.rho;
  diag["num_directions"] = cfg.diagnostics.num_directions;
  diag["step_norm"] = cfg.diagnostics.step_norm;
  diag["num_steps"] = cfg.diagnostics.num_steps;
  diag["ascent_steps"] = cfg.diagnostics.ascent_steps;
  diag["ascent_lr"] = cfg.diagnostics.ascent_lr;
  diag["probe_seed"] = cfg.diagnostics.probe_seed;
  diag["top_k"] = cfg.diagnostics.top_k;
  diag["power_iters"] = cfg.diagnostics.power_iters;
  diag["power_tol"] = cfg.diagnostics.power_tol;
  diag["hutchinson_probes"] = cfg.diagnostics.hutchinson_probes;
  diag["spectrum_epochs"] = cfg.diagnostics.spectrum_epochs;
  diag["slice_dims"] = cfg.diagnostics.slice_dims;
  diag["slice_half_width"] = cfg.diagnostics.slice_half_width;
  diag["slice_points"] = cfg.diagnostics.slice_points;

  json out;
  out["dataset"] = ds;
  out["model"] = model;
  out["optimizer"] = opt;
  out["epochs"] = cfg.epochs;
  out["batch_size"] = cfg.batch_size;
  out["seed"] = cfg.seed;
  out["diagnostics"] = diag;
  out["output_dir"] = cfg.output_dir;
  return out;
}

std::string canonical_config(const RunConfig& cfg) {
  // nlohmann objects iterate in key order, so dump() is already canonical
  return config_to_json(cfg).dump(2) + "\n";
}

ProbeConfig probe_from_diagnostics(const DiagnosticsConfig& d) {
  ProbeConfig p;
  p.num_directions = d.num_directions;
  p.step_norm = d.step_norm;
  p.num_steps = d.num_steps;
  p.seed = d.probe_seed;
  p.ascent_steps = d.ascent_steps;
  p.ascent_lr = d.ascent_lr;
  return p;
}

}  // namespace gam
