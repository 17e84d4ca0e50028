#include "exsplinet/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "exsplinet/bspline.hpp"
#include "exsplinet/error.hpp"
#include "exsplinet/interpret.hpp"
#include "exsplinet/kernels.hpp"

namespace exsplinet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v, const char* spec = "%.6e") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw Error(ErrorKind::schema_mismatch, where + " must be an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) known = known || item.key() == key;
    if (!known) throw Error(ErrorKind::schema_mismatch, "unknown key '" + item.key() + "' in " + where);
  }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
  return obj.contains(key) ? obj.at(key).get<T>() : fallback;
}

template <class T>
T require(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw Error(ErrorKind::schema_mismatch, "missing key '" + std::string(key) + "' in " + where);
  return obj.at(key).get<T>();
}

// A scalar is broadcast to every level.
std::vector<int> level_list(const json& obj, const char* key, int L, const std::string& where) {
  if (!obj.contains(key)) throw Error(ErrorKind::schema_mismatch, "missing key '" + std::string(key) + "' in " + where);
  const json& v = obj.at(key);
  if (v.is_number_integer()) return std::vector<int>(static_cast<std::size_t>(L), v.get<int>());
  auto out = v.get<std::vector<int>>();
  if (out.size() != static_cast<std::size_t>(L)) {
    throw Error(ErrorKind::config_mismatch, where + "." + key + " has " + std::to_string(out.size()) +
                                                " entries but L = " + std::to_string(L));
  }
  return out;
}

ModelSpec parse_model(const json& j) {
  check_keys(j, "model", {"D", "O", "T", "L", "N", "M", "p", "q", "init"});
  ModelSpec m;
  m.D = get_or(j, "D", 0);
  m.O = get_or(j, "O", 0);
  m.T = require<int>(j, "T", "model");
  m.L = require<int>(j, "L", "model");
  if (m.L < 1) throw Error(ErrorKind::invalid_hyperparameter, "model.L must be >= 1");
  m.N = level_list(j, "N", m.L, "model");
  m.M = level_list(j, "M", m.L, "model");
  m.p = level_list(j, "p", m.L, "model");
  m.q = level_list(j, "q", m.L, "model");
  m.init = get_or<std::string>(j, "init", "random");
  if (m.init != "random" && m.init != "identity") {
    throw Error(ErrorKind::unknown_name, "model.init '" + m.init + "' (expected random or identity)");
  }
  return m;
}

TrainConfig parse_train(const json& j) {
  check_keys(j, "train", {"learning_rate", "epochs", "batch_size", "metric", "beta1", "beta2", "epsilon"});
  TrainConfig t;
  t.learning_rate = get_or(j, "learning_rate", t.learning_rate);
  t.epochs = get_or(j, "epochs", t.epochs);
  t.batch_size = get_or(j, "batch_size", t.batch_size);
  t.beta1 = get_or(j, "beta1", t.beta1);
  t.beta2 = get_or(j, "beta2", t.beta2);
  t.epsilon = get_or(j, "epsilon", t.epsilon);
  if (j.contains("metric")) t.metric = metric_from_string(j.at("metric").get<std::string>());
  return t;
}

DataSpec parse_data(const json& j, const fs::path& dir) {
  check_keys(j, "data", {"csv", "idx", "synthetic", "test_fraction", "stratified", "normalize"});
  DataSpec d;
  const int sources = static_cast<int>(j.contains("csv")) + static_cast<int>(j.contains("idx")) +
                      static_cast<int>(j.contains("synthetic"));
  if (sources != 1) throw Error(ErrorKind::schema_mismatch, "data needs exactly one of csv, idx, synthetic");
  if (j.contains("csv")) {
    const json& c = j.at("csv");
    check_keys(c, "data.csv", {"path", "target_column", "classification", "classes", "header"});
    CsvSource src;
    src.path = resolve_data_path(require<std::string>(c, "path", "data.csv"), dir);
    src.schema.target_column = get_or(c, "target_column", -1);
    src.schema.classification = get_or(c, "classification", true);
    src.schema.classes = get_or(c, "classes", std::vector<std::string>{});
    if (c.contains("header")) src.schema.header = c.at("header").get<bool>();
    d.csv = src;
  }
  if (j.contains("idx")) {
    const json& c = j.at("idx");
    check_keys(c, "data.idx", {"train_images", "train_labels", "test_images", "test_labels", "train_limit", "test_limit"});
    IdxSource src;
    src.train_images = resolve_data_path(require<std::string>(c, "train_images", "data.idx"), dir);
    src.train_labels = resolve_data_path(require<std::string>(c, "train_labels", "data.idx"), dir);
    src.test_images = resolve_data_path(require<std::string>(c, "test_images", "data.idx"), dir);
    src.test_labels = resolve_data_path(require<std::string>(c, "test_labels", "data.idx"), dir);
    src.train_limit = get_or<std::size_t>(c, "train_limit", 0);
    src.test_limit = get_or<std::size_t>(c, "test_limit", 0);
    d.idx = src;
  }
  if (j.contains("synthetic")) {
    const json& c = j.at("synthetic");
    check_keys(c, "data.synthetic", {"name", "train_size", "test_size"});
    d.synthetic = SyntheticSource{require<std::string>(c, "name", "data.synthetic"),
                                  require<std::size_t>(c, "train_size", "data.synthetic"),
                                  require<std::size_t>(c, "test_size", "data.synthetic")};
  }
  d.test_fraction = get_or(j, "test_fraction", d.test_fraction);
  d.stratified = get_or(j, "stratified", d.stratified);
  const std::string norm = get_or<std::string>(j, "normalize", "none");
  if (norm != "none" && norm != "minmax") throw Error(ErrorKind::unknown_name, "data.normalize '" + norm + "'");
  d.minmax = norm == "minmax";
  return d;
}

PinnSpec parse_pinn(const json& j) {
  check_keys(j, "pinn", {"problem", "interior", "boundary", "lambda", "learning_rate", "epochs", "batch_size",
                         "egg", "eval_min_inside"});
  PinnSpec s;
  s.problem = require<std::string>(j, "problem", "pinn");
  s.interior = require<std::size_t>(j, "interior", "pinn");
  s.boundary = require<std::size_t>(j, "boundary", "pinn");
  s.train.lambda = get_or(j, "lambda", s.train.lambda);
  s.train.learning_rate = get_or(j, "learning_rate", s.train.learning_rate);
  s.train.epochs = get_or(j, "epochs", s.train.epochs);
  s.train.batch_size = get_or(j, "batch_size", s.train.batch_size);
  s.eval_min_inside = get_or(j, "eval_min_inside", s.eval_min_inside);
  if (j.contains("egg")) {
    const json& e = j.at("egg");
    check_keys(e, "pinn.egg", {"cx", "cy", "a", "b", "k"});
    s.egg.cx = get_or(e, "cx", s.egg.cx);
    s.egg.cy = get_or(e, "cy", s.egg.cy);
    s.egg.a = get_or(e, "a", s.egg.a);
    s.egg.b = get_or(e, "b", s.egg.b);
    s.egg.k = get_or(e, "k", s.egg.k);
  }
  return s;
}

std::string read_text(const fs::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io_error, std::string("cannot read ") + what + " " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io_error, "cannot write " + path.string());
  out << text;
}

fs::path prepare_out(const RunOptions& options, const fs::path& fallback) {
  const fs::path dir = options.out.value_or(fallback);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io_error, "cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void apply_threads(const RunOptions& options) {
  if (options.threads < 0) throw Error(ErrorKind::invalid_argument, "--threads must be >= 0");
  if (options.threads > 0) set_thread_count(options.threads);
}

std::string timestamp_line(const RunOptions& options) {
  if (!options.timestamp) return {};
  const std::time_t now = std::time(nullptr);
  char buf[64];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return std::string("timestamp: ") + buf + "\n";
}

std::string list_text(const std::vector<int>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s + "]";
}

std::string model_line(const ModelConfig& c) {
  return "model: D=" + std::to_string(c.D) + " O=" + std::to_string(c.O) + " T=" + std::to_string(c.T) +
         " L=" + std::to_string(c.L) + " N=" + list_text(c.N) + " M=" + list_text(c.M) + " p=" + list_text(c.p) +
         " q=" + list_text(c.q) + "\n";
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int progress_stride(int epochs) { return epochs <= 20 ? 1 : epochs / 10; }

}  // namespace

ModelConfig ModelSpec::resolve(int data_dim, int data_outputs) const {
  if (D != 0 && D != data_dim) {
    throw Error(ErrorKind::config_mismatch,
                "model.D = " + std::to_string(D) + " but the data has " + std::to_string(data_dim) + " inputs");
  }
  if (O != 0 && O != data_outputs) {
    throw Error(ErrorKind::config_mismatch,
                "model.O = " + std::to_string(O) + " but the data has " + std::to_string(data_outputs) + " outputs");
  }
  ModelConfig c{data_dim, data_outputs, T, L, N, M, p, q};
  c.validate();
  return c;
}

fs::path resolve_data_path(const std::string& path, const fs::path& config_dir) {
  const fs::path p(path);
  if (p.is_absolute()) return p;
  std::vector<fs::path> candidates;
  if (const char* root = std::getenv("EXSPLINET_DATA_DIR"); root && *root) candidates.push_back(fs::path(root) / p);
  candidates.push_back(config_dir / p);
  candidates.push_back(config_dir / ".." / "data" / p);
  for (const fs::path& c : candidates) {
    std::error_code ec;
    if (fs::exists(c, ec)) return c.lexically_normal();
  }
  return candidates.front().lexically_normal();
}

ExperimentConfig parse_experiment(const std::string& text, const fs::path& config_dir, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse_error, source + ": " + e.what());
  }
  try {
    check_keys(doc, source, {"name", "seed", "output", "model", "train", "data", "pinn"});
    ExperimentConfig cfg;
    cfg.name = get_or<std::string>(doc, "name", "");
    cfg.seed = get_or<std::uint64_t>(doc, "seed", 1);
    cfg.output = get_or<std::string>(doc, "output", "out");
    cfg.model = parse_model(require<json>(doc, "model", source));
    if (doc.contains("pinn")) {
      if (doc.contains("data") || doc.contains("train")) {
        throw Error(ErrorKind::schema_mismatch, source + ": a pinn config takes no data or train section");
      }
      cfg.pinn = parse_pinn(doc.at("pinn"));
    } else {
      cfg.data = parse_data(require<json>(doc, "data", source), config_dir);
      if (doc.contains("train")) cfg.train = parse_train(doc.at("train"));
    }
    return cfg;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema_mismatch, source + ": " + e.what());
  }
}

ExperimentConfig load_experiment(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw Error(ErrorKind::io_error, "config file not found: " + path.string());
  ExperimentConfig cfg = parse_experiment(read_text(path, "config"), path.parent_path(), path.string());
  cfg.source = path;
  return cfg;
}

PreparedData prepare_data(const DataSpec& spec, std::uint64_t seed) {
  PreparedData out;
  if (spec.synthetic) {
    std::tie(out.train, out.test) = synthetic(spec.synthetic->name, spec.synthetic->train_size,
                                              spec.synthetic->test_size, seed);
  } else if (spec.csv) {
    Dataset all = load_csv(spec.csv->path, spec.csv->schema);
    if (!(spec.test_fraction >= 0.0 && spec.test_fraction < 1.0)) {
      throw Error(ErrorKind::invalid_hyperparameter, "data.test_fraction must lie in [0, 1)");
    }
    if (spec.test_fraction == 0.0) {
      out.train = std::move(all);
    } else if (spec.stratified && all.is_classification()) {
      std::tie(out.train, out.test) = stratified_split(all, spec.test_fraction, seed);
    } else {
      std::tie(out.train, out.test) = random_split(all, spec.test_fraction, seed);
    }
  } else if (spec.idx) {
    auto limit = [](Dataset d, std::size_t n) {
      if (n == 0 || n >= d.size()) return d;
      std::vector<std::size_t> rows(n);
      for (std::size_t i = 0; i < n; ++i) rows[i] = i;
      return d.subset(rows);
    };
    out.train = limit(load_idx(spec.idx->train_images, spec.idx->train_labels), spec.idx->train_limit);
    out.test = limit(load_idx(spec.idx->test_images, spec.idx->test_labels), spec.idx->test_limit);
  } else {
    throw Error(ErrorKind::schema_mismatch, "data has no source");
  }
  if (spec.minmax) {
    out.minmax = normalize_minmax(out.train);
    if (out.test.size() > 0) apply_minmax(*out.minmax, out.test);
  }
  return out;
}

ExSpliNetModel build_model(const ModelSpec& spec, int data_dim, int data_outputs, std::uint64_t seed) {
  const ModelConfig c = spec.resolve(data_dim, data_outputs);
  ExSpliNetModel model = init_random(c, seed);
  if (spec.init == "identity") init_identity(model);
  return model;
}

TrainOutcome run_training(const ExperimentConfig& config, std::uint64_t seed, const EpochCallback& on_epoch) {
  if (config.is_pinn()) throw Error(ErrorKind::schema_mismatch, "config describes a PINN problem; use the pinn command");
  PreparedData data = prepare_data(config.data, seed);
  ExSpliNetModel model = build_model(config.model, data.train.dim, data.train.outputs, seed);
  if (data.test.size() > 0 && (data.test.dim != data.train.dim || data.test.outputs != data.train.outputs)) {
    throw Error(ErrorKind::shape_mismatch, "train and test sets differ in shape");
  }
  TrainConfig tc = config.train;
  tc.seed = seed;
  if (tc.metric == Metric::accuracy && !data.train.is_classification()) {
    throw Error(ErrorKind::config_mismatch, "accuracy needs a classification dataset");
  }
  auto [best, report] = train(std::move(model), data.train, data.test, tc, on_epoch);
  return TrainOutcome{std::move(best), std::move(report), std::move(data)};
}

PinnOutcome run_pinn(const ExperimentConfig& config, std::uint64_t seed, const PinnCallback& on_epoch) {
  if (!config.is_pinn()) throw Error(ErrorKind::schema_mismatch, "config has no pinn section");
  const PinnSpec& spec = *config.pinn;
  DifferentialProblem problem = make_problem(spec.problem, spec.egg);
  const ModelConfig c = config.model.resolve(problem.dim, 1);
  require_pinn_degrees(c);
  ExSpliNetModel model = init_random(c, seed);
  if (config.model.init == "identity") init_identity(model);
  CollocationSet colloc = sample_collocation(problem, spec.interior, spec.boundary, seed);
  PinnConfig pc = spec.train;
  pc.seed = seed;
  auto [best, report] = pinn_train(std::move(model), problem, colloc, pc, on_epoch);
  std::vector<double> grid = evaluation_grid(problem, spec.eval_min_inside);
  report.mse_exact = mse_vs_exact(best, problem, grid);
  report.eval_points = grid.size() / static_cast<std::size_t>(problem.dim);
  return PinnOutcome{std::move(best), std::move(report), std::move(problem), std::move(colloc), std::move(grid)};
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::numerical_failure:
    case ErrorKind::degenerate_weights:
    case ErrorKind::rejection_stall:
      return 1;
    default:
      return 2;
  }
}

std::string basis_csv(int N, int p, int samples) {
  if (samples < 2) throw Error(ErrorKind::invalid_hyperparameter, "samples must be >= 2");
  const KnotVector kv(N, p);
  std::string out = "x";
  for (int n = 1; n <= N; ++n) out += ",B_" + std::to_string(n);
  out += "\n";
  for (int i = 0; i < samples; ++i) {
    const double x = static_cast<double>(i) / (samples - 1);
    out += num(x, "%.10g");
    for (double b : basis_dense(kv, x)) out += "," + num(b, "%.10g");
    out += "\n";
  }
  return out;
}

int cmd_train(const fs::path& config_path, const RunOptions& options, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load_experiment(config_path);
    apply_threads(options);
    const std::uint64_t seed = options.seed.value_or(cfg.seed);
    const fs::path out = prepare_out(options, cfg.output);
    const int stride = progress_stride(cfg.train.epochs);
    std::string metrics = "epoch,train_risk,test_metric\n";
    const auto t0 = std::chrono::steady_clock::now();
    TrainOutcome result = run_training(cfg, seed, [&](const EpochRecord& r) {
      metrics += std::to_string(r.epoch) + "," + num(r.train_risk, "%.17g") + "," + num(r.test_metric, "%.17g") + "\n";
      if (r.epoch % stride == 0 || r.epoch == cfg.train.epochs) {
        log << "epoch " << r.epoch << "/" << cfg.train.epochs << "  train_risk " << num(r.train_risk) << "  test_"
            << to_string(cfg.train.metric) << " " << num(r.test_metric) << "\n";
      }
    });
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const TrainReport& rep = result.report;
    const ModelConfig& mc = result.model.config();

    DataMeta meta;
    meta.feature_names = result.data.train.feature_names;
    meta.class_names = result.data.train.class_names;
    if (result.data.minmax) {
      meta.lo = result.data.minmax->lo;
      meta.hi = result.data.minmax->hi;
    }
    save_checkpoint(result.model, out / "checkpoint.esn", meta);
    write_text(out / "metrics.csv", metrics);

    std::string report = "command: train\n";
    if (!cfg.name.empty()) report += "name: " + cfg.name + "\n";
    report += timestamp_line(options);
    report += "params: " + std::to_string(param_count(mc)) + "\n";
    report += model_line(mc);
    report += "init: " + cfg.model.init + "\n";
    report += "seed: " + std::to_string(seed) + "\n";
    report += "learning_rate: " + num(cfg.train.learning_rate, "%g") + "\n";
    report += "epochs: " + std::to_string(cfg.train.epochs) + "\n";
    report += "batch_size: " + std::to_string(cfg.train.batch_size) + "\n";
    report += "train_samples: " + std::to_string(result.data.train.size()) + "\n";
    report += "test_samples: " + std::to_string(result.data.test.size()) + "\n";
    report += "best_epoch: " + std::to_string(rep.best_epoch) + "\n";
    report += "train_risk: " + num(rep.best_train_risk) + "\n";
    report += std::string("test_") + to_string(cfg.train.metric) + ": " + num(rep.final_test_metric) + "\n";
    if (options.timestamp) report += "seconds: " + num(seconds, "%.2f") + "\n";
    write_text(out / "report.txt", report);

    log << "params: " << param_count(mc) << "  test_" << to_string(cfg.train.metric) << " "
        << num(rep.final_test_metric) << "  outputs in " << out.string() << "\n";
    return 0;
  });
}

int cmd_pinn(const fs::path& config_path, const RunOptions& options, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load_experiment(config_path);
    if (!cfg.is_pinn()) throw Error(ErrorKind::schema_mismatch, config_path.string() + " has no pinn section");
    apply_threads(options);
    const std::uint64_t seed = options.seed.value_or(cfg.seed);
    const PinnSpec& spec = *cfg.pinn;
    // Refuse low degrees before creating any outputs.
    require_pinn_degrees(cfg.model.resolve(make_problem(spec.problem, spec.egg).dim, 1));
    const fs::path out = prepare_out(options, cfg.output);
    const int stride = progress_stride(spec.train.epochs);
    std::string metrics = "epoch,der,interior,boundary\n";
    const auto t0 = std::chrono::steady_clock::now();
    PinnOutcome result = run_pinn(cfg, seed, [&](const PinnEpoch& e) {
      metrics += std::to_string(e.epoch) + "," + num(e.total, "%.17g") + "," + num(e.interior, "%.17g") + "," +
                 num(e.boundary, "%.17g") + "\n";
      if (e.epoch % stride == 0 || e.epoch == spec.train.epochs) {
        log << "epoch " << e.epoch << "/" << spec.train.epochs << "  DER " << num(e.total) << "  interior "
            << num(e.interior) << "  boundary " << num(e.boundary) << "\n";
      }
    });
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const PinnReport& rep = result.report;
    const ModelConfig& mc = result.model.config();

    save_checkpoint(result.model, out / "checkpoint.esn");
    write_text(out / "metrics.csv", metrics);
    write_text(out / "solution.csv", solution_csv(result.model, result.problem, result.grid));

    std::string report = "command: pinn\n";
    if (!cfg.name.empty()) report += "name: " + cfg.name + "\n";
    report += timestamp_line(options);
    report += "params: " + std::to_string(param_count(mc)) + "\n";
    report += model_line(mc);
    report += "problem: " + spec.problem + "\n";
    if (result.problem.dim == 2) {
      report += "egg: cx=" + num(spec.egg.cx, "%g") + " cy=" + num(spec.egg.cy, "%g") + " a=" + num(spec.egg.a, "%g") +
                " b=" + num(spec.egg.b, "%g") + " k=" + num(spec.egg.k, "%g") + "\n";
    }
    report += "seed: " + std::to_string(seed) + "\n";
    report += "lambda: " + num(spec.train.lambda, "%g") + "\n";
    report += "learning_rate: " + num(spec.train.learning_rate, "%g") + "\n";
    report += "epochs: " + std::to_string(spec.train.epochs) + "\n";
    report += "batch_size: " + (spec.train.batch_size == 0 ? std::string("full") : std::to_string(spec.train.batch_size)) + "\n";
    report += "interior_points: " + std::to_string(result.collocation.interior_count()) + "\n";
    report += "boundary_points: " + std::to_string(result.collocation.boundary_count()) + "\n";
    report += "best_epoch: " + std::to_string(rep.best_epoch) + "\n";
    report += "der: " + num(rep.final_terms.total) + "\n";
    report += "der_interior: " + num(rep.final_terms.interior) + "\n";
    report += "der_boundary: " + num(rep.final_terms.boundary) + "\n";
    report += "mse_exact: " + num(rep.mse_exact) + "\n";
    report += "eval_points: " + std::to_string(rep.eval_points) + "\n";
    if (options.timestamp) report += "seconds: " + num(seconds, "%.2f") + "\n";
    write_text(out / "report.txt", report);

    log << "params: " << param_count(mc) << "  DER " << num(rep.final_terms.total) << "  MSE vs exact "
        << num(rep.mse_exact) << "  outputs in " << out.string() << "\n";
    return 0;
  });
}

int cmd_interpret(const fs::path& checkpoint, const std::optional<fs::path>& dataset, double threshold,
                  const RunOptions& options, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    std::error_code ec;
    if (!fs::is_regular_file(checkpoint, ec)) {
      throw Error(ErrorKind::io_error, "checkpoint not found: " + checkpoint.string());
    }
    if (!(threshold > 0.0)) throw Error(ErrorKind::invalid_argument, "--threshold must be > 0");
    DataMeta meta;
    const ExSpliNetModel model = load_checkpoint(checkpoint, &meta);
    const ModelConfig& mc = model.config();
    const fs::path out = prepare_out(options, "out");

    const RuleSet rules = extract_rules(model, threshold, meta.class_names);
    write_text(out / "rules.txt", rules_text(rules));
    write_text(out / "rules.json", rules_json(rules));

    std::string report = "command: interpret\n";
    report += timestamp_line(options);
    report += "params: " + std::to_string(param_count(mc)) + "\n";
    report += model_line(mc);
    report += "threshold: " + num(threshold, "%g") + "\n";
    for (const FeatureSummary& f : rules.features) {
      report += "feature t=" + std::to_string(f.t) + " l=" + std::to_string(f.l) + ": " + f.text + "\n";
    }

    if (dataset) {
      fs::path path = *dataset;
      if (!fs::exists(path, ec)) path = resolve_data_path(dataset->string(), fs::current_path());
      CsvSchema schema;
      schema.classification = !meta.class_names.empty();
      schema.classes = meta.class_names;
      Dataset data = load_csv(path, schema);
      if (data.dim != mc.D) {
        throw Error(ErrorKind::shape_mismatch, path.string() + " has " + std::to_string(data.dim) +
                                                   " inputs, the model expects " + std::to_string(mc.D));
      }
      std::size_t clamped = 0;
      if (!meta.lo.empty()) clamped = apply_minmax(MinMaxRecord{meta.lo, meta.hi}, data);
      std::string text;
      std::size_t correct = 0;
      for (std::size_t k = 0; k < data.size(); ++k) {
        const Explanation e = predict_explain(model, data.input(k));
        text += "sample " + std::to_string(k + 1);
        if (data.is_classification()) {
          text += " (label " + meta.class_names[static_cast<std::size_t>(data.labels[k])] + ")";
          if (e.label == data.labels[k]) ++correct;
        }
        text += "\n" + explanation_text(e, meta.class_names);
      }
      write_text(out / "explanations.txt", text);
      report += "dataset: " + path.string() + "\n";
      report += "samples: " + std::to_string(data.size()) + "\n";
      report += "clamped_values: " + std::to_string(clamped) + "\n";
      if (data.is_classification() && data.size() > 0) {
        report += "accuracy: " + num(static_cast<double>(correct) / static_cast<double>(data.size())) + "\n";
      }
    }
    write_text(out / "report.txt", report);
    log << "rules written to " << (out / "rules.txt").string() << "\n";
    return 0;
  });
}

int cmd_basis(int N, int p, int samples, const RunOptions& options, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const std::string csv = basis_csv(N, p, samples);
    const fs::path out = prepare_out(options, "out");
    write_text(out / "basis.csv", csv);
    log << "wrote " << samples << " rows to " << (out / "basis.csv").string() << "\n";
    return 0;
  });
}

}  // namespace exsplinet
