#include "exsplinet/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "exsplinet/error.hpp"

namespace exsplinet {

namespace {

constexpr double kUnitSumTolerance = 1e-12;

std::string int_list(const std::vector<int>& values) {
  std::string s = "[";
  for (std::size_t i = 0; i < values.size(); ++i) s += (i ? "," : "") + std::to_string(values[i]);
  return s + "]";
}

void append_array(std::string& out, std::span<const double> values) {
  out += '[';
  char buf[40];
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw Error(ErrorKind::invalid_argument, "non-finite parameter in checkpoint");
    std::snprintf(buf, sizeof buf, "%.17g", values[i]);
    if (i) out += ',';
    out += buf;
  }
  out += ']';
}

}  // namespace

void ModelConfig::validate() const {
  if (D < 1 || O < 1 || T < 1 || L < 1) {
    throw Error(ErrorKind::invalid_hyperparameter, "D, O, T, L must all be >= 1");
  }
  const auto l = static_cast<std::size_t>(L);
  if (N.size() != l || M.size() != l || p.size() != l || q.size() != l) {
    throw Error(ErrorKind::invalid_hyperparameter, "N, M, p, q must each have L entries");
  }
  for (std::size_t i = 0; i < l; ++i) {
    if (p[i] < 0 || N[i] <= p[i]) {
      throw Error(ErrorKind::invalid_hyperparameter, "level " + std::to_string(i + 1) + ": need N > p >= 0");
    }
    if (q[i] < 0 || M[i] <= q[i]) {
      throw Error(ErrorKind::invalid_hyperparameter, "level " + std::to_string(i + 1) + ": need M > q >= 0");
    }
  }
}

std::int64_t param_count(const ModelConfig& config) {
  config.validate();
  std::int64_t sum_n = 0;
  std::int64_t prod_m = 1;
  for (int n : config.N) sum_n += n;
  for (int m : config.M) prod_m *= m;
  return static_cast<std::int64_t>(config.D) * config.T * sum_n +
         static_cast<std::int64_t>(config.O) * config.T * prod_m;
}

ExSpliNetModel::ExSpliNetModel(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto levels = static_cast<std::size_t>(config_.L);
  block_offset_.resize(static_cast<std::size_t>(config_.T) * levels);
  std::size_t offset = 0;
  for (int t = 0; t < config_.T; ++t) {
    for (int l = 0; l < config_.L; ++l) {
      block_offset_[static_cast<std::size_t>(t * config_.L + l)] = offset;
      offset += block_size(l);
    }
  }
  inner_size_ = offset;
  outer_tensor_size_ = shape_product(config_.M);
  params_.assign(inner_size_ + static_cast<std::size_t>(config_.O * config_.T) * outer_tensor_size_, 0.0);
  std::fill(params_.begin(), params_.begin() + static_cast<std::ptrdiff_t>(inner_size_), 1.0);
  v_.assign(inner_size_, 0.0);
  frozen_.assign(block_offset_.size(), 0);
  outer_strides_ = WeightTensor{config_.M, {}}.strides();
  for (std::size_t l = 0; l < levels; ++l) {
    inner_knots_.emplace_back(config_.N[l], config_.p[l]);
    outer_knots_.emplace_back(config_.M[l], config_.q[l]);
  }
  refresh();
}

void ExSpliNetModel::set_params(std::span<const double> values) {
  if (values.size() != params_.size()) {
    throw Error(ErrorKind::shape_mismatch, "parameter vector has wrong length");
  }
  std::copy(values.begin(), values.end(), params_.begin());
  refresh();
}

std::span<const double> ExSpliNetModel::v(int t, int l, int d) const {
  return std::span<const double>(v_).subspan(inner_offset(t, l, d), static_cast<std::size_t>(config_.N[static_cast<std::size_t>(l)]));
}

std::span<const double> ExSpliNetModel::u(int t, int l, int d) const {
  return std::span<const double>(params_).subspan(inner_offset(t, l, d), static_cast<std::size_t>(config_.N[static_cast<std::size_t>(l)]));
}

std::span<const double> ExSpliNetModel::outer(int o, int t) const {
  return std::span<const double>(params_).subspan(outer_offset(o, t), outer_tensor_size_);
}

void ExSpliNetModel::set_outer(int o, int t, std::span<const double> weights) {
  if (weights.size() != outer_tensor_size_) {
    throw Error(ErrorKind::shape_mismatch, "outer weight tensor has wrong size");
  }
  std::copy(weights.begin(), weights.end(), params_.begin() + static_cast<std::ptrdiff_t>(outer_offset(o, t)));
}

WeightTensor ExSpliNetModel::outer_tensor(int o, int t) const {
  const auto w = outer(o, t);
  return WeightTensor{config_.M, {w.begin(), w.end()}};
}

void ExSpliNetModel::set_inner_block(int t, int l, std::span<const double> v_block) {
  if (v_block.size() != block_size(l)) throw Error(ErrorKind::shape_mismatch, "inner block has wrong size");
  double sum = 0.0;
  bool nonnegative = true;
  for (double v : v_block) {
    sum += v;
    nonnegative = nonnegative && v >= 0.0;
  }
  if (nonnegative && std::abs(sum - 1.0) <= kUnitSumTolerance) {
    std::vector<double> u(v_block.size());
    std::transform(v_block.begin(), v_block.end(), u.begin(), [](double v) { return std::sqrt(v); });
    set_raw_block(t, l, u, false);
  } else {
    set_raw_block(t, l, v_block, true);
  }
}

void ExSpliNetModel::set_raw_block(int t, int l, std::span<const double> u_block, bool frozen) {
  if (u_block.size() != block_size(l)) throw Error(ErrorKind::shape_mismatch, "inner block has wrong size");
  std::copy(u_block.begin(), u_block.end(), params_.begin() + static_cast<std::ptrdiff_t>(block_offset(t, l)));
  frozen_[static_cast<std::size_t>(t * config_.L + l)] = frozen ? 1 : 0;
  refresh();
}

void ExSpliNetModel::refresh() {
  for (int t = 0; t < config_.T; ++t) {
    for (int l = 0; l < config_.L; ++l) {
      const std::size_t off = block_offset(t, l);
      const std::size_t len = block_size(l);
      const auto raw = std::span<const double>(params_).subspan(off, len);
      const auto out = std::span<double>(v_).subspan(off, len);
      if (frozen(t, l)) {
        std::copy(raw.begin(), raw.end(), out.begin());
      } else {
        reparam(raw, out);
      }
    }
  }
}

void reparam(std::span<const double> u, std::span<double> v) {
  if (u.size() != v.size()) throw Error(ErrorKind::shape_mismatch, "reparam size mismatch");
  double sum = 0.0;
  for (double x : u) sum += x * x;
  if (!(sum > 0.0)) throw Error(ErrorKind::degenerate_weights, "inner weight block is identically zero");
  for (std::size_t i = 0; i < u.size(); ++i) v[i] = u[i] * u[i] / sum;
}

std::vector<double> reparam(std::span<const double> u) {
  std::vector<double> v(u.size());
  reparam(u, v);
  return v;
}

double inner_feature(const ExSpliNetModel& model, int t, int l, std::span<const double> x) {
  const ModelConfig& c = model.config();
  if (static_cast<int>(x.size()) != c.D) throw Error(ErrorKind::shape_mismatch, "input has wrong dimension");
  double y = 0.0;
  for (int d = 0; d < c.D; ++d) {
    const SparseBasis b = basis_sparse(model.inner_knots(l), x[static_cast<std::size_t>(d)]);
    const auto v = model.v(t, l, d);
    for (std::size_t j = 0; j < b.values.size(); ++j) y += v[static_cast<std::size_t>(b.offset - 1) + j] * b.values[j];
  }
  return y;
}

std::vector<double> forward(const ExSpliNetModel& model, std::span<const double> x) {
  const ModelConfig& c = model.config();
  std::vector<double> out(static_cast<std::size_t>(c.O), 0.0);
  std::vector<double> y(static_cast<std::size_t>(c.L));
  for (int t = 0; t < c.T; ++t) {
    for (int l = 0; l < c.L; ++l) {
      y[static_cast<std::size_t>(l)] = std::clamp(inner_feature(model, t, l, x), 0.0, 1.0);
    }
    const TensorBasisSparse b = tensor_basis(c.M, c.q, y);
    for (int o = 0; o < c.O; ++o) out[static_cast<std::size_t>(o)] += tensor_dot(model.outer_tensor(o, t), b);
  }
  return out;
}

ExSpliNetModel init_random(const ModelConfig& config, std::uint64_t seed) {
  ExSpliNetModel model(config);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> inner(0.5, 1.5);
  const double s = 1.0 / config.T;
  std::uniform_real_distribution<double> outer(-s, s);
  std::vector<double> params(model.size());
  for (std::size_t i = 0; i < model.inner_size(); ++i) params[i] = inner(rng);
  for (std::size_t i = model.inner_size(); i < params.size(); ++i) params[i] = outer(rng);
  model.set_params(params);
  return model;
}

void init_coordinate_select(ExSpliNetModel& model, const std::vector<std::vector<int>>& sigma) {
  const ModelConfig& c = model.config();
  if (static_cast<int>(sigma.size()) != c.T) throw Error(ErrorKind::shape_mismatch, "sigma needs one map per tree");
  for (int t = 0; t < c.T; ++t) {
    const auto& map = sigma[static_cast<std::size_t>(t)];
    if (static_cast<int>(map.size()) != c.L) throw Error(ErrorKind::shape_mismatch, "sigma map needs L entries");
    for (int l = 0; l < c.L; ++l) {
      const int d_sel = map[static_cast<std::size_t>(l)];
      if (d_sel < 0 || d_sel >= c.D) {
        throw Error(ErrorKind::index_out_of_range, "sigma selects input " + std::to_string(d_sel));
      }
      const int n = c.N[static_cast<std::size_t>(l)];
      const std::vector<double> g = greville(n, c.p[static_cast<std::size_t>(l)]);
      std::vector<double> block(model.block_size(l), 0.0);
      std::copy(g.begin(), g.end(), block.begin() + static_cast<std::ptrdiff_t>(d_sel * n));
      model.set_inner_block(t, l, block);
    }
  }
}

void init_identity(ExSpliNetModel& model) {
  const ModelConfig& c = model.config();
  if (c.L != c.D) throw Error(ErrorKind::config_mismatch, "identity inner weights need L == D");
  std::vector<int> ident(static_cast<std::size_t>(c.L));
  for (int l = 0; l < c.L; ++l) ident[static_cast<std::size_t>(l)] = l;
  init_coordinate_select(model, std::vector<std::vector<int>>(static_cast<std::size_t>(c.T), ident));
}

void init_convex(ExSpliNetModel& model, const std::vector<std::vector<std::vector<double>>>& nu) {
  const ModelConfig& c = model.config();
  for (int l = 0; l < c.L; ++l) {
    if (c.p[static_cast<std::size_t>(l)] != 1 || c.N[static_cast<std::size_t>(l)] != 2) {
      throw Error(ErrorKind::config_mismatch, "convex inner weights need p = 1 and N = 2 on every level");
    }
  }
  if (static_cast<int>(nu.size()) != c.T) throw Error(ErrorKind::shape_mismatch, "nu needs one entry per tree");
  for (int t = 0; t < c.T; ++t) {
    if (static_cast<int>(nu[static_cast<std::size_t>(t)].size()) != c.L) {
      throw Error(ErrorKind::shape_mismatch, "nu needs one row per level");
    }
    for (int l = 0; l < c.L; ++l) {
      const auto& row = nu[static_cast<std::size_t>(t)][static_cast<std::size_t>(l)];
      if (static_cast<int>(row.size()) != c.D) throw Error(ErrorKind::shape_mismatch, "nu row needs D entries");
      double sum = 0.0;
      for (double a : row) {
        if (!(a >= 0.0)) throw Error(ErrorKind::invalid_coefficients, "convex coefficients must be nonnegative");
        sum += a;
      }
      if (std::abs(sum - 1.0) > 1e-12) throw Error(ErrorKind::invalid_coefficients, "convex coefficients must sum to 1");
      std::vector<double> block(model.block_size(l), 0.0);
      for (int d = 0; d < c.D; ++d) block[static_cast<std::size_t>(2 * d + 1)] = row[static_cast<std::size_t>(d)];
      model.set_inner_block(t, l, block);
    }
  }
}

std::string checkpoint_to_string(const ExSpliNetModel& model, const DataMeta& meta) {
  const ModelConfig& c = model.config();
  std::string out;
  out += "{\n  \"format\": \"";
  out += kCheckpointFormat;
  out += "\",\n  \"config\": {\"D\": " + std::to_string(c.D) + ", \"O\": " + std::to_string(c.O) +
         ", \"T\": " + std::to_string(c.T) + ", \"L\": " + std::to_string(c.L) + ", \"N\": " + int_list(c.N) +
         ", \"M\": " + int_list(c.M) + ", \"p\": " + int_list(c.p) + ", \"q\": " + int_list(c.q) + "},\n";
  out += "  \"inner\": {\"order\": \"t,l,d,n\", \"frozen\": [";
  const auto flags = model.frozen_flags();
  for (std::size_t i = 0; i < flags.size(); ++i) out += std::string(i ? "," : "") + (flags[i] ? "true" : "false");
  out += "],\n    \"raw\": ";
  append_array(out, model.params().subspan(0, model.inner_size()));
  out += "},\n  \"outer\": {\"order\": \"o,t,m\", \"weights\": ";
  append_array(out, model.params().subspan(model.inner_size()));
  out += "}";
  if (!meta.empty()) {
    nlohmann::json names{{"features", meta.feature_names}, {"classes", meta.class_names}};
    out += ",\n  \"data\": {\"names\": " + names.dump() + ",\n    \"lo\": ";
    append_array(out, meta.lo);
    out += ",\n    \"hi\": ";
    append_array(out, meta.hi);
    out += "}";
  }
  out += "\n}\n";
  return out;
}

ExSpliNetModel checkpoint_from_string(const std::string& text, DataMeta* meta) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse_error, std::string("checkpoint: ") + e.what());
  }
  try {
    const std::string format = doc.at("format").get<std::string>();
    if (format != kCheckpointFormat) {
      throw Error(ErrorKind::version_mismatch, "checkpoint format '" + format + "', expected '" + kCheckpointFormat + "'");
    }
    const auto& jc = doc.at("config");
    ModelConfig c;
    c.D = jc.at("D").get<int>();
    c.O = jc.at("O").get<int>();
    c.T = jc.at("T").get<int>();
    c.L = jc.at("L").get<int>();
    c.N = jc.at("N").get<std::vector<int>>();
    c.M = jc.at("M").get<std::vector<int>>();
    c.p = jc.at("p").get<std::vector<int>>();
    c.q = jc.at("q").get<std::vector<int>>();
    ExSpliNetModel model(c);
    const auto raw = doc.at("inner").at("raw").get<std::vector<double>>();
    const auto frozen = doc.at("inner").at("frozen").get<std::vector<bool>>();
    const auto weights = doc.at("outer").at("weights").get<std::vector<double>>();
    if (raw.size() != model.inner_size() || weights.size() != model.size() - model.inner_size() ||
        frozen.size() != static_cast<std::size_t>(c.T * c.L)) {
      throw Error(ErrorKind::shape_mismatch, "checkpoint arrays do not match the configuration");
    }
    for (int t = 0; t < c.T; ++t) {
      for (int l = 0; l < c.L; ++l) {
        const auto block = std::span<const double>(raw).subspan(model.block_offset(t, l), model.block_size(l));
        model.set_raw_block(t, l, block, frozen[static_cast<std::size_t>(t * c.L + l)]);
      }
    }
    std::vector<double> all(raw);
    all.insert(all.end(), weights.begin(), weights.end());
    model.set_params(all);
    if (meta) {
      *meta = DataMeta{};
      if (doc.contains("data")) {
        const auto& jd = doc.at("data");
        meta->feature_names = jd.at("names").at("features").get<std::vector<std::string>>();
        meta->class_names = jd.at("names").at("classes").get<std::vector<std::string>>();
        meta->lo = jd.at("lo").get<std::vector<double>>();
        meta->hi = jd.at("hi").get<std::vector<double>>();
        if (meta->lo.size() != meta->hi.size() || (!meta->lo.empty() && meta->lo.size() != static_cast<std::size_t>(c.D))) {
          throw Error(ErrorKind::shape_mismatch, "checkpoint normalization does not match D");
        }
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse_error, std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const ExSpliNetModel& model, const std::filesystem::path& path, const DataMeta& meta) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io_error, "cannot write " + path.string());
  out << checkpoint_to_string(model, meta);
}

ExSpliNetModel load_checkpoint(const std::filesystem::path& path, DataMeta* meta) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io_error, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str(), meta);
}

}  // namespace exsplinet
