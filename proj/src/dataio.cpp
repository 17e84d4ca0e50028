#include "exsplinet/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "exsplinet/error.hpp"

namespace exsplinet {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> parse_number(const std::string& field) {
  if (field.empty()) return std::nullopt;
  const char* begin = field.data();
  if (*begin == '+') ++begin;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::uint32_t read_be32(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

std::vector<unsigned char> read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io_error, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.dim = dim;
  out.outputs = outputs;
  out.feature_names = feature_names;
  out.class_names = class_names;
  const auto d = static_cast<std::size_t>(dim);
  const auto o = static_cast<std::size_t>(outputs);
  out.inputs.reserve(rows.size() * d);
  out.targets.reserve(rows.size() * o);
  for (std::size_t r : rows) {
    if (r >= size()) throw Error(ErrorKind::index_out_of_range, "row " + std::to_string(r));
    out.inputs.insert(out.inputs.end(), inputs.begin() + static_cast<std::ptrdiff_t>(r * d),
                      inputs.begin() + static_cast<std::ptrdiff_t>((r + 1) * d));
    out.targets.insert(out.targets.end(), targets.begin() + static_cast<std::ptrdiff_t>(r * o),
                       targets.begin() + static_cast<std::ptrdiff_t>((r + 1) * o));
    if (!labels.empty()) out.labels.push_back(labels[r]);
  }
  return out;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io_error, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), schema, path.string());
}

Dataset parse_csv(const std::string& text, const CsvSchema& schema, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::pair<int, std::vector<std::string>>> rows;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    rows.emplace_back(line_no, split_fields(line));
  }
  if (rows.empty()) throw Error(ErrorKind::empty_dataset, source + ": no rows");
  const std::size_t columns = rows.front().second.size();
  if (columns < 2) throw Error(ErrorKind::schema_mismatch, source + ": need at least one feature and a target");
  const int tc = schema.target_column < 0 ? static_cast<int>(columns) + schema.target_column : schema.target_column;
  if (tc < 0 || tc >= static_cast<int>(columns)) {
    throw Error(ErrorKind::schema_mismatch, source + ": target column outside the " + std::to_string(columns) + " columns");
  }
  const auto target = static_cast<std::size_t>(tc);

  bool header = false;
  if (schema.header) {
    header = *schema.header;
  } else {
    const auto& first = rows.front().second;
    const std::size_t probe = target == 0 ? 1 : 0;
    header = !parse_number(first[probe]).has_value();
  }

  Dataset data;
  data.dim = static_cast<int>(columns) - 1;
  for (std::size_t c = 0; c < columns; ++c) {
    if (c == target) continue;
    data.feature_names.push_back(header ? rows.front().second[c] : "x" + std::to_string(data.feature_names.size() + 1));
  }
  std::vector<std::string> raw_labels;
  for (std::size_t r = header ? 1 : 0; r < rows.size(); ++r) {
    const auto& [ln, fields] = rows[r];
    if (fields.size() != columns) {
      throw Error(ErrorKind::schema_mismatch, source + ":" + std::to_string(ln) + ": expected " + std::to_string(columns) +
                                                  " fields, got " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < columns; ++c) {
      if (c == target) continue;
      const auto v = parse_number(fields[c]);
      if (!v) throw Error(ErrorKind::parse_error, source + ":" + std::to_string(ln) + ": bad number '" + fields[c] + "'");
      data.inputs.push_back(*v);
    }
    if (schema.classification) {
      if (fields[target].empty()) throw Error(ErrorKind::parse_error, source + ":" + std::to_string(ln) + ": empty label");
      raw_labels.push_back(fields[target]);
    } else {
      const auto v = parse_number(fields[target]);
      if (!v) throw Error(ErrorKind::parse_error, source + ":" + std::to_string(ln) + ": bad target '" + fields[target] + "'");
      data.targets.push_back(*v);
    }
  }
  if (data.inputs.empty()) throw Error(ErrorKind::empty_dataset, source + ": header only");
  if (!schema.classification) {
    data.outputs = 1;
    return data;
  }
  if (schema.classes.empty()) {
    data.class_names = raw_labels;
    std::sort(data.class_names.begin(), data.class_names.end());
    data.class_names.erase(std::unique(data.class_names.begin(), data.class_names.end()), data.class_names.end());
  } else {
    data.class_names = schema.classes;
  }
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < data.class_names.size(); ++i) index[data.class_names[i]] = static_cast<int>(i);
  data.outputs = static_cast<int>(data.class_names.size());
  for (const auto& label : raw_labels) {
    const auto it = index.find(label);
    if (it == index.end()) throw Error(ErrorKind::schema_mismatch, source + ": unknown class '" + label + "'");
    data.labels.push_back(it->second);
    for (int o = 0; o < data.outputs; ++o) data.targets.push_back(o == it->second ? 1.0 : 0.0);
  }
  return data;
}

std::size_t MinMaxRecord::apply(std::span<double> row) const {
  std::size_t clamped = 0;
  for (std::size_t d = 0; d < row.size(); ++d) {
    double v = (row[d] - lo[d]) / (hi[d] - lo[d]);
    if (v < 0.0 || v > 1.0) {
      ++clamped;
      v = std::clamp(v, 0.0, 1.0);
    }
    row[d] = v;
  }
  return clamped;
}

void MinMaxRecord::invert(std::span<double> row) const {
  for (std::size_t d = 0; d < row.size(); ++d) row[d] = lo[d] + row[d] * (hi[d] - lo[d]);
}

MinMaxRecord normalize_minmax(Dataset& data) {
  if (data.size() == 0) throw Error(ErrorKind::empty_dataset, "nothing to normalize");
  const auto dim = static_cast<std::size_t>(data.dim);
  MinMaxRecord rec{std::vector<double>(dim, INFINITY), std::vector<double>(dim, -INFINITY)};
  for (std::size_t k = 0; k < data.size(); ++k) {
    for (std::size_t d = 0; d < dim; ++d) {
      rec.lo[d] = std::min(rec.lo[d], data.inputs[k * dim + d]);
      rec.hi[d] = std::max(rec.hi[d], data.inputs[k * dim + d]);
    }
  }
  for (std::size_t d = 0; d < dim; ++d) {
    if (!(rec.hi[d] > rec.lo[d])) {
      const std::string name = d < data.feature_names.size() ? data.feature_names[d] : std::to_string(d + 1);
      throw Error(ErrorKind::constant_feature, "feature '" + name + "' is constant");
    }
  }
  apply_minmax(rec, data);
  return rec;
}

std::size_t apply_minmax(const MinMaxRecord& record, Dataset& data) {
  std::size_t clamped = 0;
  const auto dim = static_cast<std::size_t>(data.dim);
  if (record.lo.size() != dim) throw Error(ErrorKind::shape_mismatch, "normalization record has wrong dimension");
  for (std::size_t k = 0; k < data.size(); ++k) {
    clamped += record.apply(std::span<double>(data.inputs).subspan(k * dim, dim));
  }
  return clamped;
}

double exp1_target(double x) { return std::cos(20.0 * std::numbers::pi * x); }

double exp2_target(std::span<const double> x) {
  return x[0] + x[1] * x[1] + x[2] * x[2] * x[2] + std::exp(x[3]) + x[0] * x[1] + x[2] * x[3];
}

std::pair<Dataset, Dataset> synthetic(const std::string& name, std::size_t train_size, std::size_t test_size,
                                      std::uint64_t seed) {
  if (name != "exp1" && name != "exp2") throw Error(ErrorKind::unknown_name, "unknown synthetic set '" + name + "'");
  if (train_size == 0 || test_size == 0) throw Error(ErrorKind::empty_dataset, "synthetic sizes must be >= 1");
  std::mt19937_64 rng(seed);
  auto make = [&](std::size_t count) {
    Dataset data;
    data.outputs = 1;
    if (name == "exp1") {
      data.dim = 1;
      data.feature_names = {"x1"};
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (std::size_t k = 0; k < count; ++k) {
        const double x = u(rng);
        data.inputs.push_back(x);
        data.targets.push_back(exp1_target(x));
      }
    } else {
      data.dim = 4;
      data.feature_names = {"x1", "x2", "x3", "x4"};
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (std::size_t k = 0; k < count; ++k) {
        double x[4];
        for (double& v : x) v = u(rng);
        for (double v : x) data.inputs.push_back((v + 1.0) / 2.0);
        data.targets.push_back(exp2_target(x));
      }
    }
    return data;
  };
  Dataset train = make(train_size);
  Dataset test = make(test_size);
  return {std::move(train), std::move(test)};
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, int classes) {
  const auto img = read_binary(images);
  const auto lab = read_binary(labels);
  if (img.size() < 16) throw Error(ErrorKind::truncated_file, images.string() + ": header too short");
  if (lab.size() < 8) throw Error(ErrorKind::truncated_file, labels.string() + ": header too short");
  if (read_be32(img.data()) != 0x00000803u) throw Error(ErrorKind::bad_magic, images.string() + ": not an IDX image file");
  if (read_be32(lab.data()) != 0x00000801u) throw Error(ErrorKind::bad_magic, labels.string() + ": not an IDX label file");
  const std::size_t count = read_be32(img.data() + 4);
  const std::size_t rows = read_be32(img.data() + 8);
  const std::size_t cols = read_be32(img.data() + 12);
  const std::size_t label_count = read_be32(lab.data() + 4);
  if (count != label_count) {
    throw Error(ErrorKind::count_mismatch, std::to_string(count) + " images but " + std::to_string(label_count) + " labels");
  }
  const std::size_t pixels = rows * cols;
  if (img.size() - 16 < count * pixels) throw Error(ErrorKind::truncated_file, images.string() + ": payload too short");
  if (lab.size() - 8 < count) throw Error(ErrorKind::truncated_file, labels.string() + ": payload too short");
  Dataset data;
  data.dim = static_cast<int>(pixels);
  data.outputs = classes;
  data.inputs.resize(count * pixels);
  for (std::size_t i = 0; i < count * pixels; ++i) data.inputs[i] = img[16 + i] / 255.0;
  data.targets.assign(count * static_cast<std::size_t>(classes), 0.0);
  for (std::size_t k = 0; k < count; ++k) {
    const int label = lab[8 + k];
    if (label >= classes) throw Error(ErrorKind::parse_error, labels.string() + ": label " + std::to_string(label) + " out of range");
    data.labels.push_back(label);
    data.targets[k * static_cast<std::size_t>(classes) + static_cast<std::size_t>(label)] = 1.0;
  }
  for (int c = 0; c < classes; ++c) data.class_names.push_back(std::to_string(c));
  for (std::size_t i = 0; i < pixels; ++i) data.feature_names.push_back("px" + std::to_string(i));
  return data;
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  if (!data.is_classification()) throw Error(ErrorKind::invalid_argument, "stratified split needs labels");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error(ErrorKind::invalid_argument, "test fraction must be in (0,1)");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  for (int c = 0; c < data.outputs; ++c) {
    std::vector<std::size_t> rows;
    for (std::size_t k = 0; k < data.size(); ++k) {
      if (data.labels[k] == c) rows.push_back(k);
    }
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(rows.size())));
    test_rows.insert(test_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
    train_rows.insert(train_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_test), rows.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  return {data.subset(train_rows), data.subset(test_rows)};
}

std::pair<Dataset, Dataset> random_split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error(ErrorKind::invalid_argument, "test fraction must be in (0,1)");
  std::vector<std::size_t> rows(data.size());
  for (std::size_t k = 0; k < rows.size(); ++k) rows[k] = k;
  std::mt19937_64 rng(seed);
  std::shuffle(rows.begin(), rows.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(rows.size())));
  std::vector<std::size_t> test(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(rows.begin() + static_cast<std::ptrdiff_t>(n_test), rows.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {data.subset(train), data.subset(test)};
}

}  // namespace exsplinet
