#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace exsplinet {

// Row-major samples. Classification sets carry labels and one-hot targets.
struct Dataset {
  int dim = 0;
  int outputs = 0;
  std::vector<double> inputs;   // size() x dim
  std::vector<double> targets;  // size() x outputs
  std::vector<int> labels;      // empty for regression
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;

  std::size_t size() const { return dim == 0 ? 0 : inputs.size() / static_cast<std::size_t>(dim); }
  bool is_classification() const { return !labels.empty(); }
  std::span<const double> input(std::size_t k) const {
    return std::span<const double>(inputs).subspan(k * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim));
  }
  Dataset subset(std::span<const std::size_t> rows) const;
};

struct CsvSchema {
  // Column holding the target; negative counts from the end (-1 = last).
  int target_column = -1;
  bool classification = true;
  // Optional fixed class order; otherwise the sorted distinct labels.
  std::vector<std::string> classes;
  // nullopt: detect a header by a non-numeric first field.
  std::optional<bool> header;
};

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);
Dataset parse_csv(const std::string& text, const CsvSchema& schema, const std::string& source = "<string>");

struct MinMaxRecord {
  std::vector<double> lo;
  std::vector<double> hi;

  // Maps one row in place; values outside [lo, hi] are clamped and counted.
  std::size_t apply(std::span<double> row) const;
  void invert(std::span<double> row) const;
};

// Fits on `data`, maps it to [0,1]^D and returns the record.
MinMaxRecord normalize_minmax(Dataset& data);
// Applies an existing record; returns the number of clamped values.
std::size_t apply_minmax(const MinMaxRecord& record, Dataset& data);

std::pair<Dataset, Dataset> synthetic(const std::string& name, std::size_t train_size, std::size_t test_size,
                                      std::uint64_t seed);
double exp1_target(double x);
// Target on the natural [-1,1]^4 domain.
double exp2_target(std::span<const double> x);

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, int classes = 10);

// Per-class shuffled split keeping class proportions; test_fraction of each class goes to test.
std::pair<Dataset, Dataset> stratified_split(const Dataset& data, double test_fraction, std::uint64_t seed);
std::pair<Dataset, Dataset> random_split(const Dataset& data, double test_fraction, std::uint64_t seed);

}  // namespace exsplinet
