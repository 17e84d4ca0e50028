#pragma once

// The ExSpliNet function family: per tree t and level l an additive inner
// spline feature y_{t,l}(x) = sum_d v^{t,l,d} . B_{N_l,p_l}(x_d), fed into an
// L-variate tensor-product outer spline per (output, tree).
//
// Indices t, l, d, o are 0-based in this API. Basis indices inside weight
// vectors follow the 1-based convention of bspline.hpp.
//
// Trainable parameter vector layout (the canonical flat order):
//   inner raw u:  for t, for l, for d, for n   (block (t,l) is contiguous)
//   outer w:      for o, for t, tensor in lexicographic order
// Derived constrained weights v share the inner layout.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "exsplinet/bspline.hpp"
#include "exsplinet/tensor.hpp"

namespace exsplinet {

inline constexpr const char* kCheckpointFormat = "exsplinet-v1";

struct ModelConfig {
  int D = 1;
  int O = 1;
  int T = 1;
  int L = 1;
  std::vector<int> N;
  std::vector<int> M;
  std::vector<int> p;
  std::vector<int> q;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

std::int64_t param_count(const ModelConfig& config);

class ExSpliNetModel {
 public:
  // Uniform inner weights (raw u = 1) and zero outer weights.
  explicit ExSpliNetModel(ModelConfig config);

  const ModelConfig& config() const noexcept { return config_; }
  std::size_t size() const noexcept { return params_.size(); }

  std::span<const double> params() const noexcept { return params_; }
  // Replaces every raw parameter and re-derives v.
  void set_params(std::span<const double> values);

  std::size_t inner_size() const noexcept { return inner_size_; }
  std::size_t block_offset(int t, int l) const { return block_offset_[static_cast<std::size_t>(t * config_.L + l)]; }
  std::size_t block_size(int l) const { return static_cast<std::size_t>(config_.D * config_.N[static_cast<std::size_t>(l)]); }
  std::size_t inner_offset(int t, int l, int d) const {
    return block_offset(t, l) + static_cast<std::size_t>(d * config_.N[static_cast<std::size_t>(l)]);
  }
  std::size_t outer_tensor_size() const noexcept { return outer_tensor_size_; }
  std::size_t outer_offset(int o, int t) const {
    return inner_size_ + static_cast<std::size_t>(o * config_.T + t) * outer_tensor_size_;
  }

  std::span<const double> v() const noexcept { return v_; }
  std::span<const double> v(int t, int l, int d) const;
  std::span<const double> u(int t, int l, int d) const;
  std::span<const double> outer(int o, int t) const;
  void set_outer(int o, int t, std::span<const double> weights);
  WeightTensor outer_tensor(int o, int t) const;

  // A frozen block keeps its v exactly as stored (no unit-sum normalization)
  // and is excluded from training.
  bool frozen(int t, int l) const { return frozen_[static_cast<std::size_t>(t * config_.L + l)] != 0; }
  std::span<const std::uint8_t> frozen_flags() const noexcept { return frozen_; }

  // Sets the constrained weights of block (t,l) (layout d-major, size D*N_l).
  // Targets with nonnegative entries summing to 1 are stored as trainable raw
  // u = sqrt(v); anything else is stored verbatim as a frozen block.
  void set_inner_block(int t, int l, std::span<const double> v_block);
  void set_raw_block(int t, int l, std::span<const double> u_block, bool frozen);

  const KnotVector& inner_knots(int l) const { return inner_knots_[static_cast<std::size_t>(l)]; }
  const KnotVector& outer_knots(int l) const { return outer_knots_[static_cast<std::size_t>(l)]; }
  std::span<const std::size_t> outer_strides() const noexcept { return outer_strides_; }

  // Recomputes v from the raw parameters. Throws degenerate-weights when a
  // trainable block is identically zero.
  void refresh();

 private:
  ModelConfig config_;
  std::vector<double> params_;
  std::vector<double> v_;
  std::vector<std::uint8_t> frozen_;
  std::vector<std::size_t> block_offset_;
  std::size_t inner_size_ = 0;
  std::size_t outer_tensor_size_ = 0;
  std::vector<std::size_t> outer_strides_;
  std::vector<KnotVector> inner_knots_;
  std::vector<KnotVector> outer_knots_;
};

// v_i = u_i^2 / sum_j u_j^2 over one (t,l) block.
void reparam(std::span<const double> u, std::span<double> v);
std::vector<double> reparam(std::span<const double> u);

// Unclamped additive feature; lies in [0,1] for constrained blocks.
double inner_feature(const ExSpliNetModel& model, int t, int l, std::span<const double> x);

// Reference forward pass built from tensor_basis / tensor_dot.
std::vector<double> forward(const ExSpliNetModel& model, std::span<const double> x);

ExSpliNetModel init_random(const ModelConfig& config, std::uint64_t seed);

// Identity features y_{t,l} = x_l (requires L == D and p_l >= 1).
void init_identity(ExSpliNetModel& model);
// y_{t,l} = x_{sigma[t][l]} with 0-based sigma.
void init_coordinate_select(ExSpliNetModel& model, const std::vector<std::vector<int>>& sigma);
// y_{t,l} = sum_d nu[t][l][d] x_d; requires p_l = 1, N_l = 2 and row-stochastic nu.
void init_convex(ExSpliNetModel& model, const std::vector<std::vector<std::vector<double>>>& nu);

// Optional dataset description stored next to the weights.
struct DataMeta {
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  std::vector<double> lo;  // min-max record; empty when inputs were not rescaled
  std::vector<double> hi;

  bool empty() const { return feature_names.empty() && class_names.empty() && lo.empty(); }
};

std::string checkpoint_to_string(const ExSpliNetModel& model, const DataMeta& meta = {});
ExSpliNetModel checkpoint_from_string(const std::string& text, DataMeta* meta = nullptr);
void save_checkpoint(const ExSpliNetModel& model, const std::filesystem::path& path, const DataMeta& meta = {});
ExSpliNetModel load_checkpoint(const std::filesystem::path& path, DataMeta* meta = nullptr);

}  // namespace exsplinet
