#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ppush/core/tape.hpp"
#include "ppush/core/tensor.hpp"

namespace ppush {

/// Fully connected network: layer_dims[k] -> layer_dims[k+1] per layer, the
/// activation after every hidden layer and a linear output layer.
struct MlpArch {
  std::vector<std::size_t> layer_dims;
  Activation activation = Activation::Tanh;

  void validate() const;
  std::size_t num_layers() const noexcept {
    return layer_dims.empty() ? 0 : layer_dims.size() - 1;
  }
  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }
  std::size_t num_params() const;
};

/// Ordered (name, tensor) pairs for one particle: weight [d_in x d_out]
/// followed by bias [d_out] for every layer.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
  };

  ParamSet() = default;
  explicit ParamSet(std::vector<Entry> entries) : entries_(std::move(entries)) {}

  /// Seeded init: every layer uniform in +-1/sqrt(d_in).
  static ParamSet init(const MlpArch& arch, std::uint64_t seed);
  static ParamSet zeros(const MlpArch& arch);

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t numel() const noexcept;
  Entry& operator[](std::size_t i) { return entries_[i]; }
  const Entry& operator[](std::size_t i) const { return entries_[i]; }
  auto begin() noexcept { return entries_.begin(); }
  auto end() noexcept { return entries_.end(); }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  /// Throws DimensionError unless the layout matches `arch`.
  void check_matches(const MlpArch& arch) const;

  std::vector<double> flatten() const;
  /// flatten() into a caller-owned buffer of exactly numel() values.
  void flatten_into(std::span<double> out) const;
  void flatten_grad_into(std::span<double> out) const;
  /// Flattened gradients; throws StateError if any tensor lacks a gradient.
  std::vector<double> flatten_grad() const;
  /// Overwrites values in flatten() order; throws DimensionError on length
  /// mismatch.
  void unflatten(std::span<const double> flat);

  bool has_grads() const noexcept;
  void zero_grad();
  void drop_grads() noexcept;

  /// Same layout with all values zero and no gradients.
  ParamSet zeros_like() const;

  friend bool bit_equal(const ParamSet& a, const ParamSet& b) noexcept;
  /// bit_equal on values and on gradient buffers.
  friend bool bit_equal_with_grads(const ParamSet& a, const ParamSet& b) noexcept;

 private:
  std::vector<Entry> entries_;
};

/// One recorded forward evaluation of an MLP. Holds the tape; `params` must
/// outlive this object.
class ForwardPass {
 public:
  ForwardPass(const MlpArch& arch, const ParamSet& params, const Tensor& x);

  const Tensor& output() const { return tape_.value(output_); }

  /// Appends an MSE loss node against `label` and returns its value.
  double mse_loss(const Tensor& label);

  /// Back-propagates the loss into `params`' gradient buffers (overwriting
  /// them). `params` must be the ParamSet given to the constructor.
  void backward(ParamSet& params);

 private:
  const ParamSet* params_;
  Tape tape_;
  std::vector<Tape::Var> param_vars_;
  Tape::Var output_{0};
  std::optional<Tape::Var> loss_;
};

/// Forward without keeping the tape.
Tensor forward(const MlpArch& arch, const ParamSet& params, const Tensor& x);

/// Mean over all elements of the squared difference.
double mse_loss(const Tensor& pred, const Tensor& label);

}  // namespace ppush
