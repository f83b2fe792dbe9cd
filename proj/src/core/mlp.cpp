#include "ppush/core/mlp.hpp"

#include <algorithm>

#include <cmath>
#include <cstring>
#include <random>

#include "ppush/core/errors.hpp"

namespace ppush {

void MlpArch::validate() const {
  if (layer_dims.size() < 2) {
    throw DimensionError("an MLP needs at least an input and an output dimension");
  }
  for (auto d : layer_dims) {
    if (d == 0) throw DimensionError("layer dimensions must be positive");
  }
}

std::size_t MlpArch::num_params() const {
  std::size_t total = 0;
  for (std::size_t k = 0; k + 1 < layer_dims.size(); ++k) {
    total += layer_dims[k] * layer_dims[k + 1] + layer_dims[k + 1];
  }
  return total;
}

ParamSet ParamSet::zeros(const MlpArch& arch) {
  arch.validate();
  std::vector<Entry> entries;
  entries.reserve(2 * arch.num_layers());
  for (std::size_t k = 0; k < arch.num_layers(); ++k) {
    const auto d_in = arch.layer_dims[k];
    const auto d_out = arch.layer_dims[k + 1];
    entries.push_back({"layer" + std::to_string(k) + ".weight", Tensor({d_in, d_out})});
    entries.push_back({"layer" + std::to_string(k) + ".bias", Tensor({d_out})});
  }
  return ParamSet(std::move(entries));
}

ParamSet ParamSet::init(const MlpArch& arch, std::uint64_t seed) {
  ParamSet params = zeros(arch);
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < arch.num_layers(); ++k) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(arch.layer_dims[k]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t e = 2 * k; e < 2 * k + 2; ++e) {
      for (double& v : params[e].tensor.data()) v = dist(rng);
    }
  }
  return params;
}

std::size_t ParamSet::numel() const noexcept {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.numel();
  return n;
}

void ParamSet::check_matches(const MlpArch& arch) const {
  arch.validate();
  if (entries_.size() != 2 * arch.num_layers()) {
    throw DimensionError("parameter set has " + std::to_string(entries_.size()) +
                         " tensors, architecture needs " +
                         std::to_string(2 * arch.num_layers()));
  }
  for (std::size_t k = 0; k < arch.num_layers(); ++k) {
    const Shape w{arch.layer_dims[k], arch.layer_dims[k + 1]};
    const Shape b{arch.layer_dims[k + 1]};
    if (entries_[2 * k].tensor.shape() != w || entries_[2 * k + 1].tensor.shape() != b) {
      throw DimensionError("layer " + std::to_string(k) + " expects weight " +
                           shape_str(w) + " and bias " + shape_str(b));
    }
  }
}

std::vector<double> ParamSet::flatten() const {
  std::vector<double> out;
  out.reserve(numel());
  for (const auto& e : entries_) {
    auto d = e.tensor.data();
    out.insert(out.end(), d.begin(), d.end());
  }
  return out;
}

void ParamSet::flatten_into(std::span<double> out) const {
  if (out.size() != numel()) throw DimensionError("flatten_into: buffer size mismatch");
  auto it = out.begin();
  for (const auto& e : entries_) {
    auto d = e.tensor.data();
    it = std::copy(d.begin(), d.end(), it);
  }
}

void ParamSet::flatten_grad_into(std::span<double> out) const {
  if (out.size() != numel()) throw DimensionError("flatten_grad_into: buffer size mismatch");
  auto it = out.begin();
  for (const auto& e : entries_) {
    if (!e.tensor.has_grad()) throw StateError("missing gradient for " + e.name);
    auto g = e.tensor.grad();
    it = std::copy(g.begin(), g.end(), it);
  }
}

std::vector<double> ParamSet::flatten_grad() const {
  std::vector<double> out;
  out.reserve(numel());
  for (const auto& e : entries_) {
    if (!e.tensor.has_grad()) throw StateError("missing gradient for " + e.name);
    auto g = e.tensor.grad();
    out.insert(out.end(), g.begin(), g.end());
  }
  return out;
}

void ParamSet::unflatten(std::span<const double> flat) {
  if (flat.size() != numel()) {
    throw DimensionError("unflatten got " + std::to_string(flat.size()) +
                         " values for " + std::to_string(numel()) + " parameters");
  }
  std::size_t offset = 0;
  for (auto& e : entries_) {
    auto d = e.tensor.data();
    std::memcpy(d.data(), flat.data() + offset, d.size() * sizeof(double));
    offset += d.size();
  }
}

bool ParamSet::has_grads() const noexcept {
  for (const auto& e : entries_) {
    if (!e.tensor.has_grad()) return false;
  }
  return !entries_.empty();
}

void ParamSet::zero_grad() {
  for (auto& e : entries_) e.tensor.zero_grad();
}

void ParamSet::drop_grads() noexcept {
  for (auto& e : entries_) e.tensor.drop_grad();
}

ParamSet ParamSet::zeros_like() const {
  std::vector<Entry> entries;
  entries.reserve(entries_.size());
  for (const auto& e : entries_) entries.push_back({e.name, Tensor(e.tensor.shape())});
  return ParamSet(std::move(entries));
}

bool bit_equal(const ParamSet& a, const ParamSet& b) noexcept {
  if (a.entries_.size() != b.entries_.size()) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    if (!bit_equal(a.entries_[i].tensor, b.entries_[i].tensor)) return false;
  }
  return true;
}

bool bit_equal_with_grads(const ParamSet& a, const ParamSet& b) noexcept {
  if (!bit_equal(a, b)) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    const Tensor& x = a.entries_[i].tensor;
    const Tensor& y = b.entries_[i].tensor;
    if (x.has_grad() != y.has_grad()) return false;
    if (x.has_grad() &&
        std::memcmp(x.grad().data(), y.grad().data(), x.numel() * sizeof(double)) != 0) {
      return false;
    }
  }
  return true;
}

ForwardPass::ForwardPass(const MlpArch& arch, const ParamSet& params, const Tensor& x)
    : params_(&params) {
  params.check_matches(arch);
  if (x.rank() != 2 || x.cols() != arch.input_dim()) {
    throw DimensionError("input " + shape_str(x.shape()) + " does not match input dim " +
                         std::to_string(arch.input_dim()));
  }
  param_vars_.reserve(params.size());
  for (const auto& e : params) param_vars_.push_back(tape_.parameter(e.tensor));

  Tape::Var h = tape_.constant(x);
  for (std::size_t k = 0; k < arch.num_layers(); ++k) {
    h = tape_.matmul(h, param_vars_[2 * k]);
    h = tape_.add_bias(h, param_vars_[2 * k + 1]);
    if (k + 1 < arch.num_layers() && arch.activation != Activation::Identity) {
      h = tape_.activate(h, arch.activation);
    }
  }
  output_ = h;
}

double ForwardPass::mse_loss(const Tensor& label) {
  if (loss_) throw StateError("loss already recorded on this forward pass");
  Tape::Var y = tape_.constant(label);
  loss_ = tape_.mse(output_, y);
  return tape_.value(*loss_)[0];
}

void ForwardPass::backward(ParamSet& params) {
  if (&params != params_) throw StateError("backward target is not the forward parameter set");
  if (!loss_) throw StateError("backward called before a loss was recorded");
  tape_.backward(*loss_);
  for (std::size_t i = 0; i < param_vars_.size(); ++i) {
    params[i].tensor.set_grad(tape_.take_grad(param_vars_[i]));
  }
}

Tensor forward(const MlpArch& arch, const ParamSet& params, const Tensor& x) {
  ForwardPass pass(arch, params, x);
  return pass.output();
}

double mse_loss(const Tensor& pred, const Tensor& label) {
  if (pred.shape() != label.shape()) {
    throw DimensionError("mse prediction " + shape_str(pred.shape()) + " vs label " +
                         shape_str(label.shape()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const double d = pred[i] - label[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.numel());
}

}  // namespace ppush
