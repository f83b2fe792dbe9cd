#include "ppush/core/tensor.hpp"

#include <mutex>
#include <new>
#include <unordered_map>

#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>

#include "ppush/core/errors.hpp"

namespace ppush {

namespace detail {

namespace {

constexpr std::align_val_t kAlign{64};
constexpr std::size_t kPoolMinBytes = std::size_t{64} << 10;
constexpr std::size_t kPoolMaxCachedBytes = std::size_t{1} << 30;

struct BlockPool {
  std::mutex mu;
  std::unordered_map<std::size_t, std::vector<void*>> free_blocks;
  std::size_t cached_bytes = 0;
};

BlockPool& pool() {
  // Leaked on purpose so tensors destroyed during static teardown can still
  // return their blocks.
  static BlockPool* p = new BlockPool;
  return *p;
}

}  // namespace

void* buffer_allocate(std::size_t bytes) {
  if (bytes >= kPoolMinBytes) {
    BlockPool& bp = pool();
    std::lock_guard lock(bp.mu);
    auto it = bp.free_blocks.find(bytes);
    if (it != bp.free_blocks.end() && !it->second.empty()) {
      void* p = it->second.back();
      it->second.pop_back();
      bp.cached_bytes -= bytes;
      return p;
    }
  }
  return ::operator new(bytes, kAlign);
}

void buffer_release(void* p, std::size_t bytes) noexcept {
  if (!p) return;
  if (bytes >= kPoolMinBytes) {
    BlockPool& bp = pool();
    std::lock_guard lock(bp.mu);
    if (bp.cached_bytes + bytes <= kPoolMaxCachedBytes) {
      try {
        bp.free_blocks[bytes].push_back(p);
        bp.cached_bytes += bytes;
        return;
      } catch (...) {
        // Bookkeeping allocation failed; fall through and free the block.
      }
    }
  }
  ::operator delete(p, kAlign);
}

}  // namespace detail

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have rank >= 1");
  for (auto d : shape) {
    if (d == 0) {
      throw DimensionError("tensor dimensions must be positive, got " +
                           shape_str(shape));
    }
  }
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(shape_numel(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(values.begin(), values.end()) {
  check_shape(shape_);
  if (shape_numel(shape_) != data_.size()) {
    throw DimensionError("shape " + shape_str(shape_) + " needs " +
                         std::to_string(shape_numel(shape_)) + " values, got " +
                         std::to_string(data_.size()));
  }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw DimensionError("expected a matrix, got " + shape_str(shape_));
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw DimensionError("expected a matrix, got " + shape_str(shape_));
  return shape_[1];
}

std::span<double> Tensor::grad() {
  if (!has_grad()) throw StateError("tensor has no gradient buffer");
  return grad_;
}

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw StateError("tensor has no gradient buffer");
  return grad_;
}

void Tensor::zero_grad() {
  grad_.assign(data_.size(), 0.0);
  has_grad_ = true;
}

void Tensor::set_grad(Buffer grad) {
  if (grad.size() != data_.size()) {
    throw DimensionError("gradient size " + std::to_string(grad.size()) +
                         " does not match tensor " + shape_str(shape_));
  }
  grad_ = std::move(grad);
  has_grad_ = true;
}

Buffer Tensor::take_values() noexcept {
  shape_.clear();
  grad_.clear();
  has_grad_ = false;
  return std::move(data_);
}

bool Tensor::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool bit_equal(const Tensor& a, const Tensor& b) noexcept {
  return a.shape_ == b.shape_ && a.data_.size() == b.data_.size() &&
         (a.data_.empty() ||
          std::memcmp(a.data_.data(), b.data_.data(),
                      a.data_.size() * sizeof(double)) == 0);
}

}  // namespace ppush
