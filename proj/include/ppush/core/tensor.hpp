#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ppush {

using Shape = std::vector<std::size_t>;

namespace detail {
/// 64-byte aligned blocks. Large blocks are recycled through a size-keyed
/// cache instead of going back to the system allocator, which would unmap
/// them and page-fault them in again on the next parameter copy.
void* buffer_allocate(std::size_t bytes);
void buffer_release(void* p, std::size_t bytes) noexcept;
}  // namespace detail

/// Cache-line aligned allocator. Vectorized matmul kernels choose between
/// their packet and scalar paths by address, and those paths round
/// differently, so a fixed base alignment is what makes results depend only
/// on shapes and values.
template <class T>
struct AlignedAllocator {
  using value_type = T;

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(detail::buffer_allocate(n * sizeof(T))); }
  void deallocate(T* p, std::size_t n) noexcept { detail::buffer_release(p, n * sizeof(T)); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major array of doubles with an optional same-shape gradient
/// buffer.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t numel() const noexcept { return data_.size(); }
  std::size_t rank() const noexcept { return shape_.size(); }
  // 2-D accessors; throw DimensionError on other ranks.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const {
    return data_[r * shape_[1] + c];
  }

  bool has_grad() const noexcept { return has_grad_; }
  std::span<double> grad();
  std::span<const double> grad() const;
  /// Allocates the gradient buffer if needed and fills it with zeros.
  void zero_grad();
  void set_grad(Buffer grad);
  void drop_grad() noexcept {
    grad_.clear();
    has_grad_ = false;
  }

  /// Moves the values out, leaving an empty tensor behind.
  Buffer take_values() noexcept;

  bool all_finite() const noexcept;

  /// Same shape and identical bit patterns in data (gradients ignored).
  friend bool bit_equal(const Tensor& a, const Tensor& b) noexcept;

 private:
  Shape shape_;
  Buffer data_;
  Buffer grad_;
  bool has_grad_ = false;
};

}  // namespace ppush
