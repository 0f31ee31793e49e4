#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ssmamba::num {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Checked mode rejects non-finite tensors at construction and enables the
// extra range checks in the model code. On by default.
bool checked_mode();
void set_checked_mode(bool on);

class CheckedModeGuard {
 public:
  explicit CheckedModeGuard(bool on) : previous_(checked_mode()) { set_checked_mode(on); }
  ~CheckedModeGuard() { set_checked_mode(previous_); }
  CheckedModeGuard(const CheckedModeGuard&) = delete;
  CheckedModeGuard& operator=(const CheckedModeGuard&) = delete;

 private:
  bool previous_;
};

// Byte accounting for every tensor buffer. Used by the scaling benchmarks to
// measure the memory high-water mark of a forward/backward pass.
struct MemoryStats {
  std::size_t live_bytes = 0;
  std::size_t peak_bytes = 0;
};

MemoryStats memory_stats();
void reset_peak_memory();

namespace detail {
void note_alloc(std::size_t bytes);
void note_free(std::size_t bytes);
}  // namespace detail

template <class T>
struct TrackingAllocator {
  using value_type = T;

  TrackingAllocator() = default;
  template <class U>
  TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    detail::note_alloc(n * sizeof(T));
    return std::allocator<T>{}.allocate(n);
  }
  void deallocate(T* p, std::size_t n) noexcept {
    detail::note_free(n * sizeof(T));
    std::allocator<T>{}.deallocate(p, n);
  }

  template <class U>
  bool operator==(const TrackingAllocator<U>&) const noexcept {
    return true;
  }
};

// Dense row-major tensor with value semantics. A rank-0 shape holds one
// element (a scalar).
template <class T>
class Tensor {
 public:
  using Buffer = std::vector<T, TrackingAllocator<T>>;

  Tensor() : shape_{0} {}
  explicit Tensor(Shape shape, T fill = T{0});
  Tensor(Shape shape, std::span<const T> values);
  Tensor(Shape shape, std::initializer_list<T> values)
      : Tensor(std::move(shape), std::span<const T>(values.begin(), values.size())) {}

  static Tensor scalar(T value) { return Tensor(Shape{}, value); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<const T> data() const { return {data_.data(), data_.size()}; }
  std::span<T> data() { return {data_.data(), data_.size()}; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // Value of a single-element tensor.
  T item() const;

  Tensor reshaped(Shape shape) const;
  void fill(T value);

  // Throws NumericError naming `where` if any entry is NaN or Inf.
  void require_finite(const char* where) const;
  bool all_finite() const;

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

 private:
  Shape shape_;
  Buffer data_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace ssmamba::num
