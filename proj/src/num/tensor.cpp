#include "ssmamba/num/tensor.hpp"

#include <cmath>
#include <sstream>

#include "ssmamba/errors.hpp"

namespace ssmamba::num {

namespace {
std::atomic<bool> g_checked{true};
std::atomic<std::size_t> g_live{0};
std::atomic<std::size_t> g_peak{0};
}  // namespace

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

bool checked_mode() { return g_checked.load(std::memory_order_relaxed); }
void set_checked_mode(bool on) { g_checked.store(on, std::memory_order_relaxed); }

MemoryStats memory_stats() { return {g_live.load(), g_peak.load()}; }
void reset_peak_memory() { g_peak.store(g_live.load()); }

namespace detail {
void note_alloc(std::size_t bytes) {
  const std::size_t live = g_live.fetch_add(bytes) + bytes;
  std::size_t peak = g_peak.load();
  while (live > peak && !g_peak.compare_exchange_weak(peak, live)) {
  }
}
void note_free(std::size_t bytes) { g_live.fetch_sub(bytes); }
}  // namespace detail

template <class T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(std::move(shape)), data_(numel(shape_), fill) {
  if (checked_mode() && !std::isfinite(fill)) require_finite("Tensor(fill)");
}

template <class T>
Tensor<T>::Tensor(Shape shape, std::span<const T> values)
    : shape_(std::move(shape)), data_(values.begin(), values.end()) {
  if (data_.size() != numel(shape_)) {
    throw ContractViolation("Tensor: " + std::to_string(data_.size()) + " values for shape " +
                            shape_str(shape_));
  }
  if (checked_mode()) require_finite("Tensor(values)");
}

template <class T>
T Tensor<T>::item() const {
  if (data_.size() != 1) {
    throw ContractViolation("item() on tensor of shape " + shape_str(shape_));
  }
  return data_[0];
}

template <class T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
  if (numel(shape) != data_.size()) {
    throw ContractViolation("reshape " + shape_str(shape_) + " -> " + shape_str(shape));
  }
  Tensor out = *this;
  out.shape_ = std::move(shape);
  return out;
}

template <class T>
void Tensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <class T>
bool Tensor<T>::all_finite() const {
  for (const T v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template <class T>
void Tensor<T>::require_finite(const char* where) const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw NumericError(std::string(where) + ": non-finite value at flat index " +
                         std::to_string(i) + " of " + shape_str(shape_));
    }
  }
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace ssmamba::num
