#pragma once

#include <vector>

#include "ssmamba/num/autograd.hpp"

// Differentiable tensor operations. Binary elementwise ops broadcast with
// right-aligned (NumPy) rules. All loops run in a fixed order, so results are
// bitwise reproducible for a given input.
namespace ssmamba::num {

Shape broadcast_shape(const Shape& a, const Shape& b);

template <class T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <class T> Var<T> sub(const Var<T>& a, const Var<T>& b);
template <class T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <class T> Var<T> scale(const Var<T>& a, T factor);

template <class T> Var<T> exp(const Var<T>& a);
template <class T> Var<T> tanh(const Var<T>& a);
template <class T> Var<T> sigmoid(const Var<T>& a);
// log(1 + e^x), evaluated without overflow for large |x|.
template <class T> Var<T> softplus(const Var<T>& a);
template <class T> Var<T> square(const Var<T>& a);

template <class T> Var<T> sum(const Var<T>& a);
template <class T> Var<T> mean(const Var<T>& a);
// Reduces one axis; the axis is removed from the result shape.
template <class T> Var<T> sum_axis(const Var<T>& a, std::size_t axis);

// [M,K] x [K,N] -> [M,N]
template <class T> Var<T> matmul(const Var<T>& a, const Var<T>& b);
// x[..., K] against weight[M, K] -> [..., M]  (x * weight^T)
template <class T> Var<T> linear(const Var<T>& x, const Var<T>& weight);

template <class T> Var<T> reshape(const Var<T>& a, Shape shape);
template <class T> Var<T> broadcast_to(const Var<T>& a, const Shape& shape);
// Elements [begin, end) along `axis`.
template <class T> Var<T> slice(const Var<T>& a, std::size_t axis, std::size_t begin, std::size_t end);
template <class T> Var<T> concat(const std::vector<Var<T>>& parts, std::size_t axis);

#define SSMAMBA_DECLARE_OPS(T)                                                            \
  extern template Var<T> add<T>(const Var<T>&, const Var<T>&);                            \
  extern template Var<T> sub<T>(const Var<T>&, const Var<T>&);                            \
  extern template Var<T> mul<T>(const Var<T>&, const Var<T>&);                            \
  extern template Var<T> scale<T>(const Var<T>&, T);                                      \
  extern template Var<T> exp<T>(const Var<T>&);                                           \
  extern template Var<T> tanh<T>(const Var<T>&);                                          \
  extern template Var<T> sigmoid<T>(const Var<T>&);                                       \
  extern template Var<T> softplus<T>(const Var<T>&);                                      \
  extern template Var<T> square<T>(const Var<T>&);                                        \
  extern template Var<T> sum<T>(const Var<T>&);                                           \
  extern template Var<T> mean<T>(const Var<T>&);                                          \
  extern template Var<T> sum_axis<T>(const Var<T>&, std::size_t);                         \
  extern template Var<T> matmul<T>(const Var<T>&, const Var<T>&);                         \
  extern template Var<T> linear<T>(const Var<T>&, const Var<T>&);                         \
  extern template Var<T> reshape<T>(const Var<T>&, Shape);                                \
  extern template Var<T> broadcast_to<T>(const Var<T>&, const Shape&);                    \
  extern template Var<T> slice<T>(const Var<T>&, std::size_t, std::size_t, std::size_t);  \
  extern template Var<T> concat<T>(const std::vector<Var<T>>&, std::size_t);

SSMAMBA_DECLARE_OPS(float)
SSMAMBA_DECLARE_OPS(double)
#undef SSMAMBA_DECLARE_OPS

}  // namespace ssmamba::num
