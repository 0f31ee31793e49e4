#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ssmamba/num/autograd.hpp"

namespace ssmamba::train {

// L2 norm over every gradient entry of every leaf, accumulated in double.
template <class T>
double global_grad_norm(std::span<num::ParamLeaf<T>* const> params);

// Rescales all gradients by max_norm / g when the global norm g exceeds
// max_norm. Returns the factor applied (1 when unchanged).
template <class T>
double clip_gradients(std::span<num::ParamLeaf<T>* const> params, double max_norm);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class T>
struct AdamState {
  std::vector<num::Tensor<T>> m;
  std::vector<num::Tensor<T>> v;
  std::uint64_t t = 0;  // steps taken so far
};

template <class T>
AdamState<T> make_adam_state(std::span<num::ParamLeaf<T>* const> params);

// One bias-corrected Adam update at step state.t + 1:
//   m = b1 m + (1 - b1) g;  v = b2 v + (1 - b2) g^2
//   p -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
template <class T>
void adam_step(std::span<num::ParamLeaf<T>* const> params, AdamState<T>& state, const AdamConfig& config);

}  // namespace ssmamba::train
