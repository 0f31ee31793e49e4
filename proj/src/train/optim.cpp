#include "ssmamba/train/optim.hpp"

#include <cmath>

#include "ssmamba/errors.hpp"

namespace ssmamba::train {

template <class T>
double global_grad_norm(std::span<num::ParamLeaf<T>* const> params) {
  double ss = 0.0;
  for (auto* p : params) {
    for (T g : p->grad().data()) ss += static_cast<double>(g) * static_cast<double>(g);
  }
  return std::sqrt(ss);
}

template <class T>
double clip_gradients(std::span<num::ParamLeaf<T>* const> params, double max_norm) {
  if (!(max_norm > 0.0)) throw ContractViolation("clip_gradients: max_norm must be positive");
  const double g = global_grad_norm(params);
  if (!(g > max_norm)) return 1.0;
  const double factor = max_norm / g;
  for (auto* p : params) {
    for (T& v : p->mutable_grad().data()) v = static_cast<T>(static_cast<double>(v) * factor);
  }
  return factor;
}

template <class T>
AdamState<T> make_adam_state(std::span<num::ParamLeaf<T>* const> params) {
  AdamState<T> s;
  for (auto* p : params) {
    s.m.emplace_back(p->shape());
    s.v.emplace_back(p->shape());
  }
  return s;
}

template <class T>
void adam_step(std::span<num::ParamLeaf<T>* const> params, AdamState<T>& state, const AdamConfig& c) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ContractViolation("adam_step: optimizer state does not match the parameter list");
  }
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto value = params[i]->mutable_value().data();
    const auto grad = params[i]->grad().data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    if (m.size() != value.size()) throw ContractViolation("adam_step: moment shape mismatch");
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = grad[j];
      const double mj = c.beta1 * static_cast<double>(m[j]) + (1.0 - c.beta1) * g;
      const double vj = c.beta2 * static_cast<double>(v[j]) + (1.0 - c.beta2) * g * g;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double update = c.lr * (mj / bc1) / (std::sqrt(vj / bc2) + c.eps);
      value[j] = static_cast<T>(static_cast<double>(value[j]) - update);
    }
  }
}

#define SSMAMBA_INSTANTIATE_OPTIM(T)                                                          \
  template double global_grad_norm<T>(std::span<num::ParamLeaf<T>* const>);                   \
  template double clip_gradients<T>(std::span<num::ParamLeaf<T>* const>, double);              \
  template AdamState<T> make_adam_state<T>(std::span<num::ParamLeaf<T>* const>);               \
  template void adam_step<T>(std::span<num::ParamLeaf<T>* const>, AdamState<T>&, const AdamConfig&);

SSMAMBA_INSTANTIATE_OPTIM(float)
SSMAMBA_INSTANTIATE_OPTIM(double)

}  // namespace ssmamba::train
