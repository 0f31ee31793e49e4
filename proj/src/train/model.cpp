#include "ssmamba/train/model.hpp"

#include "ssmamba/errors.hpp"
#include "ssmamba/num/ops.hpp"

namespace ssmamba::train {

using num::ParamLeaf;
using num::Tensor;
using num::Var;

temporal::DescriptorGrid descriptor_grid(const data::WindowBatch& batch) {
  temporal::DescriptorGrid grid;
  grid.batch = batch.batch;
  grid.length = batch.length;
  grid.cells.reserve(batch.dates.size());
  for (const auto& d : batch.dates) grid.cells.push_back(temporal::calendar_descriptor(d));
  return grid;
}

namespace {

ssm::SsmConfig backbone_config(const TrainConfig& c) {
  auto s = c.ssm;
  s.e_scale = c.effective_e_scale();
  s.k_scale = c.effective_k_scale();
  s.window_hint = c.window;
  return s;
}

}  // namespace

template <class T>
ForecastModel<T>::ForecastModel(const TrainConfig& config, const temporal::NormalizationRanges& ranges,
                                std::vector<std::string> training_names)
    : config_(config),
      ranges_(ranges),
      training_names_(std::move(training_names)),
      ssm_(ssm::make_ssm_params<T>(backbone_config(config), config.seed)),
      projection_(semantic::make_index_projection<T>(config.ssm.state_size, config.embedding_dim, config.seed)) {
  config_.validate();
  const std::size_t n = config.ssm.state_size;
  const bool semantic_on = config.effective_e_scale() != 0.0;
  const bool temporal_on = config.effective_k_scale() != 0.0;
  if (config.semantic_residual) {
    residual_.emplace("semantic.residual", Tensor<T>({training_names_.size(), n}), semantic_on);
  }
  if (config.variant == Variant::kan_off) {
    sinusoidal_.emplace(temporal::make_sinusoidal_params<T>(n, config.kan.activation, config.seed));
    sinusoidal_->mix_weight.set_trainable(temporal_on);
    sinusoidal_->mix_bias.set_trainable(temporal_on);
  } else {
    kan_.emplace(temporal::make_kan_params<T>(config.kan, n, ranges_, config.seed));
    for (auto* p : {&kan_->coefficients, &kan_->mix_weight, &kan_->mix_bias}) p->set_trainable(temporal_on);
  }
  projection_.weight.set_trainable(semantic_on);
  projection_.bias.set_trainable(semantic_on);
}

template <class T>
std::vector<ParamLeaf<T>*> ForecastModel<T>::parameters() {
  std::vector<ParamLeaf<T>*> out;
  ssm_.collect(out);
  projection_.collect(out);
  if (residual_) out.push_back(&*residual_);
  if (kan_) kan_->collect(out);
  if (sinusoidal_) sinusoidal_->collect(out);
  return out;
}

template <class T>
std::vector<const ParamLeaf<T>*> ForecastModel<T>::parameters() const {
  auto all = const_cast<ForecastModel*>(this)->parameters();
  return {all.begin(), all.end()};
}

template <class T>
std::vector<ParamLeaf<T>*> ForecastModel<T>::trainable_parameters() {
  std::vector<ParamLeaf<T>*> out;
  for (auto* p : parameters()) {
    if (p->trainable()) out.push_back(p);
  }
  return out;
}

template <class T>
std::size_t ForecastModel<T>::trainable_scalars() const {
  std::size_t total = 0;
  for (const auto* p : parameters()) {
    if (p->trainable()) total += p->size();
  }
  return total;
}

template <class T>
ParamLeaf<T>* ForecastModel<T>::find(const std::string& name) {
  for (auto* p : parameters()) {
    if (p->name() == name) return p;
  }
  return nullptr;
}

template <class T>
Var<T> ForecastModel<T>::semantic_context(std::span<const std::string> names,
                                          const semantic::EmbeddingTable& table) const {
  if (config_.effective_e_scale() == 0.0) return {};
  if (table.dim() != projection_.input_dim()) {
    throw ConfigError("embedding table has dimension " + std::to_string(table.dim()) + " but the model expects " +
                      std::to_string(projection_.input_dim()));
  }
  auto e = semantic::embed_batch<T>(names, table, projection_);
  if (!residual_) return e;
  // One-hot rows select each training series' residual; unseen names get none.
  Tensor<T> onehot({names.size(), training_names_.size()});
  for (std::size_t b = 0; b < names.size(); ++b) {
    for (std::size_t s = 0; s < training_names_.size(); ++s) {
      if (training_names_[s] == names[b]) onehot[b * training_names_.size() + s] = T{1};
    }
  }
  return num::add(e, num::matmul(num::constant(std::move(onehot)), residual_->var()));
}

template <class T>
Var<T> ForecastModel<T>::temporal_context(const data::WindowBatch& batch,
                                          temporal::ExtrapolationCounter* counter) const {
  if (config_.effective_k_scale() == 0.0) return {};
  const auto grid = descriptor_grid(batch);
  if (kan_) return temporal::kan_forward<T>(grid, *kan_, batch.length, counter);
  return temporal::sinusoidal_forward<T>(grid, *sinusoidal_, batch.length);
}

template <class T>
Var<T> ForecastModel<T>::forward(const data::WindowBatch& batch, const semantic::EmbeddingTable& table,
                                 temporal::ExtrapolationCounter* counter) const {
  if (batch.batch == 0 || batch.inputs.size() != batch.batch * batch.length) {
    throw ContractViolation("forward: malformed window batch");
  }
  Tensor<T> values({batch.batch, batch.length});
  for (std::size_t i = 0; i < batch.inputs.size(); ++i) values[i] = static_cast<T>(batch.inputs[i]);
  const auto e = semantic_context(batch.names, table);
  const auto tev = temporal_context(batch, counter);
  return ssm::forward<T>(values, e, tev, ssm_);
}

template <class T>
Var<T> ForecastModel<T>::loss(const data::WindowBatch& batch, const semantic::EmbeddingTable& table,
                              temporal::ExtrapolationCounter* counter) const {
  const auto pred = forward(batch, table, counter);
  const std::size_t bsz = batch.batch, len = batch.length;
  if (config_.loss == LossPositions::last) {
    Tensor<T> target({bsz, 1});
    for (std::size_t b = 0; b < bsz; ++b) target[b] = static_cast<T>(batch.targets[b]);
    const auto last = num::slice(pred, 1, len - 1, len);
    return num::mean(num::square(num::sub(last, num::constant(std::move(target)))));
  }
  Tensor<T> target({bsz, len});
  for (std::size_t b = 0; b < bsz; ++b) {
    for (std::size_t l = 0; l + 1 < len; ++l) target[b * len + l] = static_cast<T>(batch.inputs[b * len + l + 1]);
    target[b * len + len - 1] = static_cast<T>(batch.targets[b]);
  }
  return num::mean(num::square(num::sub(pred, num::constant(std::move(target)))));
}

template class ForecastModel<float>;
template class ForecastModel<double>;

}  // namespace ssmamba::train
