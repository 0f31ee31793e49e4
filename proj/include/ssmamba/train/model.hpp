#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ssmamba/data/prepare.hpp"
#include "ssmamba/semantic/embedding.hpp"
#include "ssmamba/ssm/backbone.hpp"
#include "ssmamba/temporal/kan.hpp"
#include "ssmamba/train/config.hpp"

namespace ssmamba::train {

// Semantic index projection + calendar encoder (spline KAN, or the fixed
// sinusoidal encoding for kan_off) feeding the selective SSM backbone.
//
// The variant only changes which leaves are trainable and which context
// terms are injected; every variant builds the backbone from the same named
// seed streams, so their initial backbone weights agree exactly.
template <class T>
class ForecastModel {
 public:
  ForecastModel(const TrainConfig& config, const temporal::NormalizationRanges& ranges,
                std::vector<std::string> training_names);
  ForecastModel(ForecastModel&&) noexcept = default;
  ForecastModel& operator=(ForecastModel&&) noexcept = default;

  const TrainConfig& config() const { return config_; }
  const temporal::NormalizationRanges& ranges() const { return ranges_; }
  const std::vector<std::string>& training_names() const { return training_names_; }

  // Every leaf in a fixed order, frozen ones included.
  std::vector<num::ParamLeaf<T>*> parameters();
  std::vector<const num::ParamLeaf<T>*> parameters() const;
  std::vector<num::ParamLeaf<T>*> trainable_parameters();
  std::size_t trainable_scalars() const;
  num::ParamLeaf<T>* find(const std::string& name);

  // Semantic context e [B, N]; invalid Var when e_scale is zero.
  num::Var<T> semantic_context(std::span<const std::string> names, const semantic::EmbeddingTable& table) const;
  // Temporal context [B, L, N]; invalid Var when k_scale is zero.
  num::Var<T> temporal_context(const data::WindowBatch& batch, temporal::ExtrapolationCounter* counter) const;

  // Predictions [B, L]; entry l forecasts the standardized value after
  // input position l.
  num::Var<T> forward(const data::WindowBatch& batch, const semantic::EmbeddingTable& table,
                      temporal::ExtrapolationCounter* counter = nullptr) const;

  // MSE on standardized one-step targets (last position, or every position
  // under LossPositions::all).
  num::Var<T> loss(const data::WindowBatch& batch, const semantic::EmbeddingTable& table,
                   temporal::ExtrapolationCounter* counter = nullptr) const;

  const ssm::SsmParams<T>& backbone() const { return ssm_; }
  const std::optional<temporal::KanParams<T>>& kan() const { return kan_; }

 private:
  TrainConfig config_;
  temporal::NormalizationRanges ranges_;
  std::vector<std::string> training_names_;
  ssm::SsmParams<T> ssm_;
  semantic::IndexProjection<T> projection_;
  std::optional<num::ParamLeaf<T>> residual_;  // S x N, one row per training series
  std::optional<temporal::KanParams<T>> kan_;
  std::optional<temporal::SinusoidalParams<T>> sinusoidal_;
};

temporal::DescriptorGrid descriptor_grid(const data::WindowBatch& batch);

extern template class ForecastModel<float>;
extern template class ForecastModel<double>;

}  // namespace ssmamba::train
