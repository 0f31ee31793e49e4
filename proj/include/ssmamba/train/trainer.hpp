#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssmamba/data/prepare.hpp"
#include "ssmamba/semantic/embedding.hpp"
#include "ssmamba/train/checkpoint.hpp"
#include "ssmamba/train/config.hpp"

namespace ssmamba::train {

struct StepRecord {
  std::size_t step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;  // before clipping
  bool operator==(const StepRecord&) const = default;
};

struct SeriesMetrics {
  std::string series;
  double rmse = 0.0;
  double mae = 0.0;
  std::size_t n = 0;
};

// Per-series RMSE/MAE in original units; the averages are plain means over
// series.
struct MetricsReport {
  std::string split;
  std::vector<SeriesMetrics> series;
  double average_rmse = 0.0;
  double average_mae = 0.0;
  std::size_t total = 0;

  const SeriesMetrics* find(const std::string& name) const;
};

MetricsReport summarize(std::string split, std::vector<SeriesMetrics> series);

struct ValidationRecord {
  std::size_t step = 0;
  double average_rmse = 0.0;
};

struct TrainResult {
  TrainedModel trained;
  std::vector<StepRecord> log;
  std::vector<ValidationRecord> validation;
  std::size_t extrapolated = 0;  // calendar features clamped during training
};

// NaN loss or gradient, loss above kDivergenceLoss, or a non-finite value
// caught by checked mode. `partial` holds the parameters from before the
// failing step and the log so far.
class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(const std::string& what, std::shared_ptr<TrainResult> partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const std::shared_ptr<TrainResult>& partial() const { return partial_; }

 private:
  std::shared_ptr<TrainResult> partial_;
};

inline constexpr double kDivergenceLoss = 1e6;

// Adam on MSE over uniformly sampled training windows pooled across series.
// Deterministic in (config, data, table).
TrainResult train(const TrainConfig& config, const std::vector<data::SeriesRecord>& datasets,
                  const semantic::EmbeddingTable& table, const std::string& embedding_source = {});

// One-step forecasts, in original units, for the given windows.
std::vector<double> predict(const ForecastModel<float>& model, std::span<const data::PreparedSeries> series,
                            std::span<const data::WindowRef> windows, const semantic::EmbeddingTable& table);

// Every window of `split`, standardized with the checkpoint's scalers. A
// series missing from the scaler table is an InputError.
MetricsReport evaluate(const TrainedModel& trained, const std::vector<data::SeriesRecord>& datasets,
                       data::Split split, const semantic::EmbeddingTable& table);

// Frozen-parameter forecast of the test range of a series not seen in
// training. Its scaler comes from its own pre-test history.
MetricsReport zero_shot_eval(const TrainedModel& trained, const data::SeriesRecord& unseen,
                             const semantic::EmbeddingTable& table);

// x_hat[t+1] = x[t] over the same windows evaluate() scores.
MetricsReport persistence_baseline(const std::vector<data::SeriesRecord>& datasets, const data::SplitSpec& split,
                                   std::size_t window, data::Split which);

struct AblationRun {
  Variant variant;
  TrainResult result;
  MetricsReport test;
};

// full, semantic_off, kan_off, context_off: same seed, same data order.
std::vector<AblationRun> run_ablation_suite(const TrainConfig& config,
                                            const std::vector<data::SeriesRecord>& datasets,
                                            const semantic::EmbeddingTable& table,
                                            const std::string& embedding_source = {});

struct SweepRow {
  std::size_t window = 0;
  bool skipped = false;
  std::string config_hash;
  MetricsReport test;
};

// Trains and tests once per window length; lengths that leave some split
// without windows are skipped with a warning.
std::vector<SweepRow> elastic_context_sweep(const TrainConfig& config,
                                            const std::vector<data::SeriesRecord>& datasets,
                                            const semantic::EmbeddingTable& table,
                                            std::span<const std::size_t> windows,
                                            const std::string& embedding_source = {});

void write_step_log(const std::vector<StepRecord>& log, const std::filesystem::path& path);
// `series\trmse\tmae\tn`, then an `average` row.
void write_metrics_tsv(const MetricsReport& report, const std::filesystem::path& path);
void write_sweep_tsv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);

}  // namespace ssmamba::train
