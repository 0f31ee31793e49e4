#include "ssmamba/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "ssmamba/errors.hpp"
#include "ssmamba/log.hpp"
#include "ssmamba/num/ops.hpp"
#include "ssmamba/num/rng.hpp"
#include "ssmamba/num/text.hpp"
#include "ssmamba/train/optim.hpp"

namespace ssmamba::train {

using data::PreparedSeries;
using data::WindowRef;

const SeriesMetrics* MetricsReport::find(const std::string& name) const {
  for (const auto& s : series) {
    if (s.series == name) return &s;
  }
  return nullptr;
}

MetricsReport summarize(std::string split, std::vector<SeriesMetrics> series) {
  MetricsReport r;
  r.split = std::move(split);
  r.series = std::move(series);
  for (const auto& s : r.series) {
    r.average_rmse += s.rmse;
    r.average_mae += s.mae;
    r.total += s.n;
  }
  if (!r.series.empty()) {
    r.average_rmse /= static_cast<double>(r.series.size());
    r.average_mae /= static_cast<double>(r.series.size());
  }
  return r;
}

namespace {

constexpr std::size_t kPredictChunk = 256;

std::vector<PreparedSeries> prepare_all(const std::vector<data::SeriesRecord>& datasets, const data::SplitSpec& spec) {
  if (datasets.empty()) throw InputError("no training series");
  std::set<std::string> names;
  std::vector<PreparedSeries> out;
  for (const auto& rec : datasets) {
    if (!names.insert(rec.name).second) throw InputError("duplicate series name '" + rec.name + "'");
    out.push_back(data::prepare_series(rec, spec));
  }
  return out;
}

temporal::NormalizationRanges training_ranges(const std::vector<PreparedSeries>& series) {
  std::vector<temporal::Date> dates;
  for (const auto& s : series) {
    dates.insert(dates.end(), s.dates.begin(), s.dates.begin() + static_cast<std::ptrdiff_t>(s.ranges.train.end));
  }
  return temporal::NormalizationRanges::from_dates(dates);
}

using Snapshot = std::vector<num::Tensor<float>>;

Snapshot snapshot(ForecastModel<float>& model) {
  Snapshot s;
  for (auto* p : model.parameters()) s.push_back(p->value());
  return s;
}

void restore(ForecastModel<float>& model, const Snapshot& s) {
  const auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->mutable_value() = s[i];
}

// Series without any window are left out of the report.
MetricsReport score(data::Split split, std::span<const PreparedSeries> series, std::span<const WindowRef> windows,
                    std::size_t length, std::span<const double> predictions) {
  std::vector<double> se(series.size(), 0.0), ae(series.size(), 0.0);
  std::vector<std::size_t> n(series.size(), 0);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    const double err = predictions[i] - series[w.series].raw[w.start + length];
    se[w.series] += err * err;
    ae[w.series] += std::abs(err);
    n[w.series] += 1;
  }
  std::vector<SeriesMetrics> rows;
  for (std::size_t s = 0; s < series.size(); ++s) {
    if (n[s] == 0) continue;
    const double count = static_cast<double>(n[s]);
    rows.push_back({series[s].name, std::sqrt(se[s] / count), ae[s] / count, n[s]});
  }
  if (rows.empty()) {
    throw InputError("no " + std::string(data::split_name(split)) + " windows of length " + std::to_string(length));
  }
  return summarize(std::string(data::split_name(split)), std::move(rows));
}

}  // namespace

std::vector<double> predict(const ForecastModel<float>& model, std::span<const PreparedSeries> series,
                            std::span<const WindowRef> windows, const semantic::EmbeddingTable& table) {
  num::NoGradGuard no_grad;
  num::CheckedModeGuard checked(model.config().checked);
  const std::size_t length = model.config().window;
  std::vector<double> out;
  out.reserve(windows.size());
  for (std::size_t begin = 0; begin < windows.size(); begin += kPredictChunk) {
    const auto chunk = windows.subspan(begin, std::min(kPredictChunk, windows.size() - begin));
    const auto batch = data::assemble_batch(series, chunk, length);
    const auto pred = model.forward(batch, table);
    const auto& v = pred.value();
    for (std::size_t b = 0; b < batch.batch; ++b) {
      out.push_back(batch.scalers[b].invert(static_cast<double>(v[b * length + length - 1])));
    }
  }
  return out;
}

TrainResult train(const TrainConfig& config, const std::vector<data::SeriesRecord>& datasets,
                  const semantic::EmbeddingTable& table, const std::string& embedding_source) {
  config.validate();
  num::CheckedModeGuard checked(config.checked);
  const auto series = prepare_all(datasets, config.split);
  std::vector<std::string> names;
  std::map<std::string, data::Scaler> scalers;
  for (const auto& s : series) {
    names.push_back(s.name);
    scalers[s.name] = s.scaler;
  }
  const auto windows = data::collect_windows(series, data::Split::train, config.window, config.stride);
  if (windows.empty()) {
    throw InputError("no training windows: every training range is shorter than window + 1 (" +
                     std::to_string(config.window + 1) + ")");
  }
  std::vector<WindowRef> val_windows;
  if (config.eval_every > 0) {
    val_windows = data::collect_windows(series, data::Split::val, config.window, 1);
    if (val_windows.empty()) throw InputError("validation is enabled but the val split has no windows");
  }

  auto result = std::make_shared<TrainResult>(TrainResult{
      TrainedModel{ForecastModel<float>(config, training_ranges(series), names), scalers,
                   EmbeddingInfo::describe(table, embedding_source, names), 0},
      {},
      {},
      0});
  auto& model = result->trained.model;
  const auto params = model.trainable_parameters();
  auto state = make_adam_state<float>(params);
  const AdamConfig adam{config.lr, config.beta1, config.beta2, config.eps};
  num::Rng sampler(num::derive_seed(config.seed, "train.sampler"));
  temporal::ExtrapolationCounter counter;

  double best_rmse = std::numeric_limits<double>::infinity();
  Snapshot best;
  std::size_t since_best = 0;

  std::vector<WindowRef> refs(config.batch);
  for (std::size_t step = 1; step <= config.steps; ++step) {
    const auto abort = [&](const std::string& why) {
      result->extrapolated = counter.count;
      throw TrainingAborted("training aborted at step " + std::to_string(step) + ": " + why, result);
    };
    for (auto& r : refs) r = windows[sampler.index(windows.size())];
    const auto batch = data::assemble_batch(series, refs, config.window);
    for (auto* p : params) p->zero_grad();

    double loss_value = 0.0;
    try {
      const auto loss = model.loss(batch, table, &counter);
      loss_value = static_cast<double>(loss.value().item());
      if (!std::isfinite(loss_value)) abort("loss is not finite");
      if (loss_value > kDivergenceLoss) abort("loss " + num::to_shortest(loss_value) + " diverged");
      num::reverse_accumulate(loss);
    } catch (const NumericError& e) {
      abort(e.what());
    }
    const double grad_norm = global_grad_norm<float>(params);
    if (!std::isfinite(grad_norm)) abort("gradient norm is not finite");
    if (std::isfinite(config.clip_norm)) clip_gradients<float>(params, config.clip_norm);
    adam_step<float>(params, state, adam);
    result->log.push_back({step, loss_value, grad_norm});
    result->trained.steps_completed = step;

    if (config.eval_every > 0 && step % config.eval_every == 0) {
      const auto preds = predict(model, series, val_windows, table);
      const double rmse = score(data::Split::val, series, val_windows, config.window, preds).average_rmse;
      result->validation.push_back({step, rmse});
      if (rmse < best_rmse) {
        best_rmse = rmse;
        best = snapshot(model);
        since_best = 0;
      } else if (++since_best >= config.patience && config.early_stopping) {
        break;
      }
    }
  }
  if (config.early_stopping && !best.empty()) restore(model, best);
  result->extrapolated = counter.count;
  return std::move(*result);
}

MetricsReport evaluate(const TrainedModel& trained, const std::vector<data::SeriesRecord>& datasets,
                       data::Split split, const semantic::EmbeddingTable& table) {
  const auto& config = trained.model.config();
  std::vector<PreparedSeries> series;
  for (const auto& rec : datasets) {
    const auto it = trained.scalers.find(rec.name);
    if (it == trained.scalers.end()) {
      throw InputError("series '" + rec.name + "' is not in the checkpoint's scaler table");
    }
    series.push_back(data::prepare_series(rec, config.split, it->second));
  }
  const auto windows = data::collect_windows(series, split, config.window, 1);
  const auto preds = predict(trained.model, series, windows, table);
  return score(split, series, windows, config.window, preds);
}

MetricsReport zero_shot_eval(const TrainedModel& trained, const data::SeriesRecord& unseen,
                             const semantic::EmbeddingTable& table) {
  const auto& config = trained.model.config();
  const auto& seen = trained.model.training_names();
  if (std::find(seen.begin(), seen.end(), unseen.name) != seen.end()) {
    throw InputError("series '" + unseen.name + "' was part of training; zero-shot needs an unseen name");
  }
  if (unseen.size() < config.window + 2) {
    throw InputError("series '" + unseen.name + "' has " + std::to_string(unseen.size()) +
                     " observations; zero-shot needs at least window + 2 = " + std::to_string(config.window + 2));
  }
  const std::vector<PreparedSeries> series{data::prepare_unseen_series(unseen, config.split)};
  const auto windows = data::collect_windows(series, data::Split::test, config.window, 1);
  const auto preds = predict(trained.model, series, windows, table);
  return score(data::Split::test, series, windows, config.window, preds);
}

MetricsReport persistence_baseline(const std::vector<data::SeriesRecord>& datasets, const data::SplitSpec& split,
                                   std::size_t window, data::Split which) {
  const auto series = prepare_all(datasets, split);
  const auto windows = data::collect_windows(series, which, window, 1);
  std::vector<double> preds;
  preds.reserve(windows.size());
  for (const auto& w : windows) preds.push_back(series[w.series].raw[w.start + window - 1]);
  return score(which, series, windows, window, preds);
}

std::vector<AblationRun> run_ablation_suite(const TrainConfig& config,
                                            const std::vector<data::SeriesRecord>& datasets,
                                            const semantic::EmbeddingTable& table,
                                            const std::string& embedding_source) {
  std::vector<AblationRun> runs;
  for (Variant v : kAllVariants) {
    auto c = config;
    c.variant = v;
    auto result = train(c, datasets, table, embedding_source);
    auto test = evaluate(result.trained, datasets, data::Split::test, table);
    runs.push_back({v, std::move(result), std::move(test)});
  }
  return runs;
}

std::vector<SweepRow> elastic_context_sweep(const TrainConfig& config,
                                            const std::vector<data::SeriesRecord>& datasets,
                                            const semantic::EmbeddingTable& table,
                                            std::span<const std::size_t> windows,
                                            const std::string& embedding_source) {
  std::vector<SweepRow> rows;
  for (std::size_t length : windows) {
    auto c = config;
    c.window = length;
    c.ssm.window_hint = length;
    SweepRow row;
    row.window = length;
    row.config_hash = config_hash(c.to_key_values());
    bool fits = length > 0;
    for (const auto& rec : datasets) {
      const auto r = data::chronological_split(rec.size(), c.split, rec.name);
      fits = fits && r.train.size() > length && r.test.size() > length &&
             (c.eval_every == 0 || r.val.size() > length);
    }
    if (!fits) {
      warn("window " + std::to_string(length) + " does not fit every series' splits; skipped");
      row.skipped = true;
      rows.push_back(std::move(row));
      continue;
    }
    auto result = train(c, datasets, table, embedding_source);
    row.test = evaluate(result.trained, datasets, data::Split::test, table);
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

}  // namespace

void write_step_log(const std::vector<StepRecord>& log, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "step\tloss\tgrad_norm\n";
  for (const auto& r : log) out << r.step << '\t' << num::to_shortest(r.loss) << '\t' << num::to_shortest(r.grad_norm) << '\n';
}

void write_metrics_tsv(const MetricsReport& report, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "series\trmse\tmae\tn\n";
  for (const auto& s : report.series) {
    out << s.series << '\t' << num::to_shortest(s.rmse) << '\t' << num::to_shortest(s.mae) << '\t' << s.n << '\n';
  }
  out << "average\t" << num::to_shortest(report.average_rmse) << '\t' << num::to_shortest(report.average_mae) << '\t'
      << report.total << '\n';
}

void write_sweep_tsv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "window\trmse\tmae\tn\tconfig_hash\tstatus\n";
  for (const auto& r : rows) {
    out << r.window << '\t';
    if (r.skipped) {
      out << "\t\t0\t" << r.config_hash << "\tskipped\n";
    } else {
      out << num::to_shortest(r.test.average_rmse) << '\t' << num::to_shortest(r.test.average_mae) << '\t'
          << r.test.total << '\t' << r.config_hash << "\tok\n";
    }
  }
}

}  // namespace ssmamba::train
