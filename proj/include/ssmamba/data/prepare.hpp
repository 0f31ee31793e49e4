#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ssmamba/data/series.hpp"

namespace ssmamba::data {

struct SplitSpec {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;

  // Fractions must be positive and sum to 1 (within 1e-9). ConfigError otherwise.
  void validate() const;
};

enum class Split { train, val, test };
std::string_view split_name(Split s);
Split parse_split(std::string_view name);

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool operator==(const IndexRange&) const = default;
};

struct SplitRanges {
  IndexRange train, val, test;
  const IndexRange& operator[](Split s) const;
};

// Contiguous chronological partition. Boundaries are floor(n * cumulative
// fraction). An empty part is an InputError naming `series`.
SplitRanges chronological_split(std::size_t n, const SplitSpec& spec, std::string_view series = {});

struct Scaler {
  double mean = 0.0;
  double std = 1.0;
  double apply(double v) const { return (v - mean) / std; }
  double invert(double z) const { return z * std + mean; }
  bool operator==(const Scaler&) const = default;
};

// Mean and population standard deviation. A (near) constant input is an
// InputError since standardizing would divide by zero.
Scaler fit_scaler(std::span<const double> values, std::string_view series = {});

// Start indices of windows whose inputs [s, s+L) and target s+L all fall in
// `range`. With stride 1 there are range.size() - L of them. Ranges shorter
// than L+1 yield none (and a warning).
std::vector<std::size_t> window_starts(const IndexRange& range, std::size_t length, std::size_t stride = 1,
                                       std::string_view series = {});

// A series ready for windowing: split, scaler fitted on the training range
// only, and every value standardized with that scaler.
struct PreparedSeries {
  std::string name;
  std::vector<Date> dates;
  std::vector<double> raw;
  std::vector<double> standardized;
  SplitRanges ranges;
  Scaler scaler;
};

PreparedSeries prepare_series(const SeriesRecord& record, const SplitSpec& spec);
// Same split, but standardized with a scaler fitted elsewhere (a checkpoint's).
PreparedSeries prepare_series(const SeriesRecord& record, const SplitSpec& spec, const Scaler& scaler);
// Zero-shot variant: split as usual, but the scaler is fitted on everything
// before the test range.
PreparedSeries prepare_unseen_series(const SeriesRecord& record, const SplitSpec& spec);

struct WindowRef {
  std::size_t series = 0;
  std::size_t start = 0;
  bool operator==(const WindowRef&) const = default;
};

std::vector<WindowRef> collect_windows(std::span<const PreparedSeries> series, Split split, std::size_t length,
                                       std::size_t stride = 1);

// Row-major [batch, length] standardized inputs, per-row standardized
// target, input dates, and the bookkeeping needed to map back to original
// units.
struct WindowBatch {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<double> inputs;
  std::vector<double> targets;
  std::vector<Date> dates;
  std::vector<std::string> names;
  std::vector<Scaler> scalers;
  std::vector<double> raw_targets;
  std::vector<double> raw_last;
};

WindowBatch assemble_batch(std::span<const PreparedSeries> series, std::span<const WindowRef> refs,
                           std::size_t length);

enum class SynthKind { sine_trend, two_season, random_walk };
std::string_view synth_kind_name(SynthKind k);
SynthKind parse_synth_kind(std::string_view name);

struct SynthOptions {
  SynthKind kind = SynthKind::sine_trend;
  std::size_t length = 1000;
  std::uint64_t seed = 0;
  std::string name = "synthetic";
  // Observation noise for sine_trend / two_season; step size for random_walk.
  double noise = 0.05;
  Date start = Date::from_ymd(2000, 1, 1);
};

inline constexpr std::size_t kMinSynthLength = 200;

// Daily series. sine_trend: 10 + 0.002 t + sin(2 pi t / 365.25).
// two_season: 5 + 0.5 sin(2 pi t / 7) + sin(2 pi t / 91). random_walk
// starts at 100 with N(0, noise^2) steps.
SeriesRecord synth_series(const SynthOptions& options);
// Noise-free value at step t (random_walk has none; returns its start level).
double synth_mean(SynthKind kind, std::size_t t);

}  // namespace ssmamba::data
