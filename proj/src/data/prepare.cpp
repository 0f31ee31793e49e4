#include "ssmamba/data/prepare.hpp"

#include <cmath>
#include <numbers>

#include "ssmamba/errors.hpp"
#include "ssmamba/log.hpp"
#include "ssmamba/num/rng.hpp"

namespace ssmamba::data {

namespace {

std::string label(std::string_view series) {
  return series.empty() ? std::string("series") : "series '" + std::string(series) + "'";
}

}  // namespace

void SplitSpec::validate() const {
  for (double f : {train, val, test}) {
    if (!(f > 0.0) || !(f < 1.0)) throw ConfigError("split fractions must lie in (0, 1)");
  }
  if (std::abs(train + val + test - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
}

std::string_view split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw ConfigError("unknown split '" + std::string(name) + "' (expected train, val or test)");
}

const IndexRange& SplitRanges::operator[](Split s) const {
  switch (s) {
    case Split::train: return train;
    case Split::val: return val;
    case Split::test: return test;
  }
  throw ContractViolation("bad split");
}

SplitRanges chronological_split(std::size_t n, const SplitSpec& spec, std::string_view series) {
  spec.validate();
  // The small epsilon keeps exact products such as 0.9 * 10 from flooring
  // to 8 through representation error.
  const auto boundary = [n](double frac) {
    return std::min(n, static_cast<std::size_t>(std::floor(static_cast<double>(n) * frac + 1e-9)));
  };
  const std::size_t a = boundary(spec.train);
  const std::size_t b = std::max(a, boundary(spec.train + spec.val));
  SplitRanges r{{0, a}, {a, b}, {b, n}};
  for (Split s : {Split::train, Split::val, Split::test}) {
    if (r[s].size() == 0) {
      throw InputError(label(series) + " with " + std::to_string(n) + " observations leaves the " +
                       std::string(split_name(s)) + " split empty");
    }
  }
  return r;
}

Scaler fit_scaler(std::span<const double> values, std::string_view series) {
  if (values.empty()) throw InputError(label(series) + ": cannot fit a scaler on no data");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size()));
  if (!(sd >= 1e-12)) {
    throw InputError(label(series) + " is constant over its training range (std " + std::to_string(sd) + ")");
  }
  return {mean, sd};
}

std::vector<std::size_t> window_starts(const IndexRange& range, std::size_t length, std::size_t stride,
                                       std::string_view series) {
  if (length == 0 || stride == 0) throw ContractViolation("window length and stride must be positive");
  std::vector<std::size_t> out;
  if (range.size() <= length) {
    warn(label(series) + ": range of " + std::to_string(range.size()) + " observations is too short for window " +
         std::to_string(length));
    return out;
  }
  for (std::size_t s = range.begin; s + length < range.end; s += stride) out.push_back(s);
  return out;
}

namespace {

PreparedSeries prepare_with(const SeriesRecord& record, const SplitSpec& spec, bool unseen,
                            const Scaler* fixed = nullptr) {
  record.validate();
  PreparedSeries p;
  p.name = record.name;
  p.dates = record.dates();
  p.raw = record.values();
  p.ranges = chronological_split(p.raw.size(), spec, record.name);
  const std::size_t fit_end = unseen ? p.ranges.test.begin : p.ranges.train.end;
  p.scaler = fixed ? *fixed : fit_scaler(std::span<const double>(p.raw).first(fit_end), record.name);
  p.standardized.reserve(p.raw.size());
  for (double v : p.raw) p.standardized.push_back(p.scaler.apply(v));
  return p;
}

}  // namespace

PreparedSeries prepare_series(const SeriesRecord& record, const SplitSpec& spec) {
  return prepare_with(record, spec, false);
}

PreparedSeries prepare_series(const SeriesRecord& record, const SplitSpec& spec, const Scaler& scaler) {
  return prepare_with(record, spec, false, &scaler);
}

PreparedSeries prepare_unseen_series(const SeriesRecord& record, const SplitSpec& spec) {
  return prepare_with(record, spec, true);
}

std::vector<WindowRef> collect_windows(std::span<const PreparedSeries> series, Split split, std::size_t length,
                                       std::size_t stride) {
  std::vector<WindowRef> out;
  for (std::size_t i = 0; i < series.size(); ++i) {
    for (std::size_t s : window_starts(series[i].ranges[split], length, stride, series[i].name)) {
      out.push_back({i, s});
    }
  }
  return out;
}

WindowBatch assemble_batch(std::span<const PreparedSeries> series, std::span<const WindowRef> refs,
                           std::size_t length) {
  WindowBatch b;
  b.batch = refs.size();
  b.length = length;
  b.inputs.reserve(refs.size() * length);
  b.dates.reserve(refs.size() * length);
  for (const auto& r : refs) {
    if (r.series >= series.size()) throw ContractViolation("window refers to a missing series");
    const auto& s = series[r.series];
    if (r.start + length >= s.raw.size()) throw ContractViolation("window runs past the end of " + s.name);
    for (std::size_t l = 0; l < length; ++l) {
      b.inputs.push_back(s.standardized[r.start + l]);
      b.dates.push_back(s.dates[r.start + l]);
    }
    b.targets.push_back(s.standardized[r.start + length]);
    b.names.push_back(s.name);
    b.scalers.push_back(s.scaler);
    b.raw_targets.push_back(s.raw[r.start + length]);
    b.raw_last.push_back(s.raw[r.start + length - 1]);
  }
  return b;
}

std::string_view synth_kind_name(SynthKind k) {
  switch (k) {
    case SynthKind::sine_trend: return "sine+trend";
    case SynthKind::two_season: return "two-season";
    case SynthKind::random_walk: return "random-walk";
  }
  return "?";
}

SynthKind parse_synth_kind(std::string_view name) {
  if (name == "sine+trend" || name == "sine-trend") return SynthKind::sine_trend;
  if (name == "two-season") return SynthKind::two_season;
  if (name == "random-walk") return SynthKind::random_walk;
  throw ConfigError("unknown generator '" + std::string(name) + "' (expected sine+trend, two-season, random-walk)");
}

double synth_mean(SynthKind kind, std::size_t t) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double x = static_cast<double>(t);
  switch (kind) {
    case SynthKind::sine_trend: return 10.0 + 0.002 * x + std::sin(two_pi * x / 365.25);
    case SynthKind::two_season: return 5.0 + 0.5 * std::sin(two_pi * x / 7.0) + std::sin(two_pi * x / 91.0);
    case SynthKind::random_walk: return 100.0;
  }
  return 0.0;
}

SeriesRecord synth_series(const SynthOptions& o) {
  if (o.length < kMinSynthLength) {
    throw ConfigError("synthetic series need at least " + std::to_string(kMinSynthLength) + " observations");
  }
  if (!(o.noise >= 0.0) || !std::isfinite(o.noise)) throw ConfigError("noise must be finite and non-negative");
  if (o.start.ordinal() + static_cast<std::int64_t>(o.length) - 1 > Date::kMaxOrdinal) {
    throw ConfigError("synthetic series would run past the supported date range");
  }
  num::Rng rng(num::derive_seed(o.seed, "synth"));
  SeriesRecord rec;
  rec.name = o.name;
  rec.observations.reserve(o.length);
  Date d = o.start;
  double level = synth_mean(SynthKind::random_walk, 0);
  for (std::size_t t = 0; t < o.length; ++t, d = d.next()) {
    const double eps = rng.normal();
    double v;
    if (o.kind == SynthKind::random_walk) {
      if (t > 0) level += o.noise * eps;
      v = level;
    } else {
      v = synth_mean(o.kind, t) + o.noise * eps;
    }
    rec.observations.push_back({d, v});
  }
  return rec;
}

}  // namespace ssmamba::data
