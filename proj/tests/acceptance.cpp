// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "ssmamba/log.hpp"
#include "ssmamba/num/gradcheck.hpp"
#include "ssmamba/num/ops.hpp"
#include "ssmamba/ssm/backbone.hpp"
#include "ssmamba/temporal/bspline.hpp"
#include "ssmamba/temporal/kan.hpp"
#include "ssmamba/train/trainer.hpp"
#include "support.hpp"

using namespace ssmamba;
using num::ParamLeaf;
using num::Tensor;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

template <class T>
bool bitwise_equal(const Tensor<T>& a, const Tensor<T>& b) {
  return a.shape() == b.shape() && std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(T)) == 0;
}

temporal::DescriptorGrid grid_from(temporal::Date first, std::size_t batch, std::size_t length, int stride) {
  temporal::DescriptorGrid g{batch, length, {}};
  for (std::size_t b = 0; b < batch; ++b) {
    auto d = first;
    for (std::size_t i = 0; i < b * static_cast<std::size_t>(stride); ++i) d = d.next();
    for (std::size_t l = 0; l < length; ++l, d = d.next()) g.cells.push_back(temporal::calendar_descriptor(d));
  }
  return g;
}

// ---------------------------------------------------------------------------
// Gradients

constexpr std::uint64_t kGradSeeds = 20;

struct GradTally {
  std::size_t checks = 0, failures = 0;
  double worst = 0;
  std::string first_failure;

  void add(const std::string& module, std::uint64_t seed, const std::vector<num::GradCheckReport>& reports) {
    for (const auto& r : reports) {
      ++checks;
      worst = std::max(worst, r.max_rel_error);
      if (!r.passed) {
        ++failures;
        if (first_failure.empty()) first_failure = module + " seed " + std::to_string(seed) + " " + r.param_name;
      }
    }
  }
};

Verdict gradient_correctness() {
  const auto t0 = Clock::now();
  GradTally tally;
  const std::vector<temporal::Date> span_dates{temporal::Date::parse("2018-01-01"), temporal::Date::parse("2020-12-31")};
  const auto ranges = temporal::NormalizationRanges::from_dates(span_dates);
  const std::vector<data::SeriesRecord> recs{
      data::synth_series({data::SynthKind::sine_trend, 240, 1, "alpha", 0.05}),
      data::synth_series({data::SynthKind::two_season, 220, 2, "beta", 0.05})};
  std::vector<data::PreparedSeries> prepared;
  for (const auto& r : recs) prepared.push_back(data::prepare_series(r, {}));

  for (std::uint64_t seed = 0; seed < kGradSeeds; ++seed) {
    num::Rng rng(seed + 1000);

    temporal::KanConfig kcfg;
    kcfg.degree = 1 + static_cast<int>(seed % 3);
    kcfg.basis_count = 4 + static_cast<int>(seed % 5);
    kcfg.activation = seed % 2 ? temporal::Activation::identity : temporal::Activation::tanh;
    auto kan = temporal::make_kan_params<double>(kcfg, 5, ranges, seed);
    std::vector<ParamLeaf<double>*> kan_leaves;
    kan.collect(kan_leaves);
    support::perturb<double>(kan_leaves, seed + 1, 0.2);
    const auto grid = grid_from(temporal::Date::parse("2019-02-20"), 2, 6, 17);
    const auto kan_w = num::random_uniform<double>({2, 6, 5}, -1, 1, seed + 2);
    tally.add("kan", seed, num::check_gradients(
                               [&] { return num::sum(num::mul(temporal::kan_forward(grid, kan, 6), num::constant(kan_w))); },
                               kan_leaves));

    semantic::EmbeddingTable table(12);
    std::vector<float> row(12);
    for (auto& v : row) v = static_cast<float>(rng.normal());
    table.insert("alpha", row);
    auto proj = semantic::make_index_projection<double>(5, 12, seed);
    std::vector<ParamLeaf<double>*> proj_leaves;
    proj.collect(proj_leaves);
    support::perturb<double>(proj_leaves, seed + 3, 0.1);
    const std::vector<std::string> names{"alpha", "unseen"};
    const auto proj_w = num::random_uniform<double>({2, 5}, -1, 1, seed + 4);
    tally.add("projection", seed,
              num::check_gradients(
                  [&] {
                    return num::sum(num::mul(num::tanh(semantic::embed_batch(names, table, proj)),
                                             num::constant(proj_w)));
                  },
                  proj_leaves));

    ssm::SsmConfig scfg;
    scfg.state_size = 4;
    scfg.channels = 3;
    scfg.window_hint = 8;
    auto ssm_params = ssm::make_ssm_params<double>(scfg, seed);
    std::vector<ParamLeaf<double>*> ssm_leaves;
    ssm_params.collect(ssm_leaves);
    support::perturb<double>(ssm_leaves, seed + 5, 0.2);
    ParamLeaf<double> e("e", num::random_uniform<double>({2, 4}, -0.5, 0.5, seed + 6));
    ParamLeaf<double> k("k", num::random_uniform<double>({2, 7, 4}, -0.5, 0.5, seed + 7));
    ssm_leaves.push_back(&e);
    ssm_leaves.push_back(&k);
    const auto values = num::random_uniform<double>({2, 7}, -1.5, 1.5, seed + 8);
    const auto targets = num::random_uniform<double>({2, 7}, -1.5, 1.5, seed + 9);
    tally.add("ssm", seed, num::check_gradients(
                               [&] {
                                 return num::mean(num::square(num::sub(ssm::forward(values, e.var(), k.var(), ssm_params),
                                                                       num::constant(targets))));
                               },
                               ssm_leaves));

    train::TrainConfig mcfg;
    mcfg.window = 6;
    mcfg.seed = seed;
    mcfg.variant = train::kAllVariants[seed % 4];
    mcfg.semantic_residual = seed % 3 == 0;
    mcfg.loss = seed % 2 ? train::LossPositions::all : train::LossPositions::last;
    mcfg.ssm.state_size = 5;
    mcfg.ssm.channels = 3;
    mcfg.ssm.window_hint = 6;
    mcfg.kan.basis_count = 5;
    mcfg.embedding_dim = 12;
    std::vector<temporal::Date> dates;
    for (const auto& p : prepared) dates.insert(dates.end(), p.dates.begin(), p.dates.end());
    train::ForecastModel<double> model(mcfg, temporal::NormalizationRanges::from_dates(dates), {"alpha", "beta"});
    auto model_leaves = model.trainable_parameters();
    support::perturb<double>(model_leaves, seed + 10, 0.1);
    const auto refs = data::collect_windows(prepared, data::Split::train, 6);
    std::vector<data::WindowRef> picked;
    for (int i = 0; i < 4; ++i) picked.push_back(refs[rng.index(refs.size())]);
    const auto batch = data::assemble_batch(prepared, picked, 6);
    tally.add("model/" + std::string(train::variant_name(mcfg.variant)), seed,
              num::check_gradients([&] { return model.loss(batch, table); }, model_leaves));
  }
  const double elapsed = seconds_since(t0);
  Verdict v;
  v.pass = tally.failures == 0 && elapsed < 120.0;
  v.detail = std::to_string(tally.checks) + " leaf checks over " + std::to_string(kGradSeeds) +
             " seeds, max rel err " + fmt(tally.worst) + ", " + fmt(elapsed) + " s";
  if (!tally.first_failure.empty()) v.detail += "; first failure: " + tally.first_failure;
  return v;
}

// ---------------------------------------------------------------------------
// B-splines

Verdict partition_of_unity() {
  double worst_sum = 0, worst_ref = 0;
  for (int m = 1; m <= 3; ++m) {
    for (int r : {4, 8, 16}) {
      const auto knots = temporal::clamped_uniform_knots(m, r);
      num::Rng rng(static_cast<std::uint64_t>(m * 100 + r));
      std::vector<double> basis(static_cast<std::size_t>(r));
      for (int i = 0; i < 1000; ++i) {
        double x = rng.uniform();
        while (x == 0.0) x = rng.uniform();
        temporal::bspline_basis(x, m, knots, basis);
        double s = 0;
        for (int q = 0; q < r; ++q) {
          s += basis[q];
          worst_ref = std::max(worst_ref, std::abs(basis[q] - support::cox_de_boor(q, m, x, knots)));
        }
        worst_sum = std::max(worst_sum, std::abs(s - 1.0));
      }
    }
  }
  return {worst_sum <= 1e-9 && worst_ref <= 1e-9,
          "max |sum - 1| " + fmt(worst_sum) + ", max |B - Cox-de Boor| " + fmt(worst_ref)};
}

// ---------------------------------------------------------------------------
// Scan

Verdict scan_oracle() {
  num::Rng rng(2024);
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t batch = 1 + rng.index(2), length = 1 + rng.index(128), n = 1 + rng.index(32),
                      d = 1 + rng.index(8);
    const std::uint64_t s = 5000 + 4 * static_cast<std::uint64_t>(trial);
    const auto a = num::random_uniform<double>({batch, length, n}, 0.0, 1.0, s);
    const auto b = num::random_uniform<double>({batch, length, n}, -1.0, 1.0, s + 1);
    const auto c = num::random_uniform<double>({batch, length, n}, -1.0, 1.0, s + 2);
    const auto x = num::random_uniform<double>({batch, length, d}, -1.0, 1.0, s + 3);
    const auto y =
        ssm::selective_scan(num::constant(a), num::constant(b), num::constant(c), num::constant(x)).y.value();
    // Naive recurrence, one channel at a time.
    for (std::size_t bi = 0; bi < batch; ++bi) {
      for (std::size_t ch = 0; ch < d; ++ch) {
        std::vector<double> h(n, 0.0);
        for (std::size_t l = 0; l < length; ++l) {
          const std::size_t row = (bi * length + l) * n;
          double out = 0;
          for (std::size_t i = 0; i < n; ++i) {
            h[i] = a[row + i] * h[i] + b[row + i] * x[(bi * length + l) * d + ch];
            out += c[row + i] * h[i];
          }
          worst = std::max(worst, std::abs(out - y[(bi * length + l) * d + ch]));
        }
      }
    }
  }
  return {worst <= 1e-6, "200 instances, max abs err " + fmt(worst)};
}

// ---------------------------------------------------------------------------
// Linear time and memory

struct ScanCost {
  double seconds;
  std::size_t peak_bytes;
};

// Forward and backward through gates, discretization and scan of one layer.
ScanCost scan_cost(std::size_t length) {
  constexpr std::size_t kBatch = 4;
  ssm::SsmConfig cfg;
  cfg.state_size = 32;
  cfg.channels = 8;
  auto params = ssm::make_ssm_params<float>(cfg, 1);
  const auto x = num::random_uniform<float>({kBatch, length, cfg.channels}, -1, 1, 9);
  const auto live = num::memory_stats().live_bytes;
  num::reset_peak_memory();
  const auto t0 = Clock::now();
  {
    const auto xv = num::constant(x);
    const auto g = ssm::compute_gates(xv, params.layers[0]);
    const auto d = ssm::discretize(g.delta, ssm::transition(params.layers[0]), g.b);
    const auto y = ssm::selective_scan(d.a_bar, d.b_bar, g.c, xv).y;
    num::reverse_accumulate(num::sum(y));
  }
  const double s = seconds_since(t0);
  const auto peak = num::memory_stats().peak_bytes - live;
  std::vector<ParamLeaf<float>*> leaves;
  params.collect(leaves);
  for (auto* p : leaves) p->zero_grad();
  return {s, peak};
}

Verdict linear_time() {
  scan_cost(512);  // warm-up
  std::vector<double> t2048, t4096;
  for (int rep = 0; rep < 7; ++rep) {
    t2048.push_back(scan_cost(2048).seconds);
    t4096.push_back(scan_cost(4096).seconds);
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const double ratio = median(t4096) / median(t2048);

  // Least-squares line through peak bytes; every point must sit within 1.2x
  // of the fit and the doubling ratio within 2 x 1.2.
  const std::vector<std::size_t> lengths{512, 1024, 2048, 4096};
  std::vector<double> peaks;
  for (auto l : lengths) peaks.push_back(static_cast<double>(scan_cost(l).peak_bytes));
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    mx += static_cast<double>(lengths[i]) / 4;
    my += peaks[i] / 4;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    sxy += (static_cast<double>(lengths[i]) - mx) * (peaks[i] - my);
    sxx += (static_cast<double>(lengths[i]) - mx) * (static_cast<double>(lengths[i]) - mx);
  }
  const double slope = sxy / sxx, intercept = my - slope * mx;
  double worst_fit = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i)
    worst_fit = std::max(worst_fit, peaks[i] / (intercept + slope * static_cast<double>(lengths[i])));
  const double mem_ratio = peaks[3] / peaks[2];
  return {ratio < 2.5 && worst_fit <= 1.2 && mem_ratio <= 2.4,
          "time ratio 4096/2048 " + fmt(ratio) + " (medians " + fmt(median(t2048)) + " s, " + fmt(median(t4096)) +
              " s); peak/fit max " + fmt(worst_fit) + ", peak ratio " + fmt(mem_ratio)};
}

// ---------------------------------------------------------------------------
// Context identity

Verdict context_identity() {
  bool ok = true;
  std::string why;
  const std::vector<data::SeriesRecord> recs{data::synth_series({data::SynthKind::sine_trend, 400, 3, "alpha", 0.05})};
  std::vector<data::PreparedSeries> prepared{data::prepare_series(recs[0], {})};
  const auto refs = data::collect_windows(prepared, data::Split::train, 30);
  const std::vector<data::WindowRef> picked(refs.begin(), refs.begin() + 16);
  const auto batch = data::assemble_batch(prepared, picked, 30);
  const semantic::EmbeddingTable table(32);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    train::TrainConfig cfg;
    cfg.window = 30;
    cfg.seed = seed;
    cfg.embedding_dim = 32;
    cfg.ssm.state_size = 16;
    cfg.ssm.channels = 4;
    cfg.ssm.layers = 1 + seed % 2;
    cfg.ssm.e_scale = 0.0;
    cfg.ssm.k_scale = 0.0;
    train::ForecastModel<float> model(cfg, temporal::NormalizationRanges::from_dates(prepared[0].dates), {"alpha"});
    auto leaves = model.parameters();
    support::perturb<float>(leaves, seed + 1, 0.3);
    const auto composed = model.forward(batch, table).value();
    Tensor<float> values({batch.batch, batch.length});
    for (std::size_t i = 0; i < batch.inputs.size(); ++i) values[i] = static_cast<float>(batch.inputs[i]);
    const auto plain = ssm::forward<float>(values, {}, {}, model.backbone()).value();
    if (!bitwise_equal(composed, plain)) {
      ok = false;
      why = "zero scales differ from plain backbone (seed " + std::to_string(seed) + ")";
    }

    const auto b_bar = num::constant(num::random_normal<float>({3, 9, 16}, 1.0, seed + 2));
    const auto zero_e = num::constant(Tensor<float>({3, 16}));
    const auto zero_k = num::constant(Tensor<float>({3, 9, 16}));
    for (float scale : {1.0f, 0.5f, 3.0f}) {
      if (!bitwise_equal(ssm::inject_context(b_bar, zero_e, zero_k, scale, scale).value(), b_bar.value())) {
        ok = false;
        why = "inject_context with zero context changed b_bar";
      }
    }
  }
  return {ok, ok ? "5 seeds, layers 1 and 2: bitwise identical" : why};
}

// ---------------------------------------------------------------------------
// Learning sanity

double mse_over_windows(const train::ForecastModel<float>& model, const std::vector<data::PreparedSeries>& prepared,
                        data::Split split, std::size_t window, const semantic::EmbeddingTable& table) {
  num::NoGradGuard guard;
  const auto refs = data::collect_windows(prepared, split, window);
  const auto batch = data::assemble_batch(prepared, refs, window);
  return static_cast<double>(model.loss(batch, table).value().item());
}

// RMSE of x_hat[t+1] = x[t] on the noiseless generator, straight from its
// closed form, over the targets of the given split.
double generator_persistence_rmse(const data::SplitRanges& ranges, data::Split split, std::size_t window) {
  const auto& r = split == data::Split::train ? ranges.train : split == data::Split::val ? ranges.val : ranges.test;
  double se = 0;
  std::size_t n = 0;
  for (std::size_t t = r.begin + window; t < r.end; ++t, ++n) {
    const double e = data::synth_mean(data::SynthKind::sine_trend, t) - data::synth_mean(data::SynthKind::sine_trend, t - 1);
    se += e * e;
  }
  return std::sqrt(se / static_cast<double>(n));
}

Verdict learning_sanity() {
  const auto t0 = Clock::now();
  const std::vector<data::SeriesRecord> recs{data::synth_series({data::SynthKind::sine_trend, 1000, 0, "sine", 0.0})};
  train::TrainConfig cfg;  // defaults: window 60, 2000 steps
  const semantic::EmbeddingTable table(cfg.embedding_dim, cfg.fallback_seed);
  const std::vector<data::PreparedSeries> prepared{data::prepare_series(recs[0], cfg.split)};
  std::vector<temporal::Date> train_dates(prepared[0].dates.begin(),
                                          prepared[0].dates.begin() + static_cast<std::ptrdiff_t>(prepared[0].ranges.train.end));
  const train::ForecastModel<float> initial(cfg, temporal::NormalizationRanges::from_dates(train_dates), {"sine"});
  const double loss0 = mse_over_windows(initial, prepared, data::Split::train, cfg.window, table);

  const auto result = train::train(cfg, recs, table);
  const double loss1 = mse_over_windows(result.trained.model, prepared, data::Split::train, cfg.window, table);
  const auto test = train::evaluate(result.trained, recs, data::Split::test, table);
  const auto persistence = train::persistence_baseline(recs, cfg.split, cfg.window, data::Split::test);
  const double oracle = generator_persistence_rmse(prepared[0].ranges, data::Split::test, cfg.window);
  const double elapsed = seconds_since(t0);

  const bool baseline_consistent = std::abs(persistence.average_rmse - oracle) <= 1e-9 * std::max(1.0, oracle);
  const double reduction = loss0 / loss1;
  const double gain = 1.0 - test.average_rmse / persistence.average_rmse;
  Verdict v;
  v.pass = reduction >= 10.0 && gain >= 0.2 && baseline_consistent && cfg.steps == 2000 && elapsed < 300.0;
  v.detail = "train loss " + fmt(loss0) + " -> " + fmt(loss1) + " (" + fmt(reduction) + "x); test RMSE " +
             fmt(test.average_rmse) + " vs persistence " + fmt(persistence.average_rmse) + " (generator " +
             fmt(oracle) + "), " + fmt(100 * gain) + "% better; " + fmt(elapsed) + " s";
  return v;
}

// ---------------------------------------------------------------------------
// Zero-shot twin

Verdict zero_shot_twin() {
  const auto alpha = data::synth_series({data::SynthKind::sine_trend, 1000, 11, "alpha", 0.05});
  const auto clone = data::synth_series({data::SynthKind::sine_trend, 1000, 12, "alpha-clone", 0.05});
  train::TrainConfig cfg;
  cfg.steps = 1000;
  cfg.embedding_dim = 64;
  semantic::EmbeddingTable table(64);
  num::Rng rng(7);
  std::vector<float> vec(64);
  for (auto& v : vec) v = static_cast<float>(rng.normal());
  table.insert("alpha", vec);
  table.insert("alpha-clone", vec);
  const auto result = train::train(cfg, {alpha}, table, "twin");
  const auto trained = train::evaluate(result.trained, {alpha}, data::Split::test, table);
  const auto zs = train::zero_shot_eval(result.trained, clone, table);
  const double rel = std::abs(zs.average_rmse - trained.average_rmse) / trained.average_rmse;
  return {rel <= 0.2, "trained test RMSE " + fmt(trained.average_rmse) + ", zero-shot " + fmt(zs.average_rmse) +
                          " (" + fmt(100 * rel) + "% apart)"};
}

// ---------------------------------------------------------------------------
// Ablation suite

Verdict ablation_suite() {
  const std::vector<data::SeriesRecord> recs{
      data::synth_series({data::SynthKind::sine_trend, 400, 1, "alpha", 0.05}),
      data::synth_series({data::SynthKind::two_season, 400, 2, "beta", 0.05})};
  train::TrainConfig cfg;
  cfg.window = 30;
  cfg.steps = 150;
  cfg.ssm.state_size = 16;
  cfg.ssm.channels = 8;
  cfg.embedding_dim = 32;
  const semantic::EmbeddingTable table(32);
  const auto runs = train::run_ablation_suite(cfg, recs, table);
  bool ok = runs.size() == 4;
  std::string detail;
  for (std::size_t i = 0; ok && i < runs.size(); ++i) {
    ok = runs[i].variant == train::kAllVariants[i] && runs[i].result.log.size() == cfg.steps &&
         runs[i].result.log[0].loss == runs[0].result.log[0].loss;
    detail += std::string(i ? ", " : "") + std::string(train::variant_name(runs[i].variant)) + " " +
              fmt(runs[i].test.average_rmse);
  }
  if (!ok) return {false, "suite incomplete or data order differs: " + detail};

  // semantic_off: no semantic context is built at all, and zero-shot
  // forecasts are bitwise identical under different names.
  const auto& off = runs[1].result.trained;
  const std::vector<std::string> names{"anything", "else"};
  ok = !off.model.semantic_context(names, table).valid();
  auto unseen = data::synth_series({data::SynthKind::sine_trend, 400, 9, "gamma", 0.05});
  const auto base = train::zero_shot_eval(off, unseen, table);
  const auto prepared = data::prepare_unseen_series(unseen, cfg.split);
  const std::vector<data::PreparedSeries> one{prepared};
  const auto refs = data::collect_windows(one, data::Split::test, cfg.window);
  const auto p0 = train::predict(off.model, one, refs, table);
  for (const char* name : {"delta", "Gold", "", "a much longer name with spaces"}) {
    auto renamed = one;
    renamed[0].name = name;
    if (train::predict(off.model, renamed, refs, table) != p0) ok = false;
    unseen.name = *name ? name : "x";
    const auto r = train::zero_shot_eval(off, unseen, table);
    if (r.average_rmse != base.average_rmse || r.average_mae != base.average_mae) ok = false;
  }
  return {ok, detail + (ok ? "; semantic_off output name-independent" : "; semantic_off output depends on name")};
}

// ---------------------------------------------------------------------------
// Determinism

Verdict determinism() {
  support::TempDir dir("acceptance");
  const std::vector<data::SeriesRecord> recs{
      data::synth_series({data::SynthKind::sine_trend, 500, 4, "alpha", 0.05}),
      data::synth_series({data::SynthKind::random_walk, 500, 5, "beta", 0.05})};
  train::TrainConfig cfg;
  cfg.window = 30;
  cfg.steps = 200;
  cfg.seed = 123;
  cfg.ssm.state_size = 16;
  cfg.ssm.channels = 8;
  cfg.embedding_dim = 32;
  const semantic::EmbeddingTable table(32);
  for (const char* run : {"a", "b"}) {
    const auto r = train::train(cfg, recs, table);
    train::save_checkpoint(r.trained, dir / run);
    train::write_step_log(r.log, dir / run / "steps.tsv");
  }
  bool ok = true;
  for (const char* f : {"manifest.json", "params.bin", "steps.tsv"}) {
    const auto a = slurp(dir / "a" / f), b = slurp(dir / "b" / f);
    ok = ok && !a.empty() && a == b;
  }
  return {ok, ok ? "checkpoint and step log byte-identical" : "runs differ"};
}

// ---------------------------------------------------------------------------
// Leakage

Verdict no_leakage() {
  std::size_t audits = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (auto kind : {data::SynthKind::sine_trend, data::SynthKind::two_season, data::SynthKind::random_walk}) {
      for (const data::SplitSpec& spec : {data::SplitSpec{}, data::SplitSpec{0.6, 0.2, 0.2}}) {
        for (std::size_t window : {7u, 30u, 60u}) {
          const auto rec = data::synth_series({kind, 400 + 37 * seed, seed, "s", 0.1});
          const auto failure = support::leakage_audit(rec, spec, window);
          if (!failure.empty()) return {false, failure};
          ++audits;
        }
      }
    }
  }
  return {true, std::to_string(audits) + " recomputation audits clean"};
}

}  // namespace

int main() {
  set_warning_sink([](std::string_view) {});
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"gradient-correctness", gradient_correctness},
      {"bspline-partition-of-unity", partition_of_unity},
      {"scan-oracle-equivalence", scan_oracle},
      {"linear-time", linear_time},
      {"context-identity", context_identity},
      {"learning-sanity", learning_sanity},
      {"zero-shot-twin", zero_shot_twin},
      {"ablation-suite", ablation_suite},
      {"determinism", determinism},
      {"no-leakage", no_leakage},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
