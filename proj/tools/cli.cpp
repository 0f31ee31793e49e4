#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ssmamba/errors.hpp"
#include "ssmamba/log.hpp"
#include "ssmamba/num/text.hpp"
#include "ssmamba/train/trainer.hpp"

namespace ssmamba::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// run.json: what was run, with which effective config, and what it wrote.
struct RunManifest {
  std::string subcommand;
  std::string command;
  std::string config_path;
  train::KeyValues config;
  fs::path out;
  std::string started_at = utc_now();
  std::vector<std::string> artifacts;
  std::string status = "ok";

  void add(const fs::path& p) { artifacts.push_back(fs::relative(p, out).generic_string()); }

  void write() const {
    json j = {
        {"subcommand", subcommand},
        {"command", command},
        {"config_path", config_path},
        {"output_dir", out.string()},
        {"started_at", started_at},
        {"finished_at", utc_now()},
        {"status", status},
        {"artifacts", artifacts},
    };
    if (!config.empty()) {
      j["config"] = config;
      j["config_hash"] = train::config_hash(config);
    }
    std::ofstream f(out / "run.json");
    if (!f) throw InputError("cannot write " + (out / "run.json").string());
    f << j.dump(2) << '\n';
  }
};

train::KeyValues parse_sets(const std::vector<std::string>& sets) {
  train::KeyValues kv;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects KEY=VALUE, got '" + s + "'");
    kv[std::string(num::trim(std::string_view(s).substr(0, eq)))] =
        std::string(num::trim(std::string_view(s).substr(eq + 1)));
  }
  return kv;
}

struct Resolved {
  train::TrainConfig config;
  semantic::EmbeddingTable table;
  std::string embedding_source;
};

// Config file, then --set overrides, then SSMAMBA_SEED. An embedding file
// fixes semantic.dim unless the config sets it explicitly (then they must agree).
Resolved resolve(const std::string& config_path, const std::vector<std::string>& sets,
                 const std::string& embeddings) {
  auto overrides = parse_sets(sets);
  const fs::path path(config_path);
  const fs::path* path_ptr = config_path.empty() ? nullptr : &path;
  std::optional<semantic::EmbeddingTable> table;
  if (!embeddings.empty()) {
    table = semantic::load_embedding_table(embeddings);
    const bool explicit_dim = overrides.count("semantic.dim") != 0 ||
                              (path_ptr && train::load_key_values(path).count("semantic.dim") != 0);
    if (!explicit_dim) overrides["semantic.dim"] = std::to_string(table->dim());
  }
  auto config = train::load_config(path_ptr, overrides);
  if (table) {
    if (table->dim() != config.embedding_dim) {
      throw ConfigError("semantic.dim is " + std::to_string(config.embedding_dim) + " but " + embeddings +
                        " has dimension " + std::to_string(table->dim()));
    }
    table->set_fallback_seed(config.fallback_seed);
    return {config, std::move(*table), embeddings};
  }
  return {config, semantic::EmbeddingTable(config.embedding_dim, config.fallback_seed), ""};
}

// For a saved run: the given file, else the file recorded at training time,
// else the hash fallback with the recorded dimension and seed.
semantic::EmbeddingTable table_for_checkpoint(const train::TrainedModel& t, const std::string& embeddings,
                                              std::ostream& err) {
  semantic::EmbeddingTable table(t.embeddings.dim, t.embeddings.fallback_seed);
  if (!embeddings.empty()) {
    table = semantic::load_embedding_table(embeddings);
  } else if (t.embeddings.provenance == semantic::Provenance::pretrained && !t.embeddings.source.empty()) {
    table = semantic::load_embedding_table(t.embeddings.source);
  }
  table.set_fallback_seed(t.embeddings.fallback_seed);
  if (table.dim() != t.embeddings.dim) {
    throw ConfigError("embedding table has dimension " + std::to_string(table.dim()) + ", the checkpoint expects " +
                      std::to_string(t.embeddings.dim));
  }
  if (table.digest() != t.embeddings.digest) {
    err << "warning: embedding table differs from the one used in training\n";
  }
  return table;
}

void prepare_out(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw InputError("cannot create output directory " + out.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path.string());
  f << text;
}

// Checkpoint, step log, effective config and (when present) validation
// history of one training run.
void save_training_outputs(const train::TrainResult& r, const fs::path& dir, RunManifest& manifest) {
  train::save_checkpoint(r.trained, dir);
  manifest.add(dir / "manifest.json");
  manifest.add(dir / "params.bin");
  train::write_step_log(r.log, dir / "steps.tsv");
  manifest.add(dir / "steps.tsv");
  write_text(dir / "config.txt", train::serialize_key_values(r.trained.model.config().to_key_values()));
  manifest.add(dir / "config.txt");
  if (!r.validation.empty()) {
    std::ofstream f(dir / "validation.tsv");
    f << "step\trmse\n";
    for (const auto& v : r.validation) f << v.step << '\t' << num::to_shortest(v.average_rmse) << '\n';
    manifest.add(dir / "validation.tsv");
  }
}

std::string describe(const train::MetricsReport& m) {
  return m.split + " RMSE " + num::to_shortest(m.average_rmse) + ", MAE " + num::to_shortest(m.average_mae) +
         " over " + std::to_string(m.total) + " windows";
}

struct Options {
  std::string config, data, embeddings, out, run, split = "test", series, name, kind = "sine+trend",
                                                 windows = "30,60,120", start = "2000-01-01";
  std::vector<std::string> sets;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  double noise = 0.05;
};

int cmd_train(const Options& o, RunManifest& m, std::ostream& out) {
  auto r = resolve(o.config, o.sets, o.embeddings);
  m.config = r.config.to_key_values();
  const auto datasets = data::load_datasets(o.data);
  const fs::path dir(o.out);
  prepare_out(dir);
  try {
    const auto result = train::train(r.config, datasets, r.table, r.embedding_source);
    save_training_outputs(result, dir, m);
    const auto test = train::evaluate(result.trained, datasets, data::Split::test, r.table);
    train::write_metrics_tsv(test, dir / "metrics_test.tsv");
    m.add(dir / "metrics_test.tsv");
    out << "trained " << result.trained.steps_completed << " steps; final loss "
        << num::to_shortest(result.log.back().loss) << "; " << describe(test) << '\n';
    if (result.extrapolated > 0) {
      out << "note: " << result.extrapolated << " calendar features were clamped to the training range\n";
    }
  } catch (const train::TrainingAborted& e) {
    if (e.partial()) save_training_outputs(*e.partial(), dir, m);
    m.status = "aborted";
    throw;
  }
  return kOk;
}

int cmd_eval(const Options& o, RunManifest& m, std::ostream& out, std::ostream& err) {
  const auto t = train::load_checkpoint(o.run);
  m.config = t.model.config().to_key_values();
  const auto table = table_for_checkpoint(t, o.embeddings, err);
  const auto datasets = data::load_datasets(o.data);
  const auto report = train::evaluate(t, datasets, data::parse_split(o.split), table);
  const fs::path dir(o.out);
  prepare_out(dir);
  train::write_metrics_tsv(report, dir / "metrics.tsv");
  m.add(dir / "metrics.tsv");
  out << describe(report) << '\n';
  return kOk;
}

int cmd_zeroshot(const Options& o, RunManifest& m, std::ostream& out, std::ostream& err) {
  const auto t = train::load_checkpoint(o.run);
  m.config = t.model.config().to_key_values();
  const auto table = table_for_checkpoint(t, o.embeddings, err);
  const auto series = data::load_series_csv(o.series, o.name);
  const auto report = train::zero_shot_eval(t, series, table);
  const fs::path dir(o.out);
  prepare_out(dir);
  train::write_metrics_tsv(report, dir / "metrics.tsv");
  m.add(dir / "metrics.tsv");
  out << "zero-shot '" << o.name << "' (" << semantic::provenance_name(table.provenance_of(o.name))
      << " embedding): " << describe(report) << '\n';
  return kOk;
}

int cmd_ablate(const Options& o, RunManifest& m, std::ostream& out) {
  auto r = resolve(o.config, o.sets, o.embeddings);
  m.config = r.config.to_key_values();
  const auto datasets = data::load_datasets(o.data);
  const fs::path dir(o.out);
  prepare_out(dir);
  const auto runs = train::run_ablation_suite(r.config, datasets, r.table, r.embedding_source);
  std::ofstream table(dir / "ablation.tsv");
  table << "variant\trmse\tmae\tn\ttrainable_scalars\tconfig_hash\n";
  for (const auto& run : runs) {
    const auto name = std::string(train::variant_name(run.variant));
    const fs::path sub = dir / name;
    prepare_out(sub);
    RunManifest sm;
    sm.subcommand = "train";
    sm.command = m.command;
    sm.config_path = o.config;
    sm.config = run.result.trained.model.config().to_key_values();
    sm.out = sub;
    save_training_outputs(run.result, sub, sm);
    train::write_metrics_tsv(run.test, sub / "metrics_test.tsv");
    sm.add(sub / "metrics_test.tsv");
    sm.write();
    m.add(sub / "run.json");
    table << name << '\t' << num::to_shortest(run.test.average_rmse) << '\t' << num::to_shortest(run.test.average_mae)
          << '\t' << run.test.total << '\t' << run.result.trained.model.trainable_scalars() << '\t'
          << train::config_hash(sm.config) << '\n';
    out << name << ": " << describe(run.test) << '\n';
  }
  m.add(dir / "ablation.tsv");
  return kOk;
}

int cmd_sweep(const Options& o, RunManifest& m, std::ostream& out) {
  auto r = resolve(o.config, o.sets, o.embeddings);
  m.config = r.config.to_key_values();
  std::vector<std::size_t> windows;
  for (auto part : num::split(o.windows, ',')) {
    const auto v = num::parse_double(part);
    if (!v || *v < 1 || *v != static_cast<double>(static_cast<std::size_t>(*v))) {
      throw ConfigError("--windows expects positive integers, got '" + std::string(part) + "'");
    }
    windows.push_back(static_cast<std::size_t>(*v));
  }
  const auto datasets = data::load_datasets(o.data);
  const fs::path dir(o.out);
  prepare_out(dir);
  const auto rows = train::elastic_context_sweep(r.config, datasets, r.table, windows, r.embedding_source);
  train::write_sweep_tsv(rows, dir / "sweep.tsv");
  m.add(dir / "sweep.tsv");
  for (const auto& row : rows) {
    out << "L=" << row.window << ": " << (row.skipped ? std::string("skipped") : describe(row.test)) << '\n';
  }
  return kOk;
}

int cmd_synth(const Options& o, RunManifest& m, std::ostream& out) {
  data::SynthOptions s;
  s.kind = data::parse_synth_kind(o.kind);
  s.length = o.n;
  s.seed = o.seed;
  s.noise = o.noise;
  s.name = o.name.empty() ? std::string(data::synth_kind_name(s.kind)) : o.name;
  try {
    s.start = temporal::Date::parse(o.start);
  } catch (const InputError& e) {
    throw ConfigError(std::string("--start: ") + e.what());
  }
  if (s.name.find_first_of("/\\\t\n") != std::string::npos) throw ConfigError("--name must not contain / \\ or tabs");
  const auto rec = data::synth_series(s);
  const fs::path dir(o.out);
  prepare_out(dir);
  std::string file = s.name;
  for (char& c : file) {
    if (c == '+' || c == ' ') c = '_';
  }
  file += ".csv";
  data::save_series_csv(rec, dir / file);
  data::save_manifest({{s.name, file}}, dir / "datasets.json");
  m.add(dir / file);
  m.add(dir / "datasets.json");
  out << "wrote " << rec.size() << " observations of '" << s.name << "' to " << (dir / file).string() << '\n';
  return kOk;
}

int cmd_export_splines(const Options& o, RunManifest& m, std::ostream& out) {
  const auto t = train::load_checkpoint(o.run);
  m.config = t.model.config().to_key_values();
  if (!t.model.kan()) throw ConfigError("checkpoint " + o.run + " uses the sinusoidal encoder; it has no splines");
  const fs::path dir(o.out);
  prepare_out(dir);
  for (const auto& p : temporal::export_splines(*t.model.kan(), dir)) m.add(p);
  out << "exported " << t.model.kan()->features.size() << " spline functions to " << dir.string() << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ss-Mamba forecaster: semantic name embeddings, spline calendar encoder, selective SSM", "ssmamba"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  Options o;

  auto add_out = [&](CLI::App* s) { s->add_option("--out", o.out, "Output directory")->required(); };
  auto add_training = [&](CLI::App* s) {
    s->add_option("--config", o.config, "Flat key=value config file");
    s->add_option("--data", o.data, "JSON list of {name, path} series")->required();
    s->add_option("--embeddings", o.embeddings, "Embedding table (ssmamba-emb); hash fallback when omitted");
    s->add_option("--set", o.sets, "Config override KEY=VALUE (repeatable)");
    add_out(s);
  };

  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  add_training(train_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
  eval_cmd->add_option("--run", o.run, "Checkpoint directory")->required();
  eval_cmd->add_option("--data", o.data, "JSON list of {name, path} series")->required();
  eval_cmd->add_option("--split", o.split, "train, val or test")->capture_default_str();
  eval_cmd->add_option("--embeddings", o.embeddings, "Embedding table; defaults to the one used in training");
  add_out(eval_cmd);

  auto* zs_cmd = app.add_subcommand("zeroshot", "Forecast the test range of a series unseen in training");
  zs_cmd->add_option("--run", o.run, "Checkpoint directory")->required();
  zs_cmd->add_option("--series", o.series, "date,value CSV of the unseen series")->required();
  zs_cmd->add_option("--name", o.name, "Name of the unseen series")->required();
  zs_cmd->add_option("--embeddings", o.embeddings, "Embedding table; defaults to the one used in training");
  add_out(zs_cmd);

  auto* ablate_cmd = app.add_subcommand("ablate", "Train full, semantic_off, kan_off and context_off variants");
  add_training(ablate_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep", "Train and test once per window length");
  add_training(sweep_cmd);
  sweep_cmd->add_option("--windows", o.windows, "Comma-separated window lengths")->capture_default_str();

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic daily series and a data manifest");
  synth_cmd->add_option("--kind", o.kind, "sine+trend, two-season or random-walk")->capture_default_str();
  synth_cmd->add_option("--n", o.n, "Number of observations (>= 200)")->capture_default_str();
  synth_cmd->add_option("--seed", o.seed, "Generator seed")->capture_default_str();
  synth_cmd->add_option("--noise", o.noise, "Noise std (step std for random-walk)")->capture_default_str();
  synth_cmd->add_option("--name", o.name, "Series name (default: the kind)");
  synth_cmd->add_option("--start", o.start, "First date, YYYY-MM-DD")->capture_default_str();
  add_out(synth_cmd);

  auto* export_cmd = app.add_subcommand("export-splines", "Dump each learned calendar spline as knots + coefficients");
  export_cmd->add_option("--run", o.run, "Checkpoint directory")->required();
  add_out(export_cmd);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    err << app.help();
    return kConfigError;
  }

  auto* sub = app.get_subcommands().front();
  RunManifest manifest;
  manifest.subcommand = sub->get_name();
  for (std::size_t i = 0; i < args.size(); ++i) manifest.command += (i ? " " : "") + args[i];
  manifest.config_path = o.config;
  manifest.out = o.out;

  const auto previous_sink = set_warning_sink([&err](std::string_view msg) { err << "warning: " << msg << '\n'; });
  struct SinkReset {
    WarningSink sink;
    ~SinkReset() { set_warning_sink(std::move(sink)); }
  } reset{previous_sink};

  auto finish = [&](int code) {
    if (code != kOk && manifest.status == "ok") manifest.status = "failed";
    if (fs::is_directory(manifest.out)) {
      try {
        manifest.write();
      } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return code == kOk ? static_cast<int>(kDataError) : code;
      }
    }
    return code;
  };

  try {
    int code = kOk;
    if (sub == train_cmd) code = cmd_train(o, manifest, out);
    else if (sub == eval_cmd) code = cmd_eval(o, manifest, out, err);
    else if (sub == zs_cmd) code = cmd_zeroshot(o, manifest, out, err);
    else if (sub == ablate_cmd) code = cmd_ablate(o, manifest, out);
    else if (sub == sweep_cmd) code = cmd_sweep(o, manifest, out);
    else if (sub == synth_cmd) code = cmd_synth(o, manifest, out);
    else if (sub == export_cmd) code = cmd_export_splines(o, manifest, out);
    return finish(code);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return finish(kConfigError);
  } catch (const InputError& e) {
    err << "data error: " << e.what() << '\n';
    return finish(kDataError);
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return finish(kDataError);
  } catch (const train::TrainingAborted& e) {
    err << "training aborted: " << e.what() << '\n';
    manifest.status = "aborted";
    return finish(kTrainingAborted);
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return finish(kTrainingAborted);
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return finish(kInternal);
  }
}

}  // namespace ssmamba::cli
