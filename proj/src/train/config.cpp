#include "ssmamba/train/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "ssmamba/errors.hpp"
#include "ssmamba/num/rng.hpp"
#include "ssmamba/num/text.hpp"
#include "ssmamba/temporal/bspline.hpp"

namespace ssmamba::train {

namespace {

bool valid_key(std::string_view key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  for (char c : key) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                    c == '.' || c == '-';
    if (!ok) return false;
  }
  return true;
}

std::string bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  return "config key '" + std::string(key) + "': '" + std::string(value) + "' is not " + std::string(expected);
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (v.empty() || ec != std::errc{} || ptr != end) throw ConfigError(bad_value(key, v, "a non-negative integer"));
  return out;
}

std::size_t to_size(std::string_view key, std::string_view v) { return static_cast<std::size_t>(to_u64(key, v)); }

double to_double(std::string_view key, std::string_view v) {
  const auto d = num::parse_double(v);
  if (!d) throw ConfigError(bad_value(key, v, "a number"));
  return *d;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(bad_value(key, v, "a boolean"));
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

std::vector<temporal::CalendarField> to_features(std::string_view key, std::string_view v) {
  if (v == "all") return {temporal::kAllCalendarFields.begin(), temporal::kAllCalendarFields.end()};
  std::vector<temporal::CalendarField> out;
  std::set<temporal::CalendarField> seen;
  for (auto part : num::split(v, ',')) {
    part = num::trim(part);
    const auto f = temporal::parse_field(part);
    if (!seen.insert(f).second) throw ConfigError("config key '" + std::string(key) + "': duplicate feature '" +
                                                  std::string(part) + "'");
    out.push_back(f);
  }
  return out;
}

std::string from_features(const std::vector<temporal::CalendarField>& fs) {
  std::string out;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    if (i) out += ',';
    out += temporal::field_name(fs[i]);
  }
  return out;
}

}  // namespace

KeyValues parse_key_values(std::string_view text, std::string_view source) {
  KeyValues kv;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    line = num::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto at = std::string(source) + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(at + "expected 'key = value'");
    const auto key = num::trim(line.substr(0, eq));
    const auto value = num::trim(line.substr(eq + 1));
    if (!valid_key(key)) throw ConfigError(at + "invalid key '" + std::string(key) + "'");
    if (!kv.emplace(std::string(key), std::string(value)).second) {
      throw ConfigError(at + "duplicate key '" + std::string(key) + "'");
    }
  }
  return kv;
}

KeyValues load_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str(), path.string());
}

std::string serialize_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::string config_hash(const KeyValues& kv) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(num::fnv1a64(serialize_key_values(kv))));
  return buf;
}

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::semantic_off: return "semantic_off";
    case Variant::kan_off: return "kan_off";
    case Variant::context_off: return "context_off";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : kAllVariants) {
    if (variant_name(v) == name) return v;
  }
  throw ConfigError("unknown model variant '" + std::string(name) +
                    "' (expected full, semantic_off, kan_off, context_off)");
}

double TrainConfig::effective_e_scale() const {
  return variant == Variant::semantic_off || variant == Variant::context_off ? 0.0 : ssm.e_scale;
}

double TrainConfig::effective_k_scale() const { return variant == Variant::context_off ? 0.0 : ssm.k_scale; }

void TrainConfig::validate() const {
  if (window < 1) throw ConfigError("train.window must be at least 1");
  if (batch < 1) throw ConfigError("train.batch must be at least 1");
  if (steps < 1) throw ConfigError("train.steps must be at least 1");
  if (stride < 1) throw ConfigError("train.stride must be at least 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("train.beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("train.beta2 must lie in [0, 1)");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("train.eps must be positive");
  if (!(clip_norm > 0.0)) throw ConfigError("train.clip_norm must be positive");
  if (early_stopping && eval_every == 0) throw ConfigError("train.early_stopping needs train.eval_every > 0");
  if (patience < 1) throw ConfigError("train.patience must be at least 1");
  if (embedding_dim < 1) throw ConfigError("semantic.dim must be at least 1");
  try {
    ssm.validate();
    temporal::SplineSpec::clamped_uniform(kan.degree, kan.basis_count, kan.features.size()).validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
  if (kan.features.empty()) throw ConfigError("kan.feature_set must name at least one feature");
  split.validate();
}

KeyValues TrainConfig::to_key_values() const {
  using num::to_shortest;
  KeyValues kv;
  kv["train.window"] = std::to_string(window);
  kv["train.batch"] = std::to_string(batch);
  kv["train.steps"] = std::to_string(steps);
  kv["train.lr"] = to_shortest(lr);
  kv["train.beta1"] = to_shortest(beta1);
  kv["train.beta2"] = to_shortest(beta2);
  kv["train.eps"] = to_shortest(eps);
  kv["train.clip_norm"] = to_shortest(clip_norm);
  kv["train.seed"] = std::to_string(seed);
  kv["train.stride"] = std::to_string(stride);
  kv["train.loss"] = loss == LossPositions::last ? "last" : "all";
  kv["train.eval_every"] = std::to_string(eval_every);
  kv["train.early_stopping"] = from_bool(early_stopping);
  kv["train.patience"] = std::to_string(patience);
  kv["model.variant"] = std::string(variant_name(variant));
  kv["ssm.state_size"] = std::to_string(ssm.state_size);
  kv["ssm.channels"] = std::to_string(ssm.channels);
  kv["ssm.layers"] = std::to_string(ssm.layers);
  kv["ssm.e_scale"] = to_shortest(ssm.e_scale);
  kv["ssm.k_scale"] = to_shortest(ssm.k_scale);
  kv["ssm.delta_bias"] = "scalar";
  kv["kan.degree"] = std::to_string(kan.degree);
  kv["kan.basis_count"] = std::to_string(kan.basis_count);
  kv["kan.activation"] = std::string(temporal::activation_name(kan.activation));
  kv["kan.feature_set"] = from_features(kan.features);
  kv["semantic.dim"] = std::to_string(embedding_dim);
  kv["semantic.fallback_seed"] = std::to_string(fallback_seed);
  kv["semantic.residual"] = from_bool(semantic_residual);
  kv["split.train"] = to_shortest(split.train);
  kv["split.val"] = to_shortest(split.val);
  kv["split.test"] = to_shortest(split.test);
  kv["numerics.checked"] = from_bool(checked);
  return kv;
}

TrainConfig TrainConfig::from_key_values(const KeyValues& kv) {
  TrainConfig c;
  for (const auto& [key, v] : kv) {
    if (key == "train.window") c.window = to_size(key, v);
    else if (key == "train.batch") c.batch = to_size(key, v);
    else if (key == "train.steps") c.steps = to_size(key, v);
    else if (key == "train.lr") c.lr = to_double(key, v);
    else if (key == "train.beta1") c.beta1 = to_double(key, v);
    else if (key == "train.beta2") c.beta2 = to_double(key, v);
    else if (key == "train.eps") c.eps = to_double(key, v);
    else if (key == "train.clip_norm") c.clip_norm = to_double(key, v);
    else if (key == "train.seed") c.seed = to_u64(key, v);
    else if (key == "train.stride") c.stride = to_size(key, v);
    else if (key == "train.loss") {
      if (v == "last") c.loss = LossPositions::last;
      else if (v == "all") c.loss = LossPositions::all;
      else throw ConfigError(bad_value(key, v, "'last' or 'all'"));
    }
    else if (key == "train.eval_every") c.eval_every = to_size(key, v);
    else if (key == "train.early_stopping") c.early_stopping = to_bool(key, v);
    else if (key == "train.patience") c.patience = to_size(key, v);
    else if (key == "model.variant") c.variant = parse_variant(v);
    else if (key == "ssm.state_size") c.ssm.state_size = to_size(key, v);
    else if (key == "ssm.channels") c.ssm.channels = to_size(key, v);
    else if (key == "ssm.layers") c.ssm.layers = to_size(key, v);
    else if (key == "ssm.e_scale") c.ssm.e_scale = to_double(key, v);
    else if (key == "ssm.k_scale") c.ssm.k_scale = to_double(key, v);
    else if (key == "ssm.delta_bias") {
      if (v == "per-channel") throw ConfigError("ssm.delta_bias=per-channel is reserved and not supported");
      if (v != "scalar") throw ConfigError(bad_value(key, v, "'scalar'"));
    }
    else if (key == "kan.degree") c.kan.degree = static_cast<int>(to_size(key, v));
    else if (key == "kan.basis_count") c.kan.basis_count = static_cast<int>(to_size(key, v));
    else if (key == "kan.activation") c.kan.activation = temporal::parse_activation(v);
    else if (key == "kan.feature_set") c.kan.features = to_features(key, v);
    else if (key == "semantic.dim") c.embedding_dim = to_size(key, v);
    else if (key == "semantic.fallback_seed") c.fallback_seed = to_u64(key, v);
    else if (key == "semantic.residual") c.semantic_residual = to_bool(key, v);
    else if (key == "split.train") c.split.train = to_double(key, v);
    else if (key == "split.val") c.split.val = to_double(key, v);
    else if (key == "split.test") c.split.test = to_double(key, v);
    else if (key == "numerics.checked") c.checked = to_bool(key, v);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  c.ssm.window_hint = c.window;
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path* path, const KeyValues& overrides) {
  KeyValues kv = path ? load_key_values(*path) : KeyValues{};
  for (const auto& [k, v] : overrides) kv[k] = v;
  if (const char* env = std::getenv("SSMAMBA_SEED"); env && *env) {
    kv["train.seed"] = env;
  }
  return TrainConfig::from_key_values(kv);
}

}  // namespace ssmamba::train
