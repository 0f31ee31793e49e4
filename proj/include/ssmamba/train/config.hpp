#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "ssmamba/data/prepare.hpp"
#include "ssmamba/ssm/backbone.hpp"
#include "ssmamba/temporal/kan.hpp"

namespace ssmamba::train {

// Flat key/value text:
//
//   # comment
//   key = value
//
// Keys are dotted identifiers; whitespace around keys and values is
// trimmed; a repeated key is an error. Serialization is one `key=value` per
// line in key order, which is also what gets hashed.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::string_view text, std::string_view source = "config");
KeyValues load_key_values(const std::filesystem::path& path);
std::string serialize_key_values(const KeyValues& kv);
// 16 hex digits of FNV-1a over the serialized text.
std::string config_hash(const KeyValues& kv);

enum class Variant { full, semantic_off, kan_off, context_off };
std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);
inline constexpr Variant kAllVariants[] = {Variant::full, Variant::semantic_off, Variant::kan_off,
                                           Variant::context_off};

enum class LossPositions { last, all };

struct TrainConfig {
  std::size_t window = 60;
  std::size_t batch = 32;
  std::size_t steps = 2000;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 1.0;  // may be +inf
  std::uint64_t seed = 0;
  std::size_t stride = 1;
  LossPositions loss = LossPositions::last;
  // Validation RMSE every eval_every steps (0 disables); with early stopping
  // the best evaluation's parameters are kept.
  std::size_t eval_every = 0;
  bool early_stopping = false;
  std::size_t patience = 20;

  Variant variant = Variant::full;
  ssm::SsmConfig ssm;
  // ordinal and year only ever clamp on forecast dates, so the default set
  // holds the cyclic fields.
  temporal::KanConfig kan{3,
                          8,
                          temporal::Activation::tanh,
                          {temporal::CalendarField::month, temporal::CalendarField::day, temporal::CalendarField::dow,
                           temporal::CalendarField::doy, temporal::CalendarField::quarter}};
  std::size_t embedding_dim = 768;
  std::uint64_t fallback_seed = 42;
  bool semantic_residual = false;
  data::SplitSpec split;
  bool checked = true;

  // e_scale / k_scale after the variant is applied.
  double effective_e_scale() const;
  double effective_k_scale() const;

  void validate() const;
  KeyValues to_key_values() const;
  // Unknown keys and malformed values are ConfigErrors. Missing keys keep
  // their defaults.
  static TrainConfig from_key_values(const KeyValues& kv);
};

// Reads the file (if any), applies `overrides`, then SSMAMBA_SEED from the
// environment.
TrainConfig load_config(const std::filesystem::path* path, const KeyValues& overrides = {});

}  // namespace ssmamba::train
