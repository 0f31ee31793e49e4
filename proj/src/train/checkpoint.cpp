#include "ssmamba/train/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>

#include <json.hpp>

#include "ssmamba/errors.hpp"
#include "ssmamba/num/rng.hpp"

namespace ssmamba::train {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "ssmamba-checkpoint";
constexpr const char* kPayload = "params.bin";

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(s, &used, 16);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw InputError("checkpoint: bad hex digest '" + s + "'");
  return v;
}

semantic::Provenance parse_provenance(const std::string& s) {
  if (s == "pretrained") return semantic::Provenance::pretrained;
  if (s == "hash-fallback") return semantic::Provenance::hash_fallback;
  throw InputError("checkpoint: unknown embedding provenance '" + s + "'");
}

void put_f32_le(std::string& out, float f) {
  const auto u = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xffu));
}

float get_f32_le(const unsigned char* p) {
  std::uint32_t u = 0;
  for (int i = 0; i < 4; ++i) u |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(u);
}

}  // namespace

EmbeddingInfo EmbeddingInfo::describe(const semantic::EmbeddingTable& table, std::string source,
                                      std::span<const std::string> names) {
  EmbeddingInfo info;
  info.provenance = table.provenance();
  info.source = std::move(source);
  info.digest = table.digest();
  info.dim = table.dim();
  info.fallback_seed = table.fallback_seed();
  for (const auto& n : names) info.series[n] = table.provenance_of(n);
  return info;
}

std::uint64_t parameter_digest(const ForecastModel<float>& model) {
  std::uint64_t h = num::fnv1a64("");
  for (const auto* p : model.parameters()) {
    h = num::fnv1a64(p->name(), h);
    h = num::fnv1a64(num::shape_str(p->shape()), h);
    const auto data = p->value().data();
    h = num::fnv1a64(std::string_view(reinterpret_cast<const char*>(data.data()), data.size_bytes()), h);
  }
  return h;
}

void save_checkpoint(const TrainedModel& trained, const std::filesystem::path& dir) {
  const auto& model = trained.model;
  std::filesystem::create_directories(dir);

  json params = json::array();
  std::string payload;
  for (const auto* p : model.parameters()) {
    params.push_back({{"name", p->name()},
                      {"shape", p->shape()},
                      {"offset", payload.size()},
                      {"count", p->size()},
                      {"trainable", p->trainable()}});
    for (float v : p->value().data()) put_f32_le(payload, v);
  }

  json ranges = json::object();
  for (auto f : temporal::kAllCalendarFields) {
    ranges[std::string(temporal::field_name(f))] = {model.ranges()[f].lo, model.ranges()[f].hi};
  }
  json scalers = json::array();
  for (const auto& [name, s] : trained.scalers) scalers.push_back({{"series", name}, {"mean", s.mean}, {"std", s.std}});
  json series_prov = json::object();
  for (const auto& [name, p] : trained.embeddings.series) series_prov[name] = semantic::provenance_name(p);

  const auto kv = model.config().to_key_values();
  json manifest = {
      {"format", kFormat},
      {"version", kCheckpointVersion},
      {"config", kv},
      {"config_hash", config_hash(kv)},
      {"steps_completed", trained.steps_completed},
      {"series", model.training_names()},
      {"normalization", ranges},
      {"scalers", scalers},
      {"embeddings",
       {{"provenance", semantic::provenance_name(trained.embeddings.provenance)},
        {"source", trained.embeddings.source},
        {"digest", hex64(trained.embeddings.digest)},
        {"dim", trained.embeddings.dim},
        {"fallback_seed", trained.embeddings.fallback_seed},
        {"series", series_prov}}},
      {"params", params},
      {"payload", {{"file", kPayload}, {"bytes", payload.size()}, {"dtype", "float32-le"}}},
  };

  {
    std::ofstream out(dir / kPayload, std::ios::binary);
    if (!out) throw InputError("cannot write " + (dir / kPayload).string());
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw InputError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

TrainedModel load_checkpoint(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw InputError("no checkpoint at " + dir.string() + " (missing manifest.json)");
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw InputError(manifest_path.string() + ": invalid JSON: " + e.what());
  }

  try {
    if (m.at("format") != kFormat) throw InputError(manifest_path.string() + ": not a checkpoint manifest");
    if (m.at("version").get<int>() != kCheckpointVersion) {
      throw InputError(manifest_path.string() + ": unsupported checkpoint version " + m.at("version").dump());
    }
    KeyValues kv = m.at("config").get<KeyValues>();
    TrainConfig config;
    try {
      config = TrainConfig::from_key_values(kv);
    } catch (const ConfigError& e) {
      throw InputError(manifest_path.string() + ": stored config is invalid: " + e.what());
    }

    temporal::NormalizationRanges ranges;
    for (const auto& [name, pair] : m.at("normalization").items()) {
      ranges[temporal::parse_field(name)] = {pair.at(0).get<double>(), pair.at(1).get<double>()};
    }
    auto names = m.at("series").get<std::vector<std::string>>();

    TrainedModel t{ForecastModel<float>(config, ranges, names), {}, {}, m.at("steps_completed").get<std::size_t>()};
    for (const auto& s : m.at("scalers")) {
      t.scalers[s.at("series").get<std::string>()] = {s.at("mean").get<double>(), s.at("std").get<double>()};
    }
    const auto& e = m.at("embeddings");
    t.embeddings.provenance = parse_provenance(e.at("provenance").get<std::string>());
    t.embeddings.source = e.at("source").get<std::string>();
    t.embeddings.digest = parse_hex64(e.at("digest").get<std::string>());
    t.embeddings.dim = e.at("dim").get<std::size_t>();
    t.embeddings.fallback_seed = e.at("fallback_seed").get<std::uint64_t>();
    for (const auto& [name, p] : e.at("series").items()) {
      t.embeddings.series[name] = parse_provenance(p.get<std::string>());
    }

    std::ifstream bin(dir / kPayload, std::ios::binary);
    if (!bin) throw InputError("checkpoint " + dir.string() + " has no " + kPayload);
    const std::vector<unsigned char> payload((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
    if (payload.size() != m.at("payload").at("bytes").get<std::size_t>()) {
      throw InputError(dir.string() + ": payload size " + std::to_string(payload.size()) +
                       " does not match the manifest");
    }

    std::set<std::string> seen;
    std::size_t expected_offset = 0;
    for (const auto& entry : m.at("params")) {
      const auto name = entry.at("name").get<std::string>();
      auto* p = t.model.find(name);
      if (!p) throw InputError(dir.string() + ": unexpected parameter '" + name + "'");
      if (!seen.insert(name).second) throw InputError(dir.string() + ": parameter '" + name + "' listed twice");
      const auto shape = entry.at("shape").get<num::Shape>();
      const auto offset = entry.at("offset").get<std::size_t>();
      const auto count = entry.at("count").get<std::size_t>();
      if (shape != p->shape() || count != p->size() || offset != expected_offset) {
        throw InputError(dir.string() + ": parameter '" + name + "' does not match the model layout");
      }
      if (entry.at("trainable").get<bool>() != p->trainable()) {
        throw InputError(dir.string() + ": parameter '" + name + "' trainable flag disagrees with its config");
      }
      if (offset + 4 * count > payload.size()) throw InputError(dir.string() + ": payload is truncated");
      auto values = p->mutable_value().data();
      for (std::size_t i = 0; i < count; ++i) values[i] = get_f32_le(&payload[offset + 4 * i]);
      expected_offset += 4 * count;
    }
    if (expected_offset != payload.size() || seen.size() != t.model.parameters().size()) {
      throw InputError(dir.string() + ": manifest does not cover the payload and model exactly");
    }
    return t;
  } catch (const json::exception& e) {
    throw InputError(manifest_path.string() + ": malformed manifest: " + e.what());
  }
}

semantic::EmbeddingTable embedding_table_for(const TrainConfig& config, const std::filesystem::path* file) {
  if (file) {
    auto table = semantic::load_embedding_table(*file);
    table.set_fallback_seed(config.fallback_seed);
    return table;
  }
  return semantic::EmbeddingTable(config.embedding_dim, config.fallback_seed);
}

}  // namespace ssmamba::train
