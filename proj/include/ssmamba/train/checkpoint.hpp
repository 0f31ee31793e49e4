#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "ssmamba/data/prepare.hpp"
#include "ssmamba/semantic/embedding.hpp"
#include "ssmamba/train/model.hpp"

namespace ssmamba::train {

inline constexpr int kCheckpointVersion = 1;

struct EmbeddingInfo {
  semantic::Provenance provenance = semantic::Provenance::hash_fallback;
  std::string source;  // file path, or empty for the built-in fallback
  std::uint64_t digest = 0;
  std::size_t dim = 0;
  std::uint64_t fallback_seed = semantic::EmbeddingTable::kDefaultFallbackSeed;
  // Where each training series' vector came from.
  std::map<std::string, semantic::Provenance> series;

  static EmbeddingInfo describe(const semantic::EmbeddingTable& table, std::string source,
                                std::span<const std::string> names);
};

struct TrainedModel {
  ForecastModel<float> model;
  std::map<std::string, data::Scaler> scalers;
  EmbeddingInfo embeddings;
  std::size_t steps_completed = 0;
};

// <dir>/manifest.json describes <dir>/params.bin, a contiguous blob of
// little-endian float32 values. Output depends only on the model state, so
// equal models produce byte-identical files.
void save_checkpoint(const TrainedModel& trained, const std::filesystem::path& dir);
// InputError if the directory, manifest or payload is missing or
// inconsistent.
TrainedModel load_checkpoint(const std::filesystem::path& dir);

// FNV-1a over every parameter's name, shape and bytes.
std::uint64_t parameter_digest(const ForecastModel<float>& model);

// The embedding table a run should use: the file when given, else an empty
// table that resolves every name through the hash fallback.
semantic::EmbeddingTable embedding_table_for(const TrainConfig& config, const std::filesystem::path* file);

}  // namespace ssmamba::train
