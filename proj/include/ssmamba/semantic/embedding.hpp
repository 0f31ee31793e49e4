#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssmamba/num/autograd.hpp"

namespace ssmamba::semantic {

enum class Provenance { pretrained, hash_fallback };
std::string_view provenance_name(Provenance p);

// Frozen name -> vector table, usually produced by the offline exporter.
class EmbeddingTable {
 public:
  static constexpr std::uint64_t kDefaultFallbackSeed = 42;

  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim, std::uint64_t fallback_seed = kDefaultFallbackSeed)
      : dim_(dim), fallback_seed_(fallback_seed) {}

  std::size_t dim() const { return dim_; }
  // pretrained once loaded from a file; hash_fallback for an in-memory table.
  Provenance provenance() const { return provenance_; }
  void set_provenance(Provenance p) { provenance_ = p; }
  std::size_t size() const { return entries_.size(); }
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  std::uint64_t fallback_seed() const { return fallback_seed_; }
  void set_fallback_seed(std::uint64_t seed) { fallback_seed_ = seed; }

  // Throws FormatError on an empty name, a tab/newline in the name, a
  // duplicate, or a vector of the wrong length.
  void insert(const std::string& name, std::vector<float> vector);
  const std::vector<float>* find(const std::string& name) const;
  const std::map<std::string, std::vector<float>>& entries() const { return entries_; }

  // Provenance of the vector `resolve` would return for this name.
  Provenance provenance_of(const std::string& name) const;
  // Table vector when present, otherwise the hash fallback for this table's
  // dimension and seed.
  std::vector<float> resolve(const std::string& name, Provenance* source = nullptr) const;

  // Stable digest of the contents; recorded in checkpoints.
  std::uint64_t digest() const;

 private:
  std::size_t dim_ = 0;
  std::uint64_t fallback_seed_ = kDefaultFallbackSeed;
  Provenance provenance_ = Provenance::hash_fallback;
  std::map<std::string, std::vector<float>> entries_;
};

// Format: first line `ssmamba-emb 1 <dim>`, then `<name>\t<f1> ... <f_dim>`.
// Lines starting with '#' are comments. Throws FormatError with the line
// number on any violation.
EmbeddingTable load_embedding_table(const std::filesystem::path& path);
void save_embedding_table(const EmbeddingTable& table, const std::filesystem::path& path);

// Deterministic unit-norm vector derived from the UTF-8 bytes of `name`.
// Uses integer hashing only, so the result is identical on every platform.
std::vector<float> hash_fallback_embedding(std::string_view name, std::size_t dim, std::uint64_t seed);

template <class T>
struct IndexProjection {
  num::ParamLeaf<T> weight;  // N x d_emb
  num::ParamLeaf<T> bias;    // N

  std::size_t state_size() const { return bias.size(); }
  std::size_t input_dim() const { return weight.shape().at(1); }
  void collect(std::vector<num::ParamLeaf<T>*>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }
};

// weight ~ N(0, 1/d_emb), bias = 0.
template <class T>
IndexProjection<T> make_index_projection(std::size_t state_size, std::size_t input_dim, std::uint64_t seed);

struct NameEmbedding {
  std::vector<double> e;
  Provenance source = Provenance::hash_fallback;
};

// e = W h + b for a single name.
template <class T>
NameEmbedding embed_name(const std::string& name, const EmbeddingTable& table, const IndexProjection<T>& proj);

// Constant [B, d_emb] matrix of looked-up vectors, one row per name.
template <class T>
num::Tensor<T> lookup_matrix(std::span<const std::string> names, const EmbeddingTable& table,
                             std::vector<Provenance>* sources = nullptr);

// Differentiable batch projection -> [B, N].
template <class T>
num::Var<T> embed_batch(std::span<const std::string> names, const EmbeddingTable& table,
                        const IndexProjection<T>& proj);

}  // namespace ssmamba::semantic
