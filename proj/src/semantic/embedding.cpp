#include "ssmamba/semantic/embedding.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ssmamba/errors.hpp"
#include "ssmamba/num/ops.hpp"
#include "ssmamba/num/rng.hpp"
#include "ssmamba/num/text.hpp"

namespace ssmamba::semantic {

using num::ParamLeaf;
using num::Tensor;
using num::Var;

std::string_view provenance_name(Provenance p) {
  return p == Provenance::pretrained ? "pretrained" : "hash-fallback";
}

void EmbeddingTable::insert(const std::string& name, std::vector<float> vector) {
  if (name.empty()) throw FormatError("embedding table: empty series name");
  if (name.find_first_of("\t\n\r") != std::string::npos) {
    throw FormatError("embedding table: name '" + name + "' contains a tab or newline");
  }
  if (vector.size() != dim_) {
    throw FormatError("embedding table: '" + name + "' has " + std::to_string(vector.size()) +
                      " values, expected " + std::to_string(dim_));
  }
  if (!entries_.emplace(name, std::move(vector)).second) {
    throw FormatError("embedding table: duplicate name '" + name + "'");
  }
}

const std::vector<float>* EmbeddingTable::find(const std::string& name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second;
}

Provenance EmbeddingTable::provenance_of(const std::string& name) const {
  return contains(name) ? Provenance::pretrained : Provenance::hash_fallback;
}

std::vector<float> EmbeddingTable::resolve(const std::string& name, Provenance* source) const {
  if (const auto* v = find(name)) {
    if (source) *source = Provenance::pretrained;
    return *v;
  }
  if (source) *source = Provenance::hash_fallback;
  return hash_fallback_embedding(name, dim_, fallback_seed_);
}

std::uint64_t EmbeddingTable::digest() const {
  std::uint64_t h = num::fnv1a64("ssmamba-emb");
  h = num::fnv1a64(std::to_string(dim_), h);
  for (const auto& [name, vec] : entries_) {
    h = num::fnv1a64(name, h);
    h = num::fnv1a64(std::string_view(reinterpret_cast<const char*>(vec.data()), vec.size() * sizeof(float)), h);
  }
  return h;
}

EmbeddingTable load_embedding_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open embedding file " + path.string());
  const std::string where = path.string();
  std::string line;
  std::size_t line_no = 0;

  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty() && line.front() == '#') continue;
      return true;
    }
    return false;
  };

  if (!next_line()) throw FormatError(where + ": missing header line");
  const auto header = num::split(line, ' ');
  std::size_t dim = 0;
  if (header.size() != 3 || header[0] != "ssmamba-emb" || header[1] != "1") {
    throw FormatError(where + ":" + std::to_string(line_no) + ": bad header '" + line +
                      "' (expected 'ssmamba-emb 1 <dim>')");
  }
  {
    const auto d = num::parse_double(header[2]);
    if (!d || *d < 1 || *d != std::floor(*d)) {
      throw FormatError(where + ":" + std::to_string(line_no) + ": bad dimension '" + std::string(header[2]) + "'");
    }
    dim = static_cast<std::size_t>(*d);
  }

  EmbeddingTable table(dim);
  table.set_provenance(Provenance::pretrained);
  while (next_line()) {
    if (num::trim(line).empty()) continue;
    const auto at = where + ":" + std::to_string(line_no) + ": ";
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError(at + "expected '<name>\\t<values>'");
    const std::string name = line.substr(0, tab);
    std::vector<float> values;
    values.reserve(dim);
    for (auto tok : num::split(std::string_view(line).substr(tab + 1), ' ')) {
      if (tok.empty()) continue;
      const auto v = num::parse_float(tok);
      if (!v || !std::isfinite(*v)) throw FormatError(at + "bad float '" + std::string(tok) + "'");
      values.push_back(*v);
    }
    if (values.size() != dim) {
      throw FormatError(at + "row '" + name + "' has " + std::to_string(values.size()) + " values, header says " +
                        std::to_string(dim));
    }
    try {
      table.insert(name, std::move(values));
    } catch (const FormatError& e) {
      throw FormatError(at + e.what());
    }
  }
  return table;
}

void save_embedding_table(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write embedding file " + path.string());
  out << "ssmamba-emb 1 " << table.dim() << '\n';
  for (const auto& [name, vec] : table.entries()) {
    out << name << '\t';
    for (std::size_t i = 0; i < vec.size(); ++i) out << (i ? " " : "") << num::to_shortest(vec[i]);
    out << '\n';
  }
}

std::vector<float> hash_fallback_embedding(std::string_view name, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw ContractViolation("hash_fallback_embedding: dim must be positive");
  const std::uint64_t base = num::fnv1a64(name) ^ num::splitmix64(seed);
  std::vector<double> raw(dim);
  double norm2 = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const std::uint64_t bits = num::splitmix64(base + 0x9e3779b97f4a7c15ULL * (i + 1));
    // Uniform on [-1, 1) built from 53 bits: exact in binary64.
    raw[i] = static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0;
    norm2 += raw[i] * raw[i];
  }
  const double norm = std::sqrt(norm2);
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(raw[i] / norm);
  return out;
}

template <class T>
IndexProjection<T> make_index_projection(std::size_t state_size, std::size_t input_dim, std::uint64_t seed) {
  return IndexProjection<T>{
      ParamLeaf<T>("semantic.proj_weight",
                   num::random_normal<T>({state_size, input_dim}, 1.0 / std::sqrt(static_cast<double>(input_dim)),
                                         num::derive_seed(seed, "semantic.proj_weight"))),
      ParamLeaf<T>("semantic.proj_bias", Tensor<T>({state_size})),
  };
}

template <class T>
NameEmbedding embed_name(const std::string& name, const EmbeddingTable& table, const IndexProjection<T>& proj) {
  if (proj.input_dim() != table.dim()) {
    throw ContractViolation("projection expects " + std::to_string(proj.input_dim()) + "-d vectors, table has " +
                            std::to_string(table.dim()));
  }
  NameEmbedding out;
  const auto h = table.resolve(name, &out.source);
  const std::size_t n = proj.state_size(), d = proj.input_dim();
  out.e.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    T acc{0};
    for (std::size_t j = 0; j < d; ++j) acc += proj.weight.value()[i * d + j] * static_cast<T>(h[j]);
    out.e[i] = static_cast<double>(acc + proj.bias.value()[i]);
  }
  return out;
}

template <class T>
Tensor<T> lookup_matrix(std::span<const std::string> names, const EmbeddingTable& table,
                        std::vector<Provenance>* sources) {
  const std::size_t d = table.dim();
  Tensor<T> out({names.size(), d});
  if (sources) sources->clear();
  for (std::size_t b = 0; b < names.size(); ++b) {
    Provenance p{};
    const auto h = table.resolve(names[b], &p);
    for (std::size_t j = 0; j < d; ++j) out[b * d + j] = static_cast<T>(h[j]);
    if (sources) sources->push_back(p);
  }
  return out;
}

template <class T>
Var<T> embed_batch(std::span<const std::string> names, const EmbeddingTable& table, const IndexProjection<T>& proj) {
  if (proj.input_dim() != table.dim()) {
    throw ContractViolation("projection expects " + std::to_string(proj.input_dim()) + "-d vectors, table has " +
                            std::to_string(table.dim()));
  }
  auto h = num::constant(lookup_matrix<T>(names, table));
  return num::add(num::linear(h, proj.weight.var()), proj.bias.var());
}

#define SSMAMBA_INSTANTIATE_SEMANTIC(T)                                                                     \
  template IndexProjection<T> make_index_projection<T>(std::size_t, std::size_t, std::uint64_t);            \
  template NameEmbedding embed_name<T>(const std::string&, const EmbeddingTable&, const IndexProjection<T>&); \
  template Tensor<T> lookup_matrix<T>(std::span<const std::string>, const EmbeddingTable&,                  \
                                      std::vector<Provenance>*);                                            \
  template Var<T> embed_batch<T>(std::span<const std::string>, const EmbeddingTable&, const IndexProjection<T>&);

SSMAMBA_INSTANTIATE_SEMANTIC(float)
SSMAMBA_INSTANTIATE_SEMANTIC(double)

}  // namespace ssmamba::semantic
