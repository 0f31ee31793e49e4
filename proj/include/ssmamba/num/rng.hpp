#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "ssmamba/num/tensor.hpp"

namespace ssmamba::num {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t splitmix64(std::uint64_t x);

// Independent stream seed for a named consumer (a parameter, a data sampler).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

// Seeded generator. The engine is std::mt19937_64, whose output sequence is
// fixed by the standard; the conversions to real numbers are done here rather
// than through <random> distributions, which are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Box-Muller; one of the pair is cached.
  double normal();
  // Uniform integer in [0, n) without modulo bias.
  std::uint64_t index(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

template <class T>
Tensor<T> random_uniform(Shape shape, double lo, double hi, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

template <class T>
Tensor<T> random_normal(Shape shape, double stddev, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<T>(stddev * rng.normal());
  return t;
}

}  // namespace ssmamba::num
