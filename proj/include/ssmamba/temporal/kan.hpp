#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ssmamba/num/autograd.hpp"
#include "ssmamba/temporal/bspline.hpp"
#include "ssmamba/temporal/calendar.hpp"

namespace ssmamba::temporal {

struct FeatureRange {
  double lo = 0.0;
  double hi = 1.0;
};

// Affine maps from raw calendar fields onto the spline domain [0, 1].
struct NormalizationRanges {
  std::array<FeatureRange, kCalendarFieldCount> ranges{};

  // ordinal and year come from the observed dates (widened by one unit when
  // degenerate); the bounded fields use their natural calendar extents.
  static NormalizationRanges from_dates(std::span<const Date> training_dates);

  const FeatureRange& operator[](CalendarField f) const { return ranges[static_cast<std::size_t>(f)]; }
  FeatureRange& operator[](CalendarField f) { return ranges[static_cast<std::size_t>(f)]; }
  void validate() const;
};

// Counts values that fell outside their training range and were clamped.
struct ExtrapolationCounter {
  std::size_t count = 0;
};

double normalize_field(double x, const FeatureRange& range, ExtrapolationCounter* counter = nullptr);
std::array<double, kCalendarFieldCount> normalize_descriptor(const CalendarDescriptor& d,
                                                             const NormalizationRanges& ranges,
                                                             ExtrapolationCounter* counter = nullptr);

// Batch x window of calendar descriptors, row-major.
struct DescriptorGrid {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<CalendarDescriptor> cells;

  const CalendarDescriptor& at(std::size_t b, std::size_t l) const { return cells[b * length + l]; }
};

enum class Activation { tanh, identity };
Activation parse_activation(std::string_view name);
std::string_view activation_name(Activation a);

struct KanConfig {
  int degree = 3;
  int basis_count = 8;
  Activation activation = Activation::tanh;
  std::vector<CalendarField> features{kAllCalendarFields.begin(), kAllCalendarFields.end()};
};

template <class T>
struct KanParams {
  SplineSpec splines;
  std::vector<CalendarField> features;
  num::ParamLeaf<T> coefficients;  // k x R
  num::ParamLeaf<T> mix_weight;    // N x k
  num::ParamLeaf<T> mix_bias;      // N
  Activation activation = Activation::tanh;
  NormalizationRanges ranges;

  std::size_t state_size() const { return mix_bias.size(); }
  void collect(std::vector<num::ParamLeaf<T>*>& out) {
    out.push_back(&coefficients);
    out.push_back(&mix_weight);
    out.push_back(&mix_bias);
  }
  void validate() const;
};

// Coefficients ~ U(-0.1, 0.1), mixer weight ~ N(0, 1/k), bias = 0. Each
// leaf draws from its own stream derived from `seed` and its name.
template <class T>
KanParams<T> make_kan_params(const KanConfig& config, std::size_t state_size, const NormalizationRanges& ranges,
                             std::uint64_t seed);

// Constant tensor [B, L, k, R] of basis values at the normalized features.
template <class T>
num::Tensor<T> spline_basis_tensor(const DescriptorGrid& grid, const SplineSpec& splines,
                                   std::span<const CalendarField> features, const NormalizationRanges& ranges,
                                   ExtrapolationCounter* counter = nullptr);

// z[b,l] = act(W u + b),  u_j = sum_r alpha[j,r] B_r(normalized d_j).  -> [B, L, N]
template <class T>
num::Var<T> kan_forward(const DescriptorGrid& grid, const KanParams<T>& params, std::size_t expected_length,
                        ExtrapolationCounter* counter = nullptr);

// Fixed encoding used when the spline encoder is ablated:
// [sin(2pi doy/365.25), cos(2pi doy/365.25), sin(2pi dow/7), cos(2pi dow/7)].
inline constexpr std::size_t kSinusoidalDim = 4;

template <class T>
num::Tensor<T> sinusoidal_features(const DescriptorGrid& grid);

template <class T>
struct SinusoidalParams {
  num::ParamLeaf<T> mix_weight;  // N x 4
  num::ParamLeaf<T> mix_bias;    // N
  Activation activation = Activation::tanh;

  void collect(std::vector<num::ParamLeaf<T>*>& out) {
    out.push_back(&mix_weight);
    out.push_back(&mix_bias);
  }
};

template <class T>
SinusoidalParams<T> make_sinusoidal_params(std::size_t state_size, Activation activation, std::uint64_t seed);

template <class T>
num::Var<T> sinusoidal_forward(const DescriptorGrid& grid, const SinusoidalParams<T>& params,
                               std::size_t expected_length);

// Writes one text file per feature, spline_<feature>.txt, holding the knot
// vector, the coefficients and the normalization range. Returns the paths.
template <class T>
std::vector<std::filesystem::path> export_splines(const KanParams<T>& params, const std::filesystem::path& dir);

}  // namespace ssmamba::temporal
