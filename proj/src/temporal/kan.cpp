#include "ssmamba/temporal/kan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "ssmamba/errors.hpp"
#include "ssmamba/num/ops.hpp"
#include "ssmamba/num/rng.hpp"
#include "ssmamba/num/text.hpp"

namespace ssmamba::temporal {

using num::ParamLeaf;
using num::Shape;
using num::Tensor;
using num::Var;

NormalizationRanges NormalizationRanges::from_dates(std::span<const Date> training_dates) {
  if (training_dates.empty()) throw ContractViolation("normalization ranges need at least one date");
  NormalizationRanges r;
  auto [lo_it, hi_it] = std::minmax_element(training_dates.begin(), training_dates.end());
  const auto lo = calendar_descriptor(*lo_it);
  const auto hi = calendar_descriptor(*hi_it);
  r[CalendarField::ordinal] = {static_cast<double>(lo.ordinal), static_cast<double>(hi.ordinal)};
  if (hi.ordinal == lo.ordinal) r[CalendarField::ordinal].hi += 1.0;
  r[CalendarField::year] = {static_cast<double>(lo.year), static_cast<double>(hi.year)};
  if (hi.year == lo.year) r[CalendarField::year].hi += 1.0;
  r[CalendarField::month] = {1.0, 12.0};
  r[CalendarField::day] = {1.0, 31.0};
  r[CalendarField::dow] = {0.0, 6.0};
  r[CalendarField::doy] = {1.0, 366.0};
  r[CalendarField::quarter] = {1.0, 4.0};
  return r;
}

void NormalizationRanges::validate() const {
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    if (!(ranges[i].hi > ranges[i].lo)) {
      throw ContractViolation("normalization range for '" +
                              std::string(field_name(static_cast<CalendarField>(i))) + "' has hi <= lo");
    }
  }
}

double normalize_field(double x, const FeatureRange& range, ExtrapolationCounter* counter) {
  double u = (x - range.lo) / (range.hi - range.lo);
  if (u < 0.0 || u > 1.0) {
    u = std::clamp(u, 0.0, 1.0);
    if (counter) ++counter->count;
  }
  return u;
}

std::array<double, kCalendarFieldCount> normalize_descriptor(const CalendarDescriptor& d,
                                                             const NormalizationRanges& ranges,
                                                             ExtrapolationCounter* counter) {
  std::array<double, kCalendarFieldCount> out{};
  for (std::size_t i = 0; i < kCalendarFieldCount; ++i) {
    const auto f = static_cast<CalendarField>(i);
    out[i] = normalize_field(d.field(f), ranges[f], counter);
  }
  return out;
}

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + std::string(name) + "' (expected tanh or identity)");
}

std::string_view activation_name(Activation a) { return a == Activation::tanh ? "tanh" : "identity"; }

template <class T>
void KanParams<T>::validate() const {
  splines.validate();
  ranges.validate();
  const std::size_t k = features.size();
  const auto r = static_cast<std::size_t>(splines.basis_count);
  if (k == 0 || splines.features() != k) throw ContractViolation("KAN: feature count mismatch");
  if (coefficients.shape() != Shape{k, r}) throw ContractViolation("KAN: coefficients must be k x R");
  if (mix_weight.shape() != Shape{mix_bias.size(), k}) throw ContractViolation("KAN: mixer must be N x k");
}

template <class T>
KanParams<T> make_kan_params(const KanConfig& config, std::size_t state_size, const NormalizationRanges& ranges,
                             std::uint64_t seed) {
  const std::size_t k = config.features.size();
  const auto r = static_cast<std::size_t>(config.basis_count);
  KanParams<T> p{
      SplineSpec::clamped_uniform(config.degree, config.basis_count, k),
      config.features,
      ParamLeaf<T>("kan.coefficients",
                   num::random_uniform<T>({k, r}, -0.1, 0.1, num::derive_seed(seed, "kan.coefficients"))),
      ParamLeaf<T>("kan.mix_weight",
                   num::random_normal<T>({state_size, k}, 1.0 / std::sqrt(static_cast<double>(k)),
                                         num::derive_seed(seed, "kan.mix_weight"))),
      ParamLeaf<T>("kan.mix_bias", Tensor<T>({state_size})),
      config.activation,
      ranges,
  };
  p.validate();
  return p;
}

template <class T>
Tensor<T> spline_basis_tensor(const DescriptorGrid& grid, const SplineSpec& splines,
                              std::span<const CalendarField> features, const NormalizationRanges& ranges,
                              ExtrapolationCounter* counter) {
  const std::size_t k = features.size();
  const auto r = static_cast<std::size_t>(splines.basis_count);
  Tensor<T> out({grid.batch, grid.length, k, r});
  std::vector<double> basis(r);
  const bool checked = num::checked_mode();
  for (std::size_t cell = 0; cell < grid.cells.size(); ++cell) {
    const CalendarDescriptor& d = grid.cells[cell];
    for (std::size_t j = 0; j < k; ++j) {
      const double x = normalize_field(d.field(features[j]), ranges[features[j]], counter);
      const bool clamped = bspline_basis(x, splines.degree, splines.knots[j], basis);
      if (checked && clamped) throw ContractViolation("spline input left the knot span after normalization");
      T* dst = &out[(cell * k + j) * r];
      for (std::size_t q = 0; q < r; ++q) dst[q] = static_cast<T>(basis[q]);
    }
  }
  return out;
}

namespace {
template <class T>
Var<T> activate(const Var<T>& x, Activation a) {
  return a == Activation::tanh ? num::tanh(x) : x;
}

void check_grid(const DescriptorGrid& grid, std::size_t expected_length) {
  if (grid.length != expected_length || grid.cells.size() != grid.batch * grid.length) {
    throw ContractViolation("descriptor grid is " + std::to_string(grid.batch) + "x" + std::to_string(grid.length) +
                            " with " + std::to_string(grid.cells.size()) + " cells; expected window length " +
                            std::to_string(expected_length));
  }
}
}  // namespace

template <class T>
Var<T> kan_forward(const DescriptorGrid& grid, const KanParams<T>& params, std::size_t expected_length,
                   ExtrapolationCounter* counter) {
  check_grid(grid, expected_length);
  auto basis = num::constant(spline_basis_tensor<T>(grid, params.splines, params.features, params.ranges, counter));
  // u[b,l,j] = sum_r alpha[j,r] * B[b,l,j,r]
  auto weighted = num::mul(basis, params.coefficients.var());
  auto u = num::sum_axis(weighted, 3);
  auto mixed = num::add(num::linear(u, params.mix_weight.var()), params.mix_bias.var());
  return activate(mixed, params.activation);
}

template <class T>
Tensor<T> sinusoidal_features(const DescriptorGrid& grid) {
  Tensor<T> out({grid.batch, grid.length, kSinusoidalDim});
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t cell = 0; cell < grid.cells.size(); ++cell) {
    const auto& d = grid.cells[cell];
    const double year_phase = two_pi * d.doy / 365.25;
    const double week_phase = two_pi * d.dow / 7.0;
    T* dst = &out[cell * kSinusoidalDim];
    dst[0] = static_cast<T>(std::sin(year_phase));
    dst[1] = static_cast<T>(std::cos(year_phase));
    dst[2] = static_cast<T>(std::sin(week_phase));
    dst[3] = static_cast<T>(std::cos(week_phase));
  }
  return out;
}

template <class T>
SinusoidalParams<T> make_sinusoidal_params(std::size_t state_size, Activation activation, std::uint64_t seed) {
  return SinusoidalParams<T>{
      ParamLeaf<T>("sinusoidal.mix_weight",
                   num::random_normal<T>({state_size, kSinusoidalDim}, 1.0 / std::sqrt(double(kSinusoidalDim)),
                                         num::derive_seed(seed, "sinusoidal.mix_weight"))),
      ParamLeaf<T>("sinusoidal.mix_bias", Tensor<T>({state_size})),
      activation,
  };
}

template <class T>
Var<T> sinusoidal_forward(const DescriptorGrid& grid, const SinusoidalParams<T>& params, std::size_t expected_length) {
  check_grid(grid, expected_length);
  auto features = num::constant(sinusoidal_features<T>(grid));
  auto mixed = num::add(num::linear(features, params.mix_weight.var()), params.mix_bias.var());
  return activate(mixed, params.activation);
}

template <class T>
std::vector<std::filesystem::path> export_splines(const KanParams<T>& params, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const auto r = static_cast<std::size_t>(params.splines.basis_count);
  for (std::size_t j = 0; j < params.features.size(); ++j) {
    const CalendarField f = params.features[j];
    const auto path = dir / ("spline_" + std::string(field_name(f)) + ".txt");
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << "# g(x) = sum_r coefficient[r] * B_{r,degree}(x; knots), x = (raw - lo) / (hi - lo) clamped to [0,1]\n";
    out << "feature " << field_name(f) << '\n';
    out << "degree " << params.splines.degree << '\n';
    out << "basis_count " << r << '\n';
    out << "range " << num::to_shortest(params.ranges[f].lo) << ' ' << num::to_shortest(params.ranges[f].hi) << '\n';
    out << "knots";
    for (double k : params.splines.knots[j]) out << ' ' << num::to_shortest(k);
    out << "\ncoefficients";
    for (std::size_t q = 0; q < r; ++q) out << ' ' << num::to_shortest(params.coefficients.value()[j * r + q]);
    out << '\n';
    written.push_back(path);
  }
  return written;
}

#define SSMAMBA_INSTANTIATE_KAN(T)                                                                            \
  template struct KanParams<T>;                                                                               \
  template KanParams<T> make_kan_params<T>(const KanConfig&, std::size_t, const NormalizationRanges&,          \
                                           std::uint64_t);                                                    \
  template Tensor<T> spline_basis_tensor<T>(const DescriptorGrid&, const SplineSpec&,                         \
                                            std::span<const CalendarField>, const NormalizationRanges&,       \
                                            ExtrapolationCounter*);                                           \
  template Var<T> kan_forward<T>(const DescriptorGrid&, const KanParams<T>&, std::size_t, ExtrapolationCounter*); \
  template Tensor<T> sinusoidal_features<T>(const DescriptorGrid&);                                           \
  template SinusoidalParams<T> make_sinusoidal_params<T>(std::size_t, Activation, std::uint64_t);             \
  template Var<T> sinusoidal_forward<T>(const DescriptorGrid&, const SinusoidalParams<T>&, std::size_t);      \
  template std::vector<std::filesystem::path> export_splines<T>(const KanParams<T>&, const std::filesystem::path&);

SSMAMBA_INSTANTIATE_KAN(float)
SSMAMBA_INSTANTIATE_KAN(double)

}  // namespace ssmamba::temporal
