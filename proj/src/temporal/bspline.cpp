#include "ssmamba/temporal/bspline.hpp"

#include <algorithm>
#include <string>

#include "ssmamba/errors.hpp"

namespace ssmamba::temporal {

namespace {

// Index s with knots[s] <= x < knots[s+1], restricted to [degree, n_basis-1].
std::size_t find_span(double x, int degree, std::span<const double> knots, std::size_t n_basis) {
  const std::size_t last = n_basis - 1;
  if (x >= knots[last + 1]) return last;
  std::size_t lo = static_cast<std::size_t>(degree);
  std::size_t hi = last + 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (x < knots[mid]) hi = mid;
    else lo = mid;
  }
  return lo;
}

}  // namespace

std::vector<double> clamped_uniform_knots(int degree, int basis_count) {
  if (degree < 0 || basis_count < degree + 1) {
    throw ContractViolation("clamped knots need basis_count >= degree + 1 (degree " +
                            std::to_string(degree) + ", basis_count " + std::to_string(basis_count) + ")");
  }
  const int interior = basis_count - degree - 1;
  std::vector<double> knots;
  knots.reserve(static_cast<std::size_t>(basis_count + degree + 1));
  for (int i = 0; i <= degree; ++i) knots.push_back(0.0);
  for (int i = 1; i <= interior; ++i) knots.push_back(static_cast<double>(i) / (interior + 1));
  for (int i = 0; i <= degree; ++i) knots.push_back(1.0);
  return knots;
}

SplineSpec SplineSpec::clamped_uniform(int degree, int basis_count, std::size_t features) {
  SplineSpec spec;
  spec.degree = degree;
  spec.basis_count = basis_count;
  spec.knots.assign(features, clamped_uniform_knots(degree, basis_count));
  return spec;
}

void SplineSpec::validate() const {
  if (degree < 1 || degree > 3) throw ContractViolation("spline degree must be in [1, 3], got " + std::to_string(degree));
  if (basis_count > 16 || basis_count < degree + 1) {
    throw ContractViolation("spline basis_count must be in [degree+1, 16], got " + std::to_string(basis_count));
  }
  const std::size_t expected = static_cast<std::size_t>(basis_count + degree + 1);
  for (std::size_t j = 0; j < knots.size(); ++j) {
    const auto& k = knots[j];
    if (k.size() != expected) {
      throw ContractViolation("feature " + std::to_string(j) + ": knot vector has " + std::to_string(k.size()) +
                              " entries, expected " + std::to_string(expected));
    }
    if (!std::is_sorted(k.begin(), k.end())) {
      throw ContractViolation("feature " + std::to_string(j) + ": knots not non-decreasing");
    }
    for (int i = 0; i <= degree; ++i) {
      if (k[static_cast<std::size_t>(i)] != k.front() || k[k.size() - 1 - static_cast<std::size_t>(i)] != k.back()) {
        throw ContractViolation("feature " + std::to_string(j) + ": knot vector is not clamped");
      }
    }
  }
}

bool bspline_basis(double x, int degree, std::span<const double> knots, std::span<double> out) {
  const std::size_t n_basis = out.size();
  if (degree < 0 || degree > 4 || knots.size() != n_basis + static_cast<std::size_t>(degree) + 1) {
    throw ContractViolation("bspline_basis: " + std::to_string(knots.size()) + " knots for " +
                            std::to_string(n_basis) + " basis functions of degree " + std::to_string(degree));
  }
  std::fill(out.begin(), out.end(), 0.0);
  bool clamped = false;
  if (x < knots.front()) {
    x = knots.front();
    clamped = true;
  } else if (x > knots.back()) {
    x = knots.back();
    clamped = true;
  }

  // Triangular scheme producing the degree+1 non-zero values on the span.
  const std::size_t span = find_span(x, degree, knots, n_basis);
  const auto p = static_cast<std::size_t>(degree);
  double values[4 + 1];
  double left[4 + 1];
  double right[4 + 1];
  values[0] = 1.0;
  for (std::size_t j = 1; j <= p; ++j) {
    left[j] = x - knots[span + 1 - j];
    right[j] = knots[span + j] - x;
    double saved = 0.0;
    for (std::size_t r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom == 0.0 ? 0.0 : values[r] / denom;
      values[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    values[j] = saved;
  }
  for (std::size_t r = 0; r <= p; ++r) out[span - p + r] = values[r];
  return clamped;
}

std::vector<double> bspline_basis(double x, const SplineSpec& spec, std::size_t feature, bool* clamped) {
  std::vector<double> out(static_cast<std::size_t>(spec.basis_count));
  const bool c = bspline_basis(x, spec.degree, spec.knots.at(feature), out);
  if (clamped) *clamped = c;
  return out;
}

double spline_value(double x, int degree, std::span<const double> knots, std::span<const double> coefficients) {
  std::vector<double> basis(coefficients.size());
  bspline_basis(x, degree, knots, basis);
  double g = 0.0;
  for (std::size_t r = 0; r < basis.size(); ++r) g += coefficients[r] * basis[r];
  return g;
}

}  // namespace ssmamba::temporal
