#pragma once

#include <span>
#include <vector>

namespace ssmamba::temporal {

// Knot vectors and degree for k univariate splines, one per calendar feature.
struct SplineSpec {
  int degree = 3;
  int basis_count = 8;
  std::vector<std::vector<double>> knots;

  // Clamped uniform knots on [0, 1] for every feature.
  static SplineSpec clamped_uniform(int degree, int basis_count, std::size_t features);

  std::size_t features() const { return knots.size(); }
  // Throws ContractViolation unless 1 <= degree <= 3, basis_count <= 16,
  // every knot vector has basis_count + degree + 1 non-decreasing entries and
  // is clamped (end knots repeated degree + 1 times).
  void validate() const;
};

// basis_count + degree + 1 knots: degree + 1 zeros, evenly spaced interior
// knots, degree + 1 ones.
std::vector<double> clamped_uniform_knots(int degree, int basis_count);

// Evaluates all basis functions B_{r,degree}(x) for r = 0..out.size()-1 on
// the given knot vector. x outside [knots.front(), knots.back()] is clamped
// to the nearest end; the return value reports whether that happened.
// At x == knots.back() the last basis function takes the value 1.
bool bspline_basis(double x, int degree, std::span<const double> knots, std::span<double> out);

std::vector<double> bspline_basis(double x, const SplineSpec& spec, std::size_t feature,
                                  bool* clamped = nullptr);

// g(x) = sum_r coefficients[r] * B_r(x).
double spline_value(double x, int degree, std::span<const double> knots,
                    std::span<const double> coefficients);

}  // namespace ssmamba::temporal
