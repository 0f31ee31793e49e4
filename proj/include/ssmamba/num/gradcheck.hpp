#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ssmamba/num/autograd.hpp"

namespace ssmamba::num {

struct GradCheckReport {
  std::string param_name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  bool passed = false;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Coordinates whose gradient magnitude is below `small_gradient` are judged
  // on absolute error against `abs_floor` instead of relative error.
  double abs_floor = 1e-7;
  double small_gradient = 1e-6;
};

using ParamList = std::vector<ParamLeaf<double>*>;

// Central differences (f(θ+h) - f(θ-h)) / 2h, one coordinate at a time, in
// 64-bit arithmetic. Throws OracleError if f is not reproducible.
std::vector<Tensor<double>> finite_difference_gradient(const std::function<double()>& f,
                                                       const ParamList& params, double h);

// Compares each parameter's accumulated gradient against `numeric`.
std::vector<GradCheckReport> compare_gradients(const ParamList& params,
                                               const std::vector<Tensor<double>>& numeric,
                                               const GradCheckOptions& options);

// Zeroes gradients, runs one reverse pass through `loss`, then checks against
// finite differences of the same function.
std::vector<GradCheckReport> check_gradients(const std::function<Var<double>()>& loss,
                                             const ParamList& params,
                                             const GradCheckOptions& options = {});

bool all_passed(const std::vector<GradCheckReport>& reports);

}  // namespace ssmamba::num
