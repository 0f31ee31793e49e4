#include "ssmamba/num/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "ssmamba/errors.hpp"

namespace ssmamba::num {

std::vector<Tensor<double>> finite_difference_gradient(const std::function<double()>& f,
                                                       const ParamList& params, double h) {
  if (!(h > 0.0)) throw ContractViolation("finite_difference_gradient: step must be positive");
  const double base = f();
  const double again = f();
  if (base != again) {
    throw OracleError("finite_difference_gradient: f is not deterministic (" + std::to_string(base) +
                      " vs " + std::to_string(again) + ")");
  }
  std::vector<Tensor<double>> out;
  out.reserve(params.size());
  for (ParamLeaf<double>* p : params) {
    Tensor<double> g(p->shape());
    auto& value = p->mutable_value();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      value[i] = saved + h;
      const double plus = f();
      value[i] = saved - h;
      const double minus = f();
      value[i] = saved;
      g[i] = (plus - minus) / (2.0 * h);
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<GradCheckReport> compare_gradients(const ParamList& params,
                                               const std::vector<Tensor<double>>& numeric,
                                               const GradCheckOptions& options) {
  if (numeric.size() != params.size()) throw ContractViolation("compare_gradients: size mismatch");
  std::vector<GradCheckReport> reports;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& analytic = params[k]->grad();
    const auto& fd = numeric[k];
    GradCheckReport r;
    r.param_name = params[k]->name();
    for (std::size_t i = 0; i < fd.size(); ++i) {
      const double a = analytic[i];
      const double n = fd[i];
      const double abs_err = std::abs(a - n);
      const double magnitude = std::max(std::abs(a), std::abs(n));
      double rel_err = 0.0;
      if (magnitude >= options.small_gradient) {
        rel_err = abs_err / magnitude;
      } else if (abs_err >= options.abs_floor) {
        rel_err = abs_err / std::max(magnitude, options.abs_floor);
      }
      r.max_abs_error = std::max(r.max_abs_error, abs_err);
      r.max_rel_error = std::max(r.max_rel_error, rel_err);
    }
    r.passed = r.max_rel_error < options.tolerance || r.max_abs_error < options.abs_floor;
    reports.push_back(std::move(r));
  }
  return reports;
}

std::vector<GradCheckReport> check_gradients(const std::function<Var<double>()>& loss,
                                             const ParamList& params,
                                             const GradCheckOptions& options) {
  for (auto* p : params) p->zero_grad();
  reverse_accumulate(loss());
  auto numeric = finite_difference_gradient([&] { return loss().value().item(); }, params, options.step);
  return compare_gradients(params, numeric, options);
}

bool all_passed(const std::vector<GradCheckReport>& reports) {
  return std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.passed; });
}

}  // namespace ssmamba::num
