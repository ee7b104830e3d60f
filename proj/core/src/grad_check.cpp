#include "kgd/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace kgd::ad {

GradCheckReport grad_check(const Objective& objective, const std::vector<Parameter*>& parameters,
                           const GradCheckOptions& options) {
  for (Parameter* p : parameters) p->zero_grad();
  {
    Tape tape;
    tape.backward(objective(tape));
  }
  std::vector<Tensor> analytic;
  for (Parameter* p : parameters) analytic.push_back(p->grad);

  auto eval = [&] {
    Tape tape;
    return objective(tape).value().item();
  };

  GradCheckReport report;
  for (std::size_t k = 0; k < parameters.size(); ++k) {
    Parameter& p = *parameters[k];
    ParameterGradError err;
    err.name = p.name;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + options.step;
      const double up = eval();
      p.value[i] = saved - options.step;
      const double down = eval();
      p.value[i] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic[k][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      const double rel = std::abs(a - numeric) / denom;
      if (i == 0 || rel > err.max_rel_error) {
        err.max_rel_error = rel;
        err.worst_index = i;
        err.analytic = a;
        err.numeric = numeric;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, err.max_rel_error);
    report.parameters.push_back(std::move(err));
  }
  for (Parameter* p : parameters) p->zero_grad();
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

}  // namespace kgd::ad
