#include "lsa/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "lsa/errors.hpp"

namespace lsa::ad {

std::vector<double> finite_difference_gradient(const std::function<double()>& f, Tensor& param,
                                               const FiniteDifference& fd) {
  if (!(fd.eps > 0.0) || fd.stride == 0 || fd.offset >= fd.stride) {
    throw UsageError("finite difference needs eps > 0 and offset < stride");
  }
  auto values = param.mutable_values();
  std::vector<double> out(values.size(), 0.0);
  const double h = fd.eps;
  for (std::size_t i = fd.offset; i < values.size(); i += fd.stride) {
    const double original = values[i];
    const auto at = [&](double x) {
      values[i] = x;
      return f();
    };
    if (fd.fourth_order) {
      const double d1 = at(original + h) - at(original - h);
      const double d2 = at(original + 2.0 * h) - at(original - 2.0 * h);
      out[i] = (8.0 * d1 - d2) / (12.0 * h);
    } else {
      out[i] = (at(original + h) - at(original - h)) / (2.0 * h);
    }
    values[i] = original;
  }
  return out;
}

std::vector<double> finite_difference_gradient(const std::function<double()>& f, Tensor& param,
                                               double eps) {
  return finite_difference_gradient(f, param, FiniteDifference{eps});
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport check_gradients(const std::function<Tensor()>& forward,
                                std::vector<std::pair<std::string, Tensor>> params, double eps) {
  return check_gradients(forward, std::move(params), FiniteDifference{eps});
}

GradCheckReport check_gradients(const std::function<Tensor()>& forward,
                                std::vector<std::pair<std::string, Tensor>> params,
                                const FiniteDifference& fd) {
  for (auto& [_, p] : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor out = forward();
    tape.backward(out);
  }
  GradCheckReport report;
  const auto scalar = [&] { return forward().item(); };
  for (auto& [name, p] : params) {
    const std::vector<double> analytic(p.grad().begin(), p.grad().end());
    const auto numeric = finite_difference_gradient(scalar, p, fd);
    for (std::size_t i = fd.offset; i < numeric.size(); i += fd.stride) {
      const double err = relative_error(analytic[i], numeric[i]);
      ++report.coordinates;
      if (err >= report.max_relative_error) {
        report = {err, name, i, analytic[i], numeric[i], report.coordinates};
      }
    }
  }
  return report;
}

}  // namespace lsa::ad
