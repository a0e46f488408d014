#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "lsa/autodiff/tensor.hpp"

namespace lsa::ad {

// Gradients smaller than this are compared in absolute rather than relative terms.
inline constexpr double kGradCheckFloor = 1e-4;

struct FiniteDifference {
  double eps = 1e-6;
  // Five-point stencil, O(eps^4) truncation. Lets eps be large enough that
  // roundoff stays far below the tolerance on deep graphs.
  bool fourth_order = false;
  // Only coordinates i with i % stride == offset are checked.
  std::size_t stride = 1;
  std::size_t offset = 0;
};

// Central-difference estimate of df/dparam, one coordinate at a time. `f` must be
// deterministic; `param` is perturbed in place and restored exactly. Skipped
// coordinates are left at zero.
std::vector<double> finite_difference_gradient(const std::function<double()>& f, Tensor& param,
                                               const FiniteDifference& fd);
std::vector<double> finite_difference_gradient(const std::function<double()>& f, Tensor& param,
                                               double eps = 1e-6);

// |a - n| / max(|a|, |n|, kGradCheckFloor)
double relative_error(double analytic, double numeric);

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

// Records `forward` on a fresh tape, backpropagates, then compares every
// coordinate of every listed tensor against central differences.
GradCheckReport check_gradients(const std::function<Tensor()>& forward,
                                std::vector<std::pair<std::string, Tensor>> params,
                                const FiniteDifference& fd);
GradCheckReport check_gradients(const std::function<Tensor()>& forward,
                                std::vector<std::pair<std::string, Tensor>> params,
                                double eps = 1e-6);

}  // namespace lsa::ad
