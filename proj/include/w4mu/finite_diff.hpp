#pragma once

#include <functional>

#include "w4mu/params.hpp"

namespace w4mu {

/// Central-difference gradient of a scalar function of a ParamSet. Oracle
/// for checking reverse-mode gradients; O(2 * total_size) evaluations.
GradMap finite_diff_grad(const std::function<double(const ParamSet&)>& f, const ParamSet& params,
                         double h);

/// Same, over a flat coordinate vector.
std::vector<double> finite_diff_grad_flat(
    const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& x,
    double h);

}  // namespace w4mu
