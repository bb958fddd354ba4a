#pragma once

#include <functional>

#include "forge/param_store.hpp"

namespace forge {

// Central-difference gradient estimate of a scalar function of the
// store: (f(theta + h e_j) - f(theta - h e_j)) / 2h for every scalar j.
Gradients fd_gradient(const std::function<double(const ParameterStore&)>& f,
                      const ParameterStore& theta, double h);

// Max relative error between an analytic gradient and the estimate,
// |a - b| / max(1, |a|, |b|) over all coordinates.
double max_relative_error(const Gradients& analytic, const Gradients& estimate);

}  // namespace forge
