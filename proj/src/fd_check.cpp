#include "forge/fd_check.hpp"

#include <algorithm>
#include <cmath>

#include "forge/errors.hpp"

namespace forge {

Gradients fd_gradient(const std::function<double(const ParameterStore&)>& f,
                      const ParameterStore& theta, double h) {
    if (h <= 0.0) throw ConfigError("fd_gradient: h must be positive");
    Gradients est = Gradients::zeros_like(theta);
    ParameterStore work = theta;
    for (std::size_t e = 0; e < work.num_entries(); ++e) {
        auto& vals = work.entry(e).tensor.values;
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double orig = vals[i];
            vals[i] = orig + h;
            const double fp = f(work);
            vals[i] = orig - h;
            const double fm = f(work);
            vals[i] = orig;
            est.by_entry[e][i] = (fp - fm) / (2.0 * h);
        }
    }
    return est;
}

double max_relative_error(const Gradients& analytic, const Gradients& estimate) {
    if (analytic.by_entry.size() != estimate.by_entry.size())
        throw ShapeError("max_relative_error: entry count mismatch");
    double worst = 0.0;
    for (std::size_t e = 0; e < analytic.by_entry.size(); ++e) {
        const auto& a = analytic.by_entry[e];
        const auto& b = estimate.by_entry[e];
        if (a.size() != b.size()) throw ShapeError("max_relative_error: size mismatch");
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double denom = std::max({1.0, std::fabs(a[i]), std::fabs(b[i])});
            worst = std::max(worst, std::fabs(a[i] - b[i]) / denom);
        }
    }
    return worst;
}

}  // namespace forge
