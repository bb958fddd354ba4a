#include "forge/optimizer.hpp"

#include <cmath>

#include "forge/errors.hpp"

namespace forge {

Adam::Adam(const ParameterStore& store) {
    m_.resize(store.num_entries());
    v_.resize(store.num_entries());
    for (std::size_t i = 0; i < store.num_entries(); ++i) {
        m_[i].assign(store.entry(i).tensor.size(), 0.0);
        v_[i].assign(store.entry(i).tensor.size(), 0.0);
    }
}

void Adam::step(ParameterStore& store, const Gradients& grads, const WarmupSchedule& schedule) {
    if (grads.by_entry.size() != store.num_entries())
        throw ShapeError("adam: gradient/store entry count mismatch");
    if (!grads.all_finite()) throw NumericError("adam: non-finite gradient, step aborted");
    ++step_;
    const double lr = schedule.lr(step_);
    const double bc1 = 1.0 - std::pow(kBeta1, double(step_));
    const double bc2 = 1.0 - std::pow(kBeta2, double(step_));
    for (std::size_t e = 0; e < store.num_entries(); ++e) {
        auto& theta = store.entry(e).tensor.values;
        const auto& g = grads.by_entry[e];
        if (g.size() != theta.size()) throw ShapeError("adam: gradient size mismatch at entry " + store.entry(e).name);
        auto& m = m_[e];
        auto& v = v_[e];
        for (std::size_t i = 0; i < theta.size(); ++i) {
            if (g[i] == 0.0) continue;
            m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
            v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            theta[i] -= lr * mhat / (std::sqrt(vhat) + kEps);
        }
    }
}

void Adam::reset() {
    for (auto& b : m_) std::fill(b.begin(), b.end(), 0.0);
    for (auto& b : v_) std::fill(b.begin(), b.end(), 0.0);
    step_ = 0;
}

}  // namespace forge
