#pragma once

#include <cstdint>
#include <vector>

#include "forge/param_store.hpp"

namespace forge {

// Linear warmup to base_lr, then constant.
struct WarmupSchedule {
    double base_lr = 1e-3;
    long warmup_steps = 0;

    double lr(long step) const {
        if (warmup_steps <= 0 || step >= warmup_steps) return base_lr;
        return base_lr * double(step) / double(warmup_steps);
    }
};

// Adam with beta1=0.9, beta2=0.98, eps=1e-9. A coordinate whose gradient
// is exactly zero is left completely untouched (value and moments), so a
// scalar that never receives gradient keeps its value bit-exact across
// any number of steps.
class Adam {
public:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.98;
    static constexpr double kEps = 1e-9;

    explicit Adam(const ParameterStore& store);

    void step(ParameterStore& store, const Gradients& grads, const WarmupSchedule& schedule);
    void reset();

    long step_count() const { return step_; }

    const std::vector<std::vector<double>>& first_moments() const { return m_; }
    const std::vector<std::vector<double>>& second_moments() const { return v_; }
    std::vector<std::vector<double>>& first_moments() { return m_; }
    std::vector<std::vector<double>>& second_moments() { return v_; }
    void set_step_count(long s) { step_ = s; }

private:
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    long step_ = 0;
};

}  // namespace forge
