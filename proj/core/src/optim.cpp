// SPDX-License-Identifier: Apache-2.0
#include "patchlm/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "patchlm/errors.hpp"

namespace patchlm {

void adamw_step(Tensor& param, OptimizerState& state, double lr) {
    if (!param.has_grad())
        throw UsageError("adamw_step: parameter has no gradient");
    const std::size_t n = param.size();
    if (state.m.empty()) state.m.assign(n, 0.0);
    if (state.v.empty()) state.v.assign(n, 0.0);
    if (state.m.size() != n || state.v.size() != n)
        throw DimensionError("adamw_step: moment shape does not match parameter");

    double* p = param.data();
    const std::vector<double>& g = param.grad();
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    const double decay = 1.0 - lr * state.weight_decay;
    for (std::size_t i = 0; i < n; ++i) {
        p[i] *= decay;
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g[i] * g[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        p[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
}

AdamW::AdamW(std::vector<Tensor> params, double beta1, double beta2, double eps,
             double weight_decay)
    : params_(std::move(params)) {
    states_.resize(params_.size());
    for (auto& s : states_) {
        s.beta1 = beta1;
        s.beta2 = beta2;
        s.eps = eps;
        s.weight_decay = weight_decay;
    }
}

void AdamW::step(double lr) {
    for (std::size_t i = 0; i < params_.size(); ++i) adamw_step(params_[i], states_[i], lr);
    ++step_count_;
}

void AdamW::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

double lr_at_step(const LrSchedule& sched, long t) {
    if (sched.warmup_steps > sched.total_steps)
        throw UsageError("lr schedule: warmup_steps exceeds total_steps");
    if (t < 0 || t > sched.total_steps)
        throw std::out_of_range("lr_at_step: step " + std::to_string(t) + " outside [0," +
                                std::to_string(sched.total_steps) + "]");
    if (t < sched.warmup_steps)
        return sched.peak_lr * static_cast<double>(t) / static_cast<double>(sched.warmup_steps);
    const long span = sched.total_steps - sched.warmup_steps;
    const double progress =
        span == 0 ? 1.0
                  : static_cast<double>(t - sched.warmup_steps) / static_cast<double>(span);
    return sched.min_lr +
           (sched.peak_lr - sched.min_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace patchlm
