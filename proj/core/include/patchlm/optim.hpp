// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "patchlm/tensor.hpp"

namespace patchlm {

// Per-parameter AdamW state. Reference values: beta1 0.9, beta2 0.95,
// weight decay 0.1.
struct OptimizerState {
    std::vector<double> m;
    std::vector<double> v;
    long t = 0;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double eps = 1e-8;
    double weight_decay = 0.1;
};

// One AdamW update. Decoupled decay is applied to the parameter before the
// moment update so a zero-gradient step scales by exactly (1 - lr * wd).
// Requires a gradient on `param`.
void adamw_step(Tensor& param, OptimizerState& state, double lr);

// Convenience wrapper over a parameter list sharing one hyperparameter set.
class AdamW {
  public:
    AdamW(std::vector<Tensor> params, double beta1 = 0.9, double beta2 = 0.95,
          double eps = 1e-8, double weight_decay = 0.1);

    void step(double lr);
    void zero_grad();
    long step_count() const { return step_count_; }
    std::size_t parameter_count() const { return params_.size(); }

  private:
    std::vector<Tensor> params_;
    std::vector<OptimizerState> states_;
    long step_count_ = 0;
};

// Linear warmup from 0 to peak over `warmup_steps`, then cosine decay from
// peak to min_lr at `total_steps`.
struct LrSchedule {
    double peak_lr = 1e-5;
    long warmup_steps = 100;
    long total_steps = 1000;
    double min_lr = 0.0;
};

double lr_at_step(const LrSchedule& sched, long t);

}  // namespace patchlm
