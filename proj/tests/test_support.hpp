// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "patchlm/tensor.hpp"

namespace patchlm::testing {

// Central finite differences, h = 1e-5. Independent of the autograd path:
// it only ever reads forward values.
inline double numeric_grad(const std::function<double()>& eval, double* slot) {
    constexpr double h = 1e-5;
    const double orig = *slot;
    *slot = orig + h;
    const double fp = eval();
    *slot = orig - h;
    const double fm = eval();
    *slot = orig;
    return (fp - fm) / (2.0 * h);
}

inline bool grad_close(double analytic, double numeric, double tol = 1e-4) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / denom < tol;
}

struct GradCheckFailure {
    std::string tensor;
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

// Verifies autograd against the finite-difference oracle on up to
// `probes_per_tensor` elements of every listed tensor. `forward` must
// rebuild the graph from the same leaves on every call.
inline std::vector<GradCheckFailure> check_gradients(
    const std::function<Tensor()>& forward,
    const std::vector<std::pair<std::string, Tensor>>& leaves,
    std::size_t probes_per_tensor, Rng& rng, double tol = 1e-4) {
    for (const auto& [name, t] : leaves) {
        Tensor copy = t;
        copy.zero_grad();
    }
    Tensor loss = forward();
    loss.backward();

    const auto eval = [&forward]() {
        NoGradGuard no_grad;
        return forward().item();
    };

    std::vector<GradCheckFailure> failures;
    for (const auto& [name, t] : leaves) {
        Tensor tensor = t;
        const std::size_t n = tensor.size();
        std::vector<std::size_t> picks;
        if (n <= probes_per_tensor) {
            for (std::size_t i = 0; i < n; ++i) picks.push_back(i);
        } else {
            picks = rng.sample_without_replacement(n, probes_per_tensor);
        }
        const std::vector<double> grad =
            tensor.has_grad() ? tensor.grad() : std::vector<double>(n, 0.0);
        for (std::size_t idx : picks) {
            const double numeric = numeric_grad(eval, tensor.data() + idx);
            const double analytic = grad[idx];
            if (!grad_close(analytic, numeric, tol))
                failures.push_back({name, idx, analytic, numeric});
        }
    }
    return failures;
}

}  // namespace patchlm::testing
