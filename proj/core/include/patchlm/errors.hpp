// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>

namespace patchlm {

// Shape or width disagreement between tensors or configs.
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// API misuse: missing gradient, empty target, invalid field combination.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Hard capacity limits: the six-local-patch cap, LM sequence length.
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IndexError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace patchlm
