// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "patchlm/rng.hpp"

namespace patchlm {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct TensorNode {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backprop;

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

}  // namespace detail

// Dense 64-bit real tensor with reverse-mode automatic differentiation.
// A Tensor is a handle: copies share storage and the same graph node.
// Graphs are built dynamically by the free-function ops below and torn
// down when the result handles go out of scope; leaf tensors (parameters)
// keep their accumulated gradients across graphs.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double fill, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);
    static Tensor randn(Shape shape, Rng& rng, double stddev, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t ndim() const { return node_->shape.size(); }
    std::size_t size() const { return node_->value.size(); }
    std::size_t extent(std::size_t dim) const { return node_->shape[dim]; }
    // Rows/cols of a matrix-like tensor: all leading dims fold into rows.
    std::size_t rows() const;
    std::size_t cols() const { return node_->shape.empty() ? 1 : node_->shape.back(); }

    double* data() { return node_->value.data(); }
    const double* data() const { return node_->value.data(); }
    std::vector<double>& values() { return node_->value; }
    const std::vector<double>& values() const { return node_->value; }
    double item() const;

    double at(std::size_t i) const { return node_->value[i]; }
    double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
    double& at(std::size_t i) { return node_->value[i]; }
    double& at(std::size_t r, std::size_t c) { return node_->value[r * cols() + c]; }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool flag);
    bool has_grad() const { return node_ && !node_->grad.empty(); }
    std::vector<double>& grad();
    const std::vector<double>& grad() const;
    void zero_grad();

    // Reverse-mode sweep from a scalar root. Accumulates into leaf grads.
    void backward();

    bool same_node(const Tensor& other) const { return node_ == other.node_; }

    detail::TensorNode* node() const { return node_.get(); }
    std::shared_ptr<detail::TensorNode> node_ptr() const { return node_; }
    static Tensor wrap(std::shared_ptr<detail::TensorNode> node) { return Tensor(std::move(node)); }

  private:
    explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}
    std::shared_ptr<detail::TensorNode> node_;
};

// Scoped switch that disables graph construction (inference, FD probes).
class NoGradGuard {
  public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

bool grad_enabled();

// ---- differentiable ops ----

// [m x k] . [k x n] -> [m x n]
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
// Broadcast a length-n vector over every row of [m x n].
Tensor add_rowvec(const Tensor& a, const Tensor& v);
// Row-wise softmax with per-row max subtraction.
Tensor softmax_rows(const Tensor& x);
// Square input; row i attends to columns 0..i only.
Tensor softmax_causal(const Tensor& x);
// Per-row normalization over the last dim, epsilon 1e-5, then affine.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias);
Tensor gelu(const Tensor& x);
Tensor transpose(const Tensor& x);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_rows(const Tensor& x, std::size_t r0, std::size_t r1);
Tensor slice_cols(const Tensor& x, std::size_t c0, std::size_t c1);
// Gather rows of `table` by id; backward scatters.
Tensor embedding_rows(const Tensor& table, std::span<const int> ids);
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);
// Mean cross-entropy of logits[rows[i]] against targets[i]; stable logsumexp.
// Gradient flows to the selected logit rows only.
Tensor cross_entropy_rows(const Tensor& logits, std::span<const int> targets,
                          std::span<const std::size_t> rows);

constexpr double kLayerNormEps = 1e-5;

}  // namespace patchlm
