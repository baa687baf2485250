// SPDX-License-Identifier: Apache-2.0
#include "patchlm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_set>

#include "patchlm/errors.hpp"

namespace patchlm {

using detail::TensorNode;

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

namespace {

thread_local int g_no_grad_depth = 0;

std::shared_ptr<TensorNode> make_node(Shape shape, std::vector<double> value, bool requires_grad) {
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    node->requires_grad = requires_grad;
    return node;
}

void check_positive_extents(const Shape& shape) {
    for (std::size_t e : shape) {
        if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape));
    }
}

// Builds the result node of an op. Parents and the backprop hook are attached
// only when some parent needs gradients and grad mode is on.
Tensor make_op_result(Shape shape, std::vector<double> value,
                      std::vector<std::shared_ptr<TensorNode>> parents,
                      std::function<void(TensorNode&)> backprop) {
    bool needs = false;
    if (g_no_grad_depth == 0) {
        for (const auto& p : parents)
            if (p->requires_grad) needs = true;
    }
    auto node = make_node(std::move(shape), std::move(value), needs);
    if (needs) {
        node->parents = std::move(parents);
        node->backprop = std::move(backprop);
    }
    return Tensor::wrap(std::move(node));
}

void require_matrix(const Tensor& t, const char* role) {
    if (t.ndim() != 2)
        throw DimensionError(std::string(role) + " must be 2-D, got " + shape_str(t.shape()));
}

}  // namespace

bool grad_enabled() { return g_no_grad_depth == 0; }

NoGradGuard::NoGradGuard() { ++g_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --g_no_grad_depth; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    check_positive_extents(shape);
    std::size_t n = shape_numel(shape);
    return Tensor(make_node(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

Tensor Tensor::full(Shape shape, double fill, bool requires_grad) {
    check_positive_extents(shape);
    std::size_t n = shape_numel(shape);
    return Tensor(make_node(std::move(shape), std::vector<double>(n, fill), requires_grad));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
    check_positive_extents(shape);
    if (shape_numel(shape) != data.size())
        throw DimensionError("data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
    return Tensor(make_node(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return Tensor(make_node({1}, {v}, requires_grad));
}

Tensor Tensor::randn(Shape shape, Rng& rng, double stddev, bool requires_grad) {
    check_positive_extents(shape);
    std::size_t n = shape_numel(shape);
    std::vector<double> data(n);
    for (double& x : data) x = rng.normal(0.0, stddev);
    return Tensor(make_node(std::move(shape), std::move(data), requires_grad));
}

std::size_t Tensor::rows() const {
    std::size_t c = cols();
    return c == 0 ? 0 : size() / c;
}

double Tensor::item() const {
    if (size() != 1) throw UsageError("item() requires a single-element tensor, got " + shape_str(shape()));
    return node_->value[0];
}

void Tensor::set_requires_grad(bool flag) {
    node_->requires_grad = flag;
    if (!flag) node_->grad.clear();
}

std::vector<double>& Tensor::grad() {
    if (node_->grad.empty())
        throw UsageError("gradient missing; run backward() first");
    return node_->grad;
}

const std::vector<double>& Tensor::grad() const {
    if (node_->grad.empty())
        throw UsageError("gradient missing; run backward() first");
    return node_->grad;
}

void Tensor::zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::backward() {
    if (!node_) throw UsageError("backward() on an undefined tensor");
    if (size() != 1) throw UsageError("backward() requires a scalar root, got " + shape_str(shape()));
    if (!node_->requires_grad)
        throw UsageError("backward() root does not require gradients");

    // Iterative post-order over the grad-requiring subgraph.
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> visited;
    std::vector<std::pair<TensorNode*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [node, next_child] = stack.back();
        if (next_child < node->parents.size()) {
            TensorNode* parent = node->parents[next_child++].get();
            if (parent->requires_grad && !visited.count(parent)) {
                visited.insert(parent);
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    node_->ensure_grad();
    node_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode* node = *it;
        if (node->backprop && !node->grad.empty()) node->backprop(*node);
    }
}

// ---- ops ----

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul lhs");
    require_matrix(b, "matmul rhs");
    const std::size_t m = a.extent(0), k = a.extent(1), k2 = b.extent(0), n = b.extent(1);
    if (k != k2)
        throw DimensionError("matmul inner extents differ: " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    std::vector<double> out(m * n, 0.0);
    {
        const double* A = a.data();
        const double* B = b.data();
        double* C = out.data();
        for (std::size_t i = 0; i < m; ++i) {
            const double* arow = A + i * k;
            double* crow = C + i * n;
            for (std::size_t l = 0; l < k; ++l) {
                const double av = arow[l];
                if (av == 0.0) continue;
                const double* brow = B + l * n;
                for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    }
    auto an = a.node_ptr();
    auto bn = b.node_ptr();
    return make_op_result(
        {m, n}, std::move(out), {an, bn}, [an, bn, m, k, n](TensorNode& self) {
            const double* G = self.grad.data();
            if (an->requires_grad) {
                an->ensure_grad();
                double* dA = an->grad.data();
                const double* B = bn->value.data();
                // dA[i,l] += sum_j G[i,j] * B[l,j]
                for (std::size_t i = 0; i < m; ++i) {
                    const double* grow = G + i * n;
                    double* darow = dA + i * k;
                    for (std::size_t l = 0; l < k; ++l) {
                        const double* brow = B + l * n;
                        double acc = 0.0;
                        for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                        darow[l] += acc;
                    }
                }
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                double* dB = bn->grad.data();
                const double* A = an->value.data();
                // dB[l,j] += sum_i A[i,l] * G[i,j]
                for (std::size_t i = 0; i < m; ++i) {
                    const double* arow = A + i * k;
                    const double* grow = G + i * n;
                    for (std::size_t l = 0; l < k; ++l) {
                        const double av = arow[l];
                        if (av == 0.0) continue;
                        double* dbrow = dB + l * n;
                        for (std::size_t j = 0; j < n; ++j) dbrow[j] += av * grow[j];
                    }
                }
            }
        });
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw DimensionError(std::string(op) + " shape mismatch: " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + b.at(i);
    auto an = a.node_ptr();
    auto bn = b.node_ptr();
    return make_op_result(a.shape(), std::move(out), {an, bn}, [an, bn](TensorNode& self) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] += self.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) - b.at(i);
    auto an = a.node_ptr();
    auto bn = b.node_ptr();
    return make_op_result(a.shape(), std::move(out), {an, bn}, [an, bn](TensorNode& self) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] -= self.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * b.at(i);
    auto an = a.node_ptr();
    auto bn = b.node_ptr();
    return make_op_result(a.shape(), std::move(out), {an, bn}, [an, bn](TensorNode& self) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                an->grad[i] += self.grad[i] * bn->value[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                bn->grad[i] += self.grad[i] * an->value[i];
        }
    });
}

Tensor scale(const Tensor& a, double c) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * c;
    auto an = a.node_ptr();
    return make_op_result(a.shape(), std::move(out), {an}, [an, c](TensorNode& self) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] * c;
    });
}

Tensor add_rowvec(const Tensor& a, const Tensor& v) {
    const std::size_t n = a.cols();
    if (v.size() != n)
        throw DimensionError("add_rowvec width mismatch: " + shape_str(a.shape()) + " vs " +
                             shape_str(v.shape()));
    const std::size_t m = a.rows();
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = a.at(i * n + j) + v.at(j);
    auto an = a.node_ptr();
    auto vn = v.node_ptr();
    return make_op_result(a.shape(), std::move(out), {an, vn}, [an, vn, m, n](TensorNode& self) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
        }
        if (vn->requires_grad) {
            vn->ensure_grad();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) vn->grad[j] += self.grad[i * n + j];
        }
    });
}

namespace {

// Shared forward/backward for full and causal row softmax. `width(i)` gives
// the number of attended columns in row i.
template <typename WidthFn>
Tensor softmax_impl(const Tensor& x, WidthFn width) {
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t w = width(i);
        const double* row = x.data() + i * n;
        double mx = row[0];
        for (std::size_t j = 1; j < w; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < w; ++j) {
            out[i * n + j] = std::exp(row[j] - mx);
            denom += out[i * n + j];
        }
        for (std::size_t j = 0; j < w; ++j) out[i * n + j] /= denom;
    }
    auto xn = x.node_ptr();
    return make_op_result(x.shape(), std::move(out), {xn}, [xn, m, n, width](TensorNode& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t w = width(i);
            const double* y = self.value.data() + i * n;
            const double* dy = self.grad.data() + i * n;
            double dot = 0.0;
            for (std::size_t j = 0; j < w; ++j) dot += dy[j] * y[j];
            double* dx = xn->grad.data() + i * n;
            for (std::size_t j = 0; j < w; ++j) dx[j] += y[j] * (dy[j] - dot);
        }
    });
}

}  // namespace

Tensor softmax_rows(const Tensor& x) {
    const std::size_t n = x.cols();
    for (double v : x.values())
        if (!std::isfinite(v)) throw UsageError("softmax_rows: non-finite input");
    return softmax_impl(x, [n](std::size_t) { return n; });
}

Tensor softmax_causal(const Tensor& x) {
    require_matrix(x, "softmax_causal input");
    if (x.extent(0) != x.extent(1))
        throw DimensionError("softmax_causal requires a square matrix, got " + shape_str(x.shape()));
    return softmax_impl(x, [](std::size_t i) { return i + 1; });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias) {
    const std::size_t d = x.cols();
    if (gain.size() != d || bias.size() != d)
        throw DimensionError("layer_norm affine width mismatch: x " + shape_str(x.shape()) +
                             ", gain " + shape_str(gain.shape()) + ", bias " + shape_str(bias.shape()));
    const std::size_t m = x.rows();
    std::vector<double> out(x.size());
    std::vector<double> normalized(x.size());
    std::vector<double> inv_sigma(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = x.data() + i * d;
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += row[j];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double c = row[j] - mean;
            var += c * c;
        }
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        inv_sigma[i] = inv;
        for (std::size_t j = 0; j < d; ++j) {
            const double y = (row[j] - mean) * inv;
            normalized[i * d + j] = y;
            out[i * d + j] = gain.at(j) * y + bias.at(j);
        }
    }
    auto xn = x.node_ptr();
    auto gn = gain.node_ptr();
    auto bn = bias.node_ptr();
    return make_op_result(
        x.shape(), std::move(out), {xn, gn, bn},
        [xn, gn, bn, m, d, normalized = std::move(normalized),
         inv_sigma = std::move(inv_sigma)](TensorNode& self) {
            if (gn->requires_grad) {
                gn->ensure_grad();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < d; ++j)
                        gn->grad[j] += self.grad[i * d + j] * normalized[i * d + j];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < d; ++j) bn->grad[j] += self.grad[i * d + j];
            }
            if (xn->requires_grad) {
                xn->ensure_grad();
                for (std::size_t i = 0; i < m; ++i) {
                    const double* dy = self.grad.data() + i * d;
                    const double* y = normalized.data() + i * d;
                    double sum_g = 0.0, sum_gy = 0.0;
                    for (std::size_t j = 0; j < d; ++j) {
                        const double gj = dy[j] * gn->value[j];
                        sum_g += gj;
                        sum_gy += gj * y[j];
                    }
                    const double inv = inv_sigma[i];
                    const double inv_d = 1.0 / static_cast<double>(d);
                    double* dx = xn->grad.data() + i * d;
                    for (std::size_t j = 0; j < d; ++j) {
                        const double gj = dy[j] * gn->value[j];
                        dx[j] += inv * (gj - sum_g * inv_d - y[j] * sum_gy * inv_d);
                    }
                }
            }
        });
}

Tensor gelu(const Tensor& x) {
    constexpr double inv_sqrt2 = std::numbers::sqrt2 / 2.0;
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = x.at(i);
        out[i] = 0.5 * v * (1.0 + std::erf(v * inv_sqrt2));
    }
    auto xn = x.node_ptr();
    return make_op_result(x.shape(), std::move(out), {xn}, [xn](TensorNode& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        constexpr double inv_sqrt2 = std::numbers::sqrt2 / 2.0;
        const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double v = xn->value[i];
            const double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
            const double pdf = inv_sqrt2pi * std::exp(-0.5 * v * v);
            xn->grad[i] += self.grad[i] * (cdf + v * pdf);
        }
    });
}

Tensor transpose(const Tensor& x) {
    require_matrix(x, "transpose input");
    const std::size_t m = x.extent(0), n = x.extent(1);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = x.at(i * n + j);
    auto xn = x.node_ptr();
    return make_op_result({n, m}, std::move(out), {xn}, [xn, m, n](TensorNode& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) xn->grad[i * n + j] += self.grad[j * m + i];
    });
}

Tensor concat_rows(std::span<const Tensor> parts) {
    if (parts.empty()) throw UsageError("concat_rows: no parts");
    const std::size_t n = parts[0].cols();
    std::size_t total_rows = 0;
    for (const Tensor& p : parts) {
        if (p.cols() != n)
            throw DimensionError("concat_rows width mismatch: " + shape_str(p.shape()));
        total_rows += p.rows();
    }
    std::vector<double> out;
    out.reserve(total_rows * n);
    std::vector<std::shared_ptr<TensorNode>> parents;
    parents.reserve(parts.size());
    for (const Tensor& p : parts) {
        out.insert(out.end(), p.values().begin(), p.values().end());
        parents.push_back(p.node_ptr());
    }
    auto parent_copy = parents;
    return make_op_result({total_rows, n}, std::move(out), std::move(parents),
                          [parent_copy = std::move(parent_copy)](TensorNode& self) {
                              std::size_t offset = 0;
                              for (const auto& p : parent_copy) {
                                  const std::size_t len = p->value.size();
                                  if (p->requires_grad) {
                                      p->ensure_grad();
                                      for (std::size_t i = 0; i < len; ++i)
                                          p->grad[i] += self.grad[offset + i];
                                  }
                                  offset += len;
                              }
                          });
}

Tensor concat_cols(std::span<const Tensor> parts) {
    if (parts.empty()) throw UsageError("concat_cols: no parts");
    const std::size_t m = parts[0].rows();
    std::size_t total_cols = 0;
    for (const Tensor& p : parts) {
        if (p.rows() != m)
            throw DimensionError("concat_cols height mismatch: " + shape_str(p.shape()));
        total_cols += p.cols();
    }
    std::vector<double> out(m * total_cols);
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::vector<std::size_t> widths;
    std::size_t col0 = 0;
    for (const Tensor& p : parts) {
        const std::size_t w = p.cols();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < w; ++j) out[i * total_cols + col0 + j] = p.at(i * w + j);
        parents.push_back(p.node_ptr());
        widths.push_back(w);
        col0 += w;
    }
    auto parent_copy = parents;
    return make_op_result(
        {m, total_cols}, std::move(out), std::move(parents),
        [parent_copy = std::move(parent_copy), widths = std::move(widths), m,
         total_cols](TensorNode& self) {
            std::size_t col0 = 0;
            for (std::size_t pi = 0; pi < parent_copy.size(); ++pi) {
                const auto& p = parent_copy[pi];
                const std::size_t w = widths[pi];
                if (p->requires_grad) {
                    p->ensure_grad();
                    for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t j = 0; j < w; ++j)
                            p->grad[i * w + j] += self.grad[i * total_cols + col0 + j];
                }
                col0 += w;
            }
        });
}

Tensor slice_rows(const Tensor& x, std::size_t r0, std::size_t r1) {
    const std::size_t m = x.rows(), n = x.cols();
    if (r0 >= r1 || r1 > m)
        throw IndexError("slice_rows [" + std::to_string(r0) + "," + std::to_string(r1) +
                         ") out of range for " + shape_str(x.shape()));
    std::vector<double> out(x.values().begin() + static_cast<std::ptrdiff_t>(r0 * n),
                            x.values().begin() + static_cast<std::ptrdiff_t>(r1 * n));
    auto xn = x.node_ptr();
    return make_op_result({r1 - r0, n}, std::move(out), {xn}, [xn, r0, n](TensorNode& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) xn->grad[r0 * n + i] += self.grad[i];
    });
}

Tensor slice_cols(const Tensor& x, std::size_t c0, std::size_t c1) {
    const std::size_t m = x.rows(), n = x.cols();
    if (c0 >= c1 || c1 > n)
        throw IndexError("slice_cols [" + std::to_string(c0) + "," + std::to_string(c1) +
                         ") out of range for " + shape_str(x.shape()));
    const std::size_t w = c1 - c0;
    std::vector<double> out(m * w);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < w; ++j) out[i * w + j] = x.at(i * n + c0 + j);
    auto xn = x.node_ptr();
    return make_op_result({m, w}, std::move(out), {xn}, [xn, c0, m, n, w](TensorNode& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < w; ++j)
                xn->grad[i * n + c0 + j] += self.grad[i * w + j];
    });
}

Tensor embedding_rows(const Tensor& table, std::span<const int> ids) {
    require_matrix(table, "embedding table");
    if (ids.empty()) throw UsageError("embedding_rows: empty id list");
    const std::size_t v = table.extent(0), d = table.extent(1);
    std::vector<double> out(ids.size() * d);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const int id = ids[i];
        if (id < 0 || static_cast<std::size_t>(id) >= v)
            throw IndexError("embedding id " + std::to_string(id) + " out of range [0," +
                             std::to_string(v) + ")");
        const double* row = table.data() + static_cast<std::size_t>(id) * d;
        std::copy(row, row + d, out.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
    auto tn = table.node_ptr();
    std::vector<int> id_copy(ids.begin(), ids.end());
    return make_op_result({ids.size(), d}, std::move(out), {tn},
                          [tn, id_copy = std::move(id_copy), d](TensorNode& self) {
                              if (!tn->requires_grad) return;
                              tn->ensure_grad();
                              for (std::size_t i = 0; i < id_copy.size(); ++i) {
                                  double* dst = tn->grad.data() +
                                                static_cast<std::size_t>(id_copy[i]) * d;
                                  const double* src = self.grad.data() + i * d;
                                  for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
                              }
                          });
}

Tensor sum_all(const Tensor& x) {
    double total = 0.0;
    for (double v : x.values()) total += v;
    auto xn = x.node_ptr();
    return make_op_result({1}, {total}, {xn}, [xn](TensorNode& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (double& g : xn->grad) g += self.grad[0];
    });
}

Tensor mean_all(const Tensor& x) {
    return scale(sum_all(x), 1.0 / static_cast<double>(x.size()));
}

Tensor cross_entropy_rows(const Tensor& logits, std::span<const int> targets,
                          std::span<const std::size_t> rows) {
    require_matrix(logits, "cross_entropy logits");
    if (targets.empty()) throw UsageError("cross_entropy_rows: empty target list");
    if (targets.size() != rows.size())
        throw UsageError("cross_entropy_rows: targets and rows differ in length");
    const std::size_t m = logits.extent(0), v = logits.extent(1);
    const double inv_n = 1.0 / static_cast<double>(targets.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (rows[i] >= m) throw IndexError("cross_entropy row index out of range");
        const int t = targets[i];
        if (t < 0 || static_cast<std::size_t>(t) >= v)
            throw IndexError("cross_entropy target out of range");
        const double* row = logits.data() + rows[i] * v;
        double mx = row[0];
        for (std::size_t j = 1; j < v; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < v; ++j) denom += std::exp(row[j] - mx);
        loss += (mx + std::log(denom)) - row[static_cast<std::size_t>(t)];
    }
    loss *= inv_n;
    auto ln = logits.node_ptr();
    std::vector<int> tcopy(targets.begin(), targets.end());
    std::vector<std::size_t> rcopy(rows.begin(), rows.end());
    return make_op_result(
        {1}, {loss}, {ln},
        [ln, tcopy = std::move(tcopy), rcopy = std::move(rcopy), v, inv_n](TensorNode& self) {
            if (!ln->requires_grad) return;
            ln->ensure_grad();
            const double gscale = self.grad[0] * inv_n;
            for (std::size_t i = 0; i < tcopy.size(); ++i) {
                const double* row = ln->value.data() + rcopy[i] * v;
                double* drow = ln->grad.data() + rcopy[i] * v;
                double mx = row[0];
                for (std::size_t j = 1; j < v; ++j) mx = std::max(mx, row[j]);
                double denom = 0.0;
                for (std::size_t j = 0; j < v; ++j) denom += std::exp(row[j] - mx);
                for (std::size_t j = 0; j < v; ++j) {
                    double p = std::exp(row[j] - mx) / denom;
                    if (j == static_cast<std::size_t>(tcopy[i])) p -= 1.0;
                    drow[j] += gscale * p;
                }
            }
        });
}

}  // namespace patchlm
