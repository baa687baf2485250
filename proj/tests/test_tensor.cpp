// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "patchlm/errors.hpp"
#include "patchlm/optim.hpp"
#include "patchlm/tensor.hpp"
#include "test_support.hpp"

using namespace patchlm;
using patchlm::testing::check_gradients;
using patchlm::testing::grad_close;
using patchlm::testing::numeric_grad;

TEST_CASE("matmul identity and small products") {
    Tensor eye = Tensor::from_data({2, 2}, {1, 0, 0, 1});
    Tensor m = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    Tensor prod = matmul(eye, m);
    CHECK(prod.values() == std::vector<double>{1, 2, 3, 4});

    Tensor a = Tensor::from_data({1, 2}, {1, 2});
    Tensor b = Tensor::from_data({2, 1}, {3, 4});
    CHECK(matmul(a, b).item() == doctest::Approx(11.0).epsilon(1e-12));
}

TEST_CASE("matmul shape mismatch names both shapes") {
    Tensor a = Tensor::zeros({2, 3});
    Tensor b = Tensor::zeros({2, 2});
    try {
        matmul(a, b);
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[2x3]") != std::string::npos);
        CHECK(msg.find("[2x2]") != std::string::npos);
    }
}

TEST_CASE("gradient of sum(A.B) wrt A at A=ones, B=I matches finite differences") {
    Tensor a = Tensor::full({2, 2}, 1.0, true);
    Tensor b = Tensor::from_data({2, 2}, {1, 0, 0, 1});
    auto forward = [&] { return sum_all(matmul(a, b)); };

    Tensor loss = forward();
    loss.backward();
    for (double g : a.grad()) CHECK(g == doctest::Approx(1.0).epsilon(1e-12));

    // Frozen expectation from the independent oracle.
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double numeric = numeric_grad(
            [&] {
                NoGradGuard ng;
                return forward().item();
            },
            a.data() + i);
        CHECK(grad_close(a.grad()[i], numeric));
    }
}

TEST_CASE("softmax rows: uniform input, closed form, shift invariance") {
    Tensor x = Tensor::from_data({1, 3}, {0, 0, 0});
    Tensor y = softmax_rows(x);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(y.at(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    Tensor z = softmax_rows(Tensor::from_data({1, 2}, {0.0, std::log(3.0)}));
    CHECK(z.at(0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(z.at(1) == doctest::Approx(0.75).epsilon(1e-12));

    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> vals(8);
        for (double& v : vals) v = rng.uniform() * 2.0 - 1.0;
        const double c = rng.uniform() * 10.0 - 5.0;
        std::vector<double> shifted = vals;
        for (double& v : shifted) v += c;
        Tensor base = softmax_rows(Tensor::from_data({2, 4}, vals));
        Tensor moved = softmax_rows(Tensor::from_data({2, 4}, shifted));
        for (std::size_t i = 0; i < base.size(); ++i)
            CHECK(base.at(i) == doctest::Approx(moved.at(i)).epsilon(1e-12));
    }
}

TEST_CASE("softmax rows sum to one and stay nonnegative") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor x = Tensor::randn({4, 6}, rng, 3.0);
        Tensor y = softmax_rows(x);
        for (std::size_t r = 0; r < 4; ++r) {
            double sum = 0.0;
            for (std::size_t c = 0; c < 6; ++c) {
                CHECK(y.at(r, c) >= 0.0);
                sum += y.at(r, c);
            }
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("softmax rejects non-finite input") {
    Tensor x = Tensor::from_data({1, 2}, {std::nan(""), 0.0});
    CHECK_THROWS_AS(softmax_rows(x), UsageError);
}

TEST_CASE("layer_norm zero-variance limit and mean contract") {
    Tensor gain = Tensor::full({4}, 1.0);
    Tensor bias = Tensor::zeros({4});
    Tensor x = Tensor::full({2, 4}, 3.5);
    Tensor y = layer_norm(x, gain, bias);
    for (std::size_t i = 0; i < y.size(); ++i)
        CHECK(std::abs(y.at(i)) < 1e-9);

    Rng rng(3);
    Tensor b2 = Tensor::from_data({4}, {0.5, -1.0, 2.0, 0.0});
    Tensor x2 = Tensor::randn({3, 4}, rng, 1.0);
    Tensor y2 = layer_norm(x2, gain, b2);
    for (std::size_t r = 0; r < 3; ++r) {
        double mean = 0.0;
        double bias_mean = 0.0;
        for (std::size_t c = 0; c < 4; ++c) {
            mean += y2.at(r, c);
            bias_mean += b2.at(c);
        }
        CHECK(std::abs(mean / 4.0 - bias_mean / 4.0) < 1e-9);
    }
}

TEST_CASE("every differentiable op matches finite differences on random inputs") {
    Rng rng(17);
    Rng probe_rng(18);

    SUBCASE("matmul") {
        Tensor a = Tensor::randn({3, 4}, rng, 0.5, true);
        Tensor b = Tensor::randn({4, 2}, rng, 0.5, true);
        auto fails = check_gradients([&] { return sum_all(gelu(matmul(a, b))); },
                                     {{"a", a}, {"b", b}}, 8, probe_rng);
        CHECK(fails.empty());
    }
    SUBCASE("softmax_rows") {
        Tensor x = Tensor::randn({3, 5}, rng, 1.0, true);
        Tensor w = Tensor::randn({3, 5}, rng, 1.0);
        auto fails = check_gradients([&] { return sum_all(mul(softmax_rows(x), w)); },
                                     {{"x", x}}, 10, probe_rng);
        CHECK(fails.empty());
    }
    SUBCASE("softmax_causal") {
        Tensor x = Tensor::randn({4, 4}, rng, 1.0, true);
        Tensor w = Tensor::randn({4, 4}, rng, 1.0);
        auto fails = check_gradients([&] { return sum_all(mul(softmax_causal(x), w)); },
                                     {{"x", x}}, 10, probe_rng);
        CHECK(fails.empty());
    }
    SUBCASE("layer_norm") {
        Tensor x = Tensor::randn({3, 6}, rng, 1.0, true);
        Tensor gain = Tensor::randn({6}, rng, 0.3, true);
        Tensor bias = Tensor::randn({6}, rng, 0.3, true);
        Tensor w = Tensor::randn({3, 6}, rng, 1.0);
        auto fails = check_gradients(
            [&] { return sum_all(mul(layer_norm(x, gain, bias), w)); },
            {{"x", x}, {"gain", gain}, {"bias", bias}}, 8, probe_rng);
        CHECK(fails.empty());
    }
    SUBCASE("gelu, add_rowvec, scale, transpose, slices, concat") {
        Tensor x = Tensor::randn({4, 6}, rng, 0.8, true);
        Tensor v = Tensor::randn({6}, rng, 0.8, true);
        auto forward = [&] {
            Tensor t1 = add_rowvec(gelu(x), v);
            Tensor t2 = transpose(t1);
            Tensor left = slice_rows(t2, 0, 3);
            Tensor right = slice_rows(t2, 3, 6);
            Tensor joined = concat_cols(std::vector<Tensor>{left, right});
            Tensor cols = concat_rows(std::vector<Tensor>{slice_cols(joined, 0, 4),
                                                          slice_cols(joined, 4, 8)});
            return mean_all(scale(cols, 1.7));
        };
        auto fails = check_gradients(forward, {{"x", x}, {"v", v}}, 10, probe_rng);
        CHECK(fails.empty());
    }
    SUBCASE("embedding and cross entropy") {
        Tensor table = Tensor::randn({7, 4}, rng, 0.5, true);
        Tensor w = Tensor::randn({4, 5}, rng, 0.5, true);
        const std::vector<int> ids{1, 5, 2, 5};
        const std::vector<int> targets{0, 3};
        const std::vector<std::size_t> rows{1, 3};
        auto forward = [&] {
            Tensor logits = matmul(embedding_rows(table, ids), w);
            return cross_entropy_rows(logits, targets, rows);
        };
        auto fails = check_gradients(forward, {{"table", table}, {"w", w}}, 12, probe_rng);
        CHECK(fails.empty());
    }
}

TEST_CASE("adamw zero-gradient step is decay-only") {
    Tensor p = Tensor::from_data({3}, {1.0, -2.0, 0.5}, true);
    {
        Tensor loss = scale(sum_all(p), 0.0);
        loss.backward();
    }
    OptimizerState state;
    state.weight_decay = 0.1;
    adamw_step(p, state, 1e-5);
    CHECK(p.at(0) == doctest::Approx(1.0 * (1.0 - 1e-6)).epsilon(1e-15));
    CHECK(p.at(1) == doctest::Approx(-2.0 * (1.0 - 1e-6)).epsilon(1e-15));
    CHECK(p.at(2) == doctest::Approx(0.5 * (1.0 - 1e-6)).epsilon(1e-15));
    CHECK(state.t == 1);
}

TEST_CASE("adamw first step: hand-computed update") {
    Tensor p = Tensor::from_data({1}, {1.0}, true);
    Tensor grad_src = Tensor::from_data({1}, {1.0});
    Tensor loss = sum_all(mul(p, grad_src));
    loss.backward();
    OptimizerState state;
    state.weight_decay = 0.0;
    adamw_step(p, state, 0.1);
    // m-hat = 1, v-hat = 1; update = lr * 1 / (1 + eps) = 0.1 - O(eps).
    CHECK(p.at(0) == doctest::Approx(0.9).epsilon(1e-7));
}

TEST_CASE("adamw beta2=0.95: v after one step with grad 2") {
    Tensor p = Tensor::from_data({1}, {0.0}, true);
    Tensor grad_src = Tensor::from_data({1}, {2.0});
    sum_all(mul(p, grad_src)).backward();
    OptimizerState state;
    adamw_step(p, state, 0.01);
    CHECK(state.v[0] == doctest::Approx(0.2).epsilon(1e-12));  // (1 - 0.95) * 4
    CHECK(state.m[0] == doctest::Approx(0.2).epsilon(1e-12));  // (1 - 0.9) * 2
}

TEST_CASE("adamw requires a gradient") {
    Tensor p = Tensor::from_data({2}, {1.0, 2.0}, true);
    OptimizerState state;
    CHECK_THROWS_AS(adamw_step(p, state, 0.1), UsageError);
}

TEST_CASE("lr schedule: warmup endpoints, cosine midpoint, range error") {
    LrSchedule sched{1e-5, 100, 1000, 0.0};
    CHECK(lr_at_step(sched, 0) == 0.0);
    CHECK(lr_at_step(sched, 100) == doctest::Approx(1e-5).epsilon(1e-12));
    CHECK(lr_at_step(sched, 550) == doctest::Approx(5e-6).epsilon(1e-12));
    CHECK(lr_at_step(sched, 1000) == doctest::Approx(0.0).epsilon(1e-18));
    CHECK_THROWS_AS(lr_at_step(sched, -1), std::out_of_range);
    CHECK_THROWS_AS(lr_at_step(sched, 1001), std::out_of_range);
}

TEST_CASE("lr schedule is continuous at the warmup boundary") {
    LrSchedule sched{3e-4, 40, 400, 1e-6};
    const double before = lr_at_step(sched, 39);
    const double at = lr_at_step(sched, 40);
    const double after = lr_at_step(sched, 41);
    CHECK(std::abs(at - sched.peak_lr) < 1e-18);
    CHECK(std::abs(at - before) < sched.peak_lr * 0.05);
    CHECK(std::abs(after - at) < sched.peak_lr * 0.05);
}

TEST_CASE("backward accumulates into leaves only while graphs stay alive") {
    Tensor a = Tensor::from_data({2}, {1.0, 2.0}, true);
    sum_all(a).backward();
    sum_all(a).backward();
    CHECK(a.grad()[0] == doctest::Approx(2.0));
    a.zero_grad();
    CHECK(a.grad()[0] == 0.0);
}
