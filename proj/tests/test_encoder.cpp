// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "patchlm/encoder.hpp"
#include "patchlm/errors.hpp"
#include "test_support.hpp"

using namespace patchlm;
using patchlm::testing::check_gradients;

namespace {

EncoderConfig tiny_config() {
    EncoderConfig cfg;
    cfg.window = Window{32, 32};
    cfg.patch_embed_size = 16;  // 2x2 token grid
    cfg.depth = 2;
    cfg.d_model = 16;
    cfg.n_heads = 2;
    cfg.d_mlp = 24;
    cfg.attn_rank = 2;
    cfg.mlp_rank = 3;
    return cfg;
}

ImageTensor noise_image(std::size_t h, std::size_t w, std::uint64_t seed) {
    Rng rng(seed);
    ImageTensor img(h, w);
    for (double& p : img.pixels) p = rng.uniform();
    return img;
}

}  // namespace

TEST_CASE("lora_apply: zero-initialized B leaves the base path untouched") {
    Rng rng(21);
    Tensor w = Tensor::randn({4, 5}, rng, 0.5);
    Tensor x = Tensor::randn({3, 4}, rng, 1.0);
    LoraPair adapter;
    adapter.a = Tensor::randn({4, 2}, rng, 0.5);
    adapter.b = Tensor::zeros({2, 5});
    Tensor with = lora_apply(x, w, adapter, 0.0);
    Tensor without = matmul(x, w);
    CHECK(with.values() == without.values());
}

TEST_CASE("lora_apply: zero base with identity factors is the identity") {
    const std::size_t d = 4;
    Tensor w = Tensor::zeros({d, d});
    std::vector<double> eye(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) eye[i * d + i] = 1.0;
    LoraPair adapter;
    adapter.a = Tensor::from_data({d, d}, eye);
    adapter.b = Tensor::from_data({d, d}, eye);
    Rng rng(22);
    Tensor x = Tensor::randn({2, d}, rng, 1.0);
    Tensor y = lora_apply(x, w, adapter, static_cast<double>(d));
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(y.at(i) == doctest::Approx(x.at(i)).epsilon(1e-12));
}

TEST_CASE("lora gradients flow to the factors but not the frozen base") {
    Rng rng(23);
    Rng probe(24);
    Tensor w = Tensor::randn({4, 4}, rng, 0.5, false);  // frozen
    Tensor x = Tensor::randn({3, 4}, rng, 1.0, false);
    LoraPair adapter;
    adapter.a = Tensor::randn({4, 2}, rng, 0.5, true);
    adapter.b = Tensor::randn({2, 4}, rng, 0.5, true);

    auto forward = [&] { return sum_all(gelu(lora_apply(x, w, adapter, 0.0))); };
    auto fails = check_gradients(forward, {{"A", adapter.a}, {"B", adapter.b}}, 8, probe);
    CHECK(fails.empty());
    CHECK(!w.has_grad());
}

TEST_CASE("encode is a pure function of pixels and adapter") {
    const EncoderConfig cfg = tiny_config();
    Rng rng(31);
    const Encoder enc = Encoder::init(cfg, rng);
    const AdapterBank bank = make_adapter_bank(cfg, 2, rng);
    const ImageTensor crop = noise_image(32, 32, 77);

    const PatchFeatures a = enc.encode(crop, &bank.at(0), CropSource{false, 0, 0});
    const PatchFeatures b = enc.encode(crop, &bank.at(0), CropSource{false, 1, 1});
    CHECK(a.tokens.values() == b.tokens.values());
    CHECK(a.tokens.rows() == cfg.tokens_per_crop());
    CHECK(a.tokens.cols() == cfg.d_model);
}

TEST_CASE("zero-initialized adapters reproduce the unadapted path bit-exactly") {
    const EncoderConfig cfg = tiny_config();
    Rng rng(32);
    const Encoder enc = Encoder::init(cfg, rng);
    const AdapterBank bank = make_adapter_bank(cfg, 3, rng);
    const ImageTensor crop = noise_image(32, 32, 78);

    const PatchFeatures none = enc.encode(crop, nullptr);
    for (std::size_t i = 0; i < bank.n_adapters(); ++i) {
        const PatchFeatures adapted = enc.encode(crop, &bank.at(i));
        CHECK(adapted.tokens.values() == none.tokens.values());
    }
}

TEST_CASE("unknown adapter id raises an index error") {
    const EncoderConfig cfg = tiny_config();
    Rng rng(33);
    const AdapterBank bank = make_adapter_bank(cfg, 2, rng);
    CHECK_THROWS_AS(bank.at(2), IndexError);
}

TEST_CASE("token count is fixed by the config, not the image") {
    const EncoderConfig cfg = tiny_config();
    Rng rng(34);
    const Encoder enc = Encoder::init(cfg, rng);
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const PatchFeatures f = enc.encode(noise_image(32, 32, seed), nullptr);
        CHECK(f.tokens.rows() == cfg.tokens_per_crop());
    }
    // Wrong crop size is rejected rather than silently re-tokenized.
    CHECK_THROWS_AS(enc.encode(noise_image(64, 64, 4), nullptr), DimensionError);
}

TEST_CASE("adapter_param_count: closed form and exhaustive enumeration agree") {
    SUBCASE("single 64x64 attention matrix analog") {
        EncoderConfig cfg;
        cfg.window = Window{16, 16};
        cfg.patch_embed_size = 16;
        cfg.depth = 1;
        cfg.d_model = 64;
        cfg.n_heads = 4;
        cfg.d_mlp = 8;
        cfg.attn_rank = 16;
        cfg.mlp_rank = 0;
        // Four adapted attention matrices per layer, each 16 * (64 + 64).
        CHECK(adapter_param_count(cfg, 1) == 4 * 16 * (64 + 64));
        CHECK(adapter_param_count(cfg, 1) / 4 == 2048);
    }
    SUBCASE("rank zero everywhere allocates nothing") {
        EncoderConfig cfg = tiny_config();
        cfg.attn_rank = 0;
        cfg.mlp_rank = 0;
        CHECK(adapter_param_count(cfg, 4) == 0);
        Rng rng(35);
        const AdapterBank bank = make_adapter_bank(cfg, 4, rng);
        CHECK(bank.named_parameters().empty());
    }
    SUBCASE("toy config cross-checked against every allocated tensor") {
        EncoderConfig cfg;
        cfg.window = Window{64, 64};
        cfg.patch_embed_size = 16;
        cfg.depth = 2;
        cfg.d_model = 32;
        cfg.n_heads = 4;
        cfg.d_mlp = 64;
        cfg.attn_rank = 4;
        cfg.mlp_rank = 8;
        Rng rng(36);
        const AdapterBank bank = make_adapter_bank(cfg, 4, rng);
        std::size_t enumerated = 0;
        for (const auto& [name, t] : bank.named_parameters()) enumerated += t.size();
        CHECK(enumerated == adapter_param_count(cfg, 4));
    }
}

TEST_CASE("adapter storage grows linearly while the base stays single") {
    const EncoderConfig cfg = tiny_config();
    Rng rng(37);
    const Encoder enc = Encoder::init(cfg, rng);
    const std::size_t base_params = enc.named_parameters().size();

    Rng rng1(38), rng2(38);
    const AdapterBank one = make_adapter_bank(cfg, 1, rng1);
    const AdapterBank six = make_adapter_bank(cfg, 6, rng2);
    std::size_t one_count = 0, six_count = 0;
    for (const auto& [n, t] : one.named_parameters()) one_count += t.size();
    for (const auto& [n, t] : six.named_parameters()) six_count += t.size();
    CHECK(six_count == 6 * one_count);
    CHECK(enc.named_parameters().size() == base_params);  // unchanged by banks
}

TEST_CASE("trainability policy freezes the base and exposes the adapters") {
    const EncoderConfig cfg = tiny_config();
    Rng rng(39);
    Encoder enc = Encoder::init(cfg, rng);
    AdapterBank bank = make_adapter_bank(cfg, 2, rng);

    set_trainability(enc, bank, TrainabilityPolicy{true, true});
    for (const auto& [name, t] : enc.named_parameters()) CHECK(!t.requires_grad());
    for (const auto& [name, t] : bank.named_parameters()) CHECK(t.requires_grad());

    set_trainability(enc, bank, TrainabilityPolicy{true, false});
    std::size_t trainable = 0;
    for (const auto& [name, t] : enc.named_parameters()) trainable += t.requires_grad();
    for (const auto& [name, t] : bank.named_parameters()) trainable += t.requires_grad();
    CHECK(trainable == 0);

    set_trainability(enc, bank, TrainabilityPolicy{false, true});
    for (const auto& [name, t] : enc.named_parameters()) CHECK(t.requires_grad());
}

TEST_CASE("positional interpolation: identity, ramp center, grid doubling") {
    EncoderConfig cfg = tiny_config();
    Rng rng(40);

    SUBCASE("same grid leaves the table identical") {
        Encoder enc = Encoder::init(cfg, rng);
        const auto before = enc.named_parameters();
        Tensor pos_before;
        for (const auto& [name, t] : before)
            if (name == "encoder/pos_embed") pos_before = t;
        const std::vector<double> values = pos_before.values();
        enc.interpolate_pos_embed(enc.pos_rows(), enc.pos_cols());
        Tensor pos_after;
        for (const auto& [name, t] : enc.named_parameters())
            if (name == "encoder/pos_embed") pos_after = t;
        CHECK(pos_after.values() == values);
    }

    SUBCASE("2x2 to 3x3 on a linear ramp: center equals the corner mean") {
        Encoder enc = Encoder::init(cfg, rng);
        Tensor pos;
        for (const auto& [name, t] : enc.named_parameters())
            if (name == "encoder/pos_embed") pos = t;
        REQUIRE(pos.rows() == 4);  // 2x2 grid
        const double corners[4] = {0.0, 1.0, 2.0, 5.0};
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < cfg.d_model; ++c)
                pos.at(r, c) = corners[r] + static_cast<double>(c);
        enc.interpolate_pos_embed(3, 3);
        Tensor interp;
        for (const auto& [name, t] : enc.named_parameters())
            if (name == "encoder/pos_embed") interp = t;
        REQUIRE(interp.rows() == 9);
        for (std::size_t c = 0; c < cfg.d_model; ++c) {
            const double expected = (corners[0] + corners[1] + corners[2] + corners[3]) / 4.0 +
                                    static_cast<double>(c);
            CHECK(interp.at(4, c) == doctest::Approx(expected).epsilon(1e-12));
        }
    }

    SUBCASE("doubling the grid quadruples positional rows and token count") {
        Encoder enc = Encoder::init(cfg, rng);
        const std::size_t rows = enc.pos_rows(), cols = enc.pos_cols();
        enc.interpolate_pos_embed(rows * 2, cols * 2);
        Tensor pos;
        for (const auto& [name, t] : enc.named_parameters())
            if (name == "encoder/pos_embed") pos = t;
        CHECK(pos.rows() == 4 * rows * cols);
        const PatchFeatures f = enc.encode(noise_image(64, 64, 5), nullptr);
        CHECK(f.tokens.rows() == 4 * rows * cols);
    }
}

TEST_CASE("encoder gradients through a full adapted block match finite differences") {
    EncoderConfig cfg = tiny_config();
    cfg.depth = 1;
    Rng rng(41);
    Rng probe(42);
    Encoder enc = Encoder::init(cfg, rng);
    AdapterBank bank = make_adapter_bank(cfg, 1, rng);
    // Give B nonzero values so its branch is active in the check.
    for (auto& [name, t] : bank.named_parameters()) {
        Tensor copy = t;
        if (name.ends_with("/b"))
            for (std::size_t i = 0; i < copy.size(); ++i) copy.at(i) = 0.01 * (i % 5);
    }
    set_trainability(enc, bank, TrainabilityPolicy{true, true});
    const ImageTensor crop = noise_image(32, 32, 99);

    auto forward = [&] { return mean_all(enc.encode(crop, &bank.at(0)).tokens); };
    auto fails = check_gradients(forward, bank.named_parameters(), 4, probe);
    CHECK(fails.empty());
    for (const auto& [name, t] : enc.named_parameters()) CHECK(!t.has_grad());
}
