// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "patchlm/errors.hpp"
#include "patchlm/resampler.hpp"
#include "test_support.hpp"

using namespace patchlm;
using patchlm::testing::check_gradients;

namespace {

ResamplerConfig tiny_config() {
    ResamplerConfig cfg;
    cfg.n_queries = 4;
    cfg.d_model = 8;
    cfg.n_heads = 2;
    return cfg;
}

PatchFeatures random_feats(std::size_t tokens, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    return PatchFeatures{Tensor::randn({tokens, d}, rng, 1.0), {}};
}

Tensor named(const NamedTensors& params, const std::string& name) {
    for (const auto& [n, t] : params)
        if (n == name) return t;
    throw std::runtime_error("missing " + name);
}

}  // namespace

TEST_CASE("output length is n_queries regardless of input token count") {
    const ResamplerConfig cfg = tiny_config();
    Rng rng(51);
    const Resampler resampler = Resampler::init(cfg, rng);
    for (std::size_t tokens : {1UL, 16UL, 1024UL}) {
        const Tensor out = resampler.resample(random_feats(tokens, cfg.d_model, tokens));
        CHECK(out.rows() == cfg.n_queries);
        CHECK(out.cols() == cfg.d_model);
    }
}

TEST_CASE("width mismatch raises a dimension error") {
    Rng rng(52);
    const Resampler resampler = Resampler::init(tiny_config(), rng);
    CHECK_THROWS_AS(resampler.resample(random_feats(4, 6, 1)), DimensionError);
}

TEST_CASE("single feature token: attention weight is exactly one") {
    const ResamplerConfig cfg = tiny_config();
    Rng rng(53);
    const Resampler resampler = Resampler::init(cfg, rng);
    const PatchFeatures feats = random_feats(1, cfg.d_model, 7);
    const Tensor out = resampler.resample(feats);

    // Independent oracle in raw loops: with one key the softmax is 1, so
    // out[i] = queries[i] + Wo(Wv(ln_f(feat)) + bv) + bo for every i.
    const auto params = resampler.named_parameters();
    const Tensor queries = named(params, "resampler/queries");
    const Tensor ln_g = named(params, "resampler/layer0/ln_f/gain");
    const Tensor ln_b = named(params, "resampler/layer0/ln_f/bias");
    const Tensor wv = named(params, "resampler/layer0/attn/wv");
    const Tensor bv = named(params, "resampler/layer0/attn/bv");
    const Tensor wo = named(params, "resampler/layer0/attn/wo");
    const Tensor bo = named(params, "resampler/layer0/attn/bo");

    const std::size_t d = cfg.d_model;
    std::vector<double> f(d);
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += feats.tokens.at(j);
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (feats.tokens.at(j) - mean) * (feats.tokens.at(j) - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    for (std::size_t j = 0; j < d; ++j)
        f[j] = ln_g.at(j) * ((feats.tokens.at(j) - mean) * inv) + ln_b.at(j);

    std::vector<double> v(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t k = 0; k < d; ++k) v[j] += f[k] * wv.at(k, j);
        v[j] += bv.at(j);
    }
    std::vector<double> attn(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t k = 0; k < d; ++k) attn[j] += v[k] * wo.at(k, j);
        attn[j] += bo.at(j);
    }
    for (std::size_t i = 0; i < cfg.n_queries; ++i)
        for (std::size_t j = 0; j < d; ++j)
            CHECK(out.at(i, j) ==
                  doctest::Approx(queries.at(i, j) + attn[j]).epsilon(1e-10));
}

TEST_CASE("gradients on queries and projections match finite differences") {
    const ResamplerConfig cfg = tiny_config();
    Rng rng(54);
    Rng probe(55);
    const Resampler resampler = Resampler::init(cfg, rng);
    const PatchFeatures feats = random_feats(5, cfg.d_model, 8);
    auto forward = [&] { return mean_all(gelu(resampler.resample(feats))); };
    auto fails = check_gradients(forward, resampler.named_parameters(), 4, probe);
    CHECK(fails.empty());
}

TEST_CASE("resample_all orders locals first, then the global") {
    const ResamplerConfig cfg = tiny_config();
    Rng rng(56);
    const Resampler resampler = Resampler::init(cfg, rng);

    std::vector<PatchFeatures> locals;
    for (std::size_t i = 0; i < 4; ++i) locals.push_back(random_feats(6, cfg.d_model, 10 + i));
    const PatchFeatures global = random_feats(6, cfg.d_model, 99);

    const auto with_global = resampler.resample_all(locals, &global);
    CHECK(with_global.size() == 5);
    const auto without = resampler.resample_all(locals, nullptr);
    CHECK(without.size() == 4);
    const auto pair = resampler.resample_all({locals[0]}, &global);
    CHECK(pair.size() == 2);

    std::size_t total_tokens = 0;
    for (const Tensor& seg : with_global) total_tokens += seg.rows();
    CHECK(total_tokens == 5 * cfg.n_queries);

    // Segment i is the plain resample of its crop, same weights throughout.
    for (std::size_t i = 0; i < locals.size(); ++i)
        CHECK(with_global[i].values() == resampler.resample(locals[i]).values());
    CHECK(with_global.back().values() == resampler.resample(global).values());
}

TEST_CASE("resample is permutation-invariant over feature tokens") {
    const ResamplerConfig cfg = tiny_config();
    Rng rng(57);
    const Resampler resampler = Resampler::init(cfg, rng);
    const PatchFeatures feats = random_feats(7, cfg.d_model, 3);

    PatchFeatures shuffled = feats;
    std::vector<std::size_t> perm{3, 0, 6, 2, 5, 1, 4};
    Tensor reordered = Tensor::zeros({7, cfg.d_model});
    for (std::size_t r = 0; r < 7; ++r)
        for (std::size_t c = 0; c < cfg.d_model; ++c)
            reordered.at(r, c) = feats.tokens.at(perm[r], c);
    shuffled.tokens = reordered;

    const Tensor a = resampler.resample(feats);
    const Tensor b = resampler.resample(shuffled);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a.at(i) == doctest::Approx(b.at(i)).epsilon(1e-12));
}

TEST_CASE("one weight object serves every crop; updating it moves all segments") {
    const ResamplerConfig cfg = tiny_config();
    Rng rng(58);
    Resampler resampler = Resampler::init(cfg, rng);
    const PatchFeatures f1 = random_feats(5, cfg.d_model, 1);
    const PatchFeatures f2 = random_feats(9, cfg.d_model, 2);

    const Tensor before1 = resampler.resample(f1);
    const Tensor before2 = resampler.resample(f2);

    Tensor queries = resampler.queries();
    queries.at(0, 0) += 1.0;  // single shared table

    const Tensor after1 = resampler.resample(f1);
    const Tensor after2 = resampler.resample(f2);
    CHECK(after1.values() != before1.values());
    CHECK(after2.values() != before2.values());
}
