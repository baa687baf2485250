// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "patchlm/errors.hpp"
#include "patchlm/image.hpp"
#include "patchlm/partition.hpp"
#include "patchlm/rng.hpp"

using namespace patchlm;

namespace {

ImageTensor ramp_image(std::size_t h, std::size_t w) {
    ImageTensor img(h, w);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < 3; ++c)
                img.at(y, x, c) =
                    static_cast<double>((y * 31 + x * 7 + c * 131) % 256) / 255.0;
    return img;
}

}  // namespace

TEST_CASE("grid dims reproduce the published adapter counts") {
    const Window win{448, 448};
    CHECK(grid_dims(896, 896, win) == std::pair<std::size_t, std::size_t>{2, 2});
    CHECK(grid_dims(1344, 896, win) == std::pair<std::size_t, std::size_t>{3, 2});
    CHECK(grid_dims(896, 1344, win) == std::pair<std::size_t, std::size_t>{2, 3});
    CHECK(grid_dims(448, 448, win) == std::pair<std::size_t, std::size_t>{1, 1});
    CHECK(grid_dims(672, 672, win) == std::pair<std::size_t, std::size_t>{2, 2});
    CHECK(grid_dims(784, 784, win) == std::pair<std::size_t, std::size_t>{2, 2});
    CHECK_THROWS_AS(grid_dims(300, 448, win), DimensionError);
}

TEST_CASE("placements: endpoints anchored, even spacing, strict monotonicity") {
    CHECK(placements(896, 448, 2) == std::vector<std::size_t>{0, 448});
    CHECK(placements(672, 448, 2) == std::vector<std::size_t>{0, 224});
    CHECK(placements(448, 448, 1) == std::vector<std::size_t>{0});

    // Property against the contract: first 0, last extent - window, gaps
    // within one pixel of even spacing.
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t win = 32 + rng.below(100);
        const std::size_t n = 1 + rng.below(6);
        const std::size_t extent = win * n - rng.below(win - 1);
        if (extent < win) continue;
        const auto offs = placements(extent, win, (extent + win - 1) / win);
        const std::size_t count = offs.size();
        CHECK(offs.front() == 0);
        CHECK(offs.back() == extent - win);
        const double ideal_gap =
            count > 1 ? static_cast<double>(extent - win) / static_cast<double>(count - 1) : 0.0;
        for (std::size_t i = 1; i < count; ++i) {
            CHECK(offs[i] > offs[i - 1]);
            CHECK(std::abs(static_cast<double>(offs[i] - offs[i - 1]) - ideal_gap) <= 1.0);
        }
    }
}

TEST_CASE("partition at 896x896: four locals at {0,448}^2 plus a global") {
    const ImageTensor img = ramp_image(896, 896);
    const PatchGrid grid = partition(img, Window{448, 448});
    REQUIRE(grid.rows == 2);
    REQUIRE(grid.cols == 2);
    REQUIRE(grid.locals.size() == 4);
    const std::size_t expected[4][2] = {{0, 0}, {0, 448}, {448, 0}, {448, 448}};
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(grid.locals[i].y_offset == expected[i][0]);
        CHECK(grid.locals[i].x_offset == expected[i][1]);
        CHECK(grid.locals[i].crop.height == 448);
        CHECK(grid.locals[i].crop.width == 448);
    }
    CHECK(grid.global.height == 448);
    CHECK(grid.global.width == 448);
}

TEST_CASE("partition enforces the six-patch cap") {
    const ImageTensor img(1344, 1344, 0.5);
    CHECK_THROWS_AS(partition(img, Window{448, 448}), CapacityError);
    // Override flag exists for experimentation.
    CHECK_NOTHROW(partition(img, Window{448, 448}, 9));
}

TEST_CASE("undersized input is upscaled; single local equals the global") {
    const ImageTensor img = ramp_image(300, 300);
    const PatchGrid grid = partition(img, Window{448, 448});
    REQUIRE(grid.locals.size() == 1);
    CHECK(grid.locals[0].crop == grid.global);
}

TEST_CASE("crops are exact pixel copies and cover the whole image") {
    Rng rng(9);
    for (int trial = 0; trial < 12; ++trial) {
        const Window win{64, 64};
        const std::size_t h = 64 + rng.below(65);   // 1..2 rows
        const std::size_t w = 64 + rng.below(129);  // 1..3 cols
        const ImageTensor img = ramp_image(h, w);
        const PatchGrid grid = partition(img, win);

        std::vector<bool> covered(h * w, false);
        for (const LocalCrop& lc : grid.locals) {
            bool copies_exact = true;
            for (std::size_t y = 0; y < win.height; ++y) {
                for (std::size_t x = 0; x < win.width; ++x) {
                    for (std::size_t c = 0; c < 3; ++c)
                        copies_exact = copies_exact &&
                                       lc.crop.at(y, x, c) ==
                                           img.at(lc.y_offset + y, lc.x_offset + x, c);
                    covered[(lc.y_offset + y) * w + (lc.x_offset + x)] = true;
                }
            }
            CHECK(copies_exact);
        }
        std::size_t missing = 0;
        for (bool pixel : covered)
            if (!pixel) ++missing;
        CHECK(missing == 0);
    }
}

TEST_CASE("partition is deterministic and adapter indices are a bijection") {
    const ImageTensor img = ramp_image(640, 200);
    const PatchGrid a = partition(img, Window{64, 64});
    const PatchGrid b = partition(img, Window{64, 64});
    REQUIRE(a.locals.size() == b.locals.size());
    for (std::size_t i = 0; i < a.locals.size(); ++i)
        CHECK(a.locals[i].crop == b.locals[i].crop);
    CHECK(a.global == b.global);

    std::vector<bool> seen(a.rows * a.cols, false);
    for (const LocalCrop& lc : a.locals) {
        const std::size_t idx = lc.row * a.cols + lc.col;
        REQUIRE(idx < seen.size());
        CHECK(!seen[idx]);
        seen[idx] = true;
    }
    for (bool s : seen) CHECK(s);
}

TEST_CASE("bilinear resize: identity, constants, hand-evaluated midpoint") {
    const ImageTensor img = ramp_image(10, 14);
    const ImageTensor same = resize_bilinear(img, 10, 14);
    CHECK(same == img);

    const ImageTensor flat(5, 7, 0.37);
    const ImageTensor grown = resize_bilinear(flat, 13, 3);
    for (double v : grown.pixels) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));

    ImageTensor two(2, 2);
    for (std::size_t y = 0; y < 2; ++y)
        for (std::size_t c = 0; c < 3; ++c) {
            two.at(y, 0, c) = 0.0;
            two.at(y, 1, c) = 1.0;
        }
    const ImageTensor wide = resize_bilinear(two, 2, 3);
    for (std::size_t y = 0; y < 2; ++y) {
        CHECK(wide.at(y, 0, 0) == doctest::Approx(0.0));
        CHECK(wide.at(y, 1, 0) == doctest::Approx(0.5));
        CHECK(wide.at(y, 2, 0) == doctest::Approx(1.0));
    }
}

TEST_CASE("ppm round trip preserves 8-bit pixel data") {
    const auto dir = std::filesystem::temp_directory_path() / "patchlm_ppm_test";
    std::filesystem::create_directories(dir);
    ImageTensor img(6, 9);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        img.pixels[i] = static_cast<double>((i * 37) % 256) / 255.0;
    const auto path = dir / "roundtrip.ppm";
    write_ppm(path, img);
    const ImageTensor back = read_ppm(path);
    REQUIRE(back.height == img.height);
    REQUIRE(back.width == img.width);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        CHECK(back.pixels[i] == doctest::Approx(img.pixels[i]).epsilon(1e-12));
    std::filesystem::remove_all(dir);
}

TEST_CASE("raw tensor round trip is exact") {
    const auto dir = std::filesystem::temp_directory_path() / "patchlm_raw_test";
    std::filesystem::create_directories(dir);
    const ImageTensor img = ramp_image(5, 11);
    const auto path = dir / "img.tensor";
    write_raw_tensor(path, img);
    const ImageTensor back = read_raw_tensor(path);
    CHECK(back == img);
    std::filesystem::remove_all(dir);
}
