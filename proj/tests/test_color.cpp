#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "stainkit/color.hpp"

using namespace stainkit;

namespace {

RgbImage constant_image(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    RgbImage img(w, h);
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        img.data[p * 3 + 0] = r;
        img.data[p * 3 + 1] = g;
        img.data[p * 3 + 2] = b;
    }
    return img;
}

}  // namespace

TEST_CASE("od formula at reference points") {
    CHECK(od_from_intensity(255.0) == doctest::Approx(0.0));
    CHECK(od_from_intensity(25.5) == doctest::Approx(1.0));
    // zero intensity clamps to 1 before the log
    CHECK(od_from_intensity(0.0) == doctest::Approx(-std::log10(1.0 / 255.0)));
}

TEST_CASE("od image round trip is exact on 1..255") {
    RgbImage strip(255, 1);
    for (int i = 0; i < 255; ++i)
        for (int c = 0; c < 3; ++c) strip.data[i * 3 + c] = static_cast<std::uint8_t>(i + 1);
    CHECK(od_to_rgb(rgb_to_od(strip)) == strip);

    // documented clamp exception: 0 maps to 1
    const RgbImage black = constant_image(1, 1, 0, 0, 0);
    const RgbImage back = od_to_rgb(rgb_to_od(black));
    CHECK(back.data[0] == 1);
}

TEST_CASE("od value 1.0 decodes to 26") {
    OdImage od(1, 1, 3);
    od.data = {1.0, 1.0, 1.0};
    const RgbImage rgb = od_to_rgb(od);
    CHECK(rgb.data[0] == 26);  // 25.5 rounds away from zero
}

TEST_CASE("rgb_to_od is monotonically decreasing per channel") {
    double prev = od_from_intensity(1.0);
    for (int i = 2; i <= 255; ++i) {
        const double cur = od_from_intensity(static_cast<double>(i));
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("neutral gray has near-zero alpha and beta") {
    const LabImage lab = rgb_to_lab(constant_image(2, 2, 128, 128, 128));
    CHECK(std::abs(lab.data[1]) < 1e-2);
    CHECK(std::abs(lab.data[2]) < 1e-2);
}

TEST_CASE("black stays finite through the lab transform") {
    const LabImage lab = rgb_to_lab(constant_image(1, 1, 0, 0, 0));
    for (double v : lab.data) CHECK(std::isfinite(v));
}

TEST_CASE("lab round trip within one intensity level") {
    std::mt19937_64 rng(123);
    std::uniform_int_distribution<int> d(0, 255);
    for (int trial = 0; trial < 5; ++trial) {
        RgbImage img(17, 13);
        for (auto& b : img.data) b = static_cast<std::uint8_t>(d(rng));
        const RgbImage back = lab_to_rgb(rgb_to_lab(img));
        for (std::size_t i = 0; i < img.data.size(); ++i) {
            const int diff = std::abs(static_cast<int>(img.data[i]) - static_cast<int>(back.data[i]));
            CHECK(diff <= 1);
        }
    }
}
