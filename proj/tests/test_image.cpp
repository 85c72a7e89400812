#include <cmath>

#include "doctest.h"
#include "flaresynth/errors.hpp"
#include "flaresynth/image.hpp"
#include "test_support.hpp"

using namespace flaresynth;

TEST_CASE("image plane construction enforces shape invariants") {
  CHECK_THROWS_AS(ImagePlane(0, 4, 3), InvalidArgument);
  CHECK_THROWS_AS(ImagePlane(4, 4, 2), InvalidArgument);
  CHECK_THROWS_AS(ImagePlane(2, 2, 1, std::vector<double>(3, 0.0)), InvalidArgument);
  CHECK_THROWS_AS(ImagePlane(1, 1, 1, std::vector<double>{NAN}), InvalidArgument);
  const ImagePlane img(3, 2, 3);
  CHECK(img.values().size() == 18);
  CHECK(img.within_unit_range());
}

TEST_CASE("depth maps and masks reject invalid values") {
  CHECK_THROWS_AS(DepthMap(2, 1, {1.0, 0.0}), InvalidArgument);
  CHECK_THROWS_AS(DepthMap(2, 1, {1.0, -2.0}), InvalidArgument);
  CHECK_THROWS_AS(DepthMap(1, 1, {INFINITY}), InvalidArgument);
  CHECK_THROWS_AS(RegionMask(2, 1, std::vector<std::uint8_t>{0, 2}), InvalidArgument);
  RegionMask m(3, 3);
  m.set(1, 1, true);
  CHECK(m.count() == 1);
}

TEST_CASE("clip01") {
  const ImagePlane img(3, 1, 1, {1.3, -0.2, 0.7});
  const ImagePlane c = clip01(img);
  CHECK(c.at(0, 0) == 1.0);
  CHECK(c.at(1, 0) == 0.0);
  CHECK(c.at(2, 0) == 0.7);

  SUBCASE("idempotent") {
    Rng rng(5);
    std::vector<double> data(500);
    for (double& v : data) v = rng.uniform(-3.0, 3.0);
    const ImagePlane wide(500, 1, 1, data);
    CHECK(clip01(clip01(wide)) == clip01(wide));
  }
}

TEST_CASE("gamma transforms") {
  const ImagePlane one(1, 1, 1, {1.0});
  CHECK(to_linear(one, 2.2).at(0, 0) == 1.0);
  const ImagePlane half(1, 1, 1, {0.5});
  CHECK(to_linear(half, 2.0).at(0, 0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(to_linear(half, 2.0).encoding() == Encoding::kLinear);
  CHECK(to_encoded(half, 2.0).encoding() == Encoding::kGammaEncoded);
  CHECK_THROWS_AS(to_linear(half, 0.9), InvalidArgument);
  CHECK_THROWS_AS(to_encoded(half, 3.1), InvalidArgument);

  SUBCASE("round trip of 1000 random values at gamma 1.9") {
    const ImagePlane img = testing::random_image(1000, 1, 1, 42, Encoding::kGammaEncoded);
    const ImagePlane back = to_encoded(to_linear(img, 1.9), 1.9);
    double worst = 0.0;
    for (std::size_t i = 0; i < img.values().size(); ++i) {
      worst = std::max(worst, std::abs(back.values()[i] - img.values()[i]));
    }
    CHECK(worst < 1e-6);
  }

  SUBCASE("strictly monotone on a fine grid") {
    std::vector<double> grid(1001);
    for (int i = 0; i <= 1000; ++i) grid[i] = i / 1000.0;
    const ImagePlane g(1001, 1, 1, grid);
    for (double gamma : {1.0, 1.8, 2.2, 3.0}) {
      const ImagePlane lin = to_linear(g, gamma);
      const ImagePlane enc = to_encoded(g, gamma);
      for (int i = 1; i <= 1000; ++i) {
        CHECK(lin.at(i, 0) > lin.at(i - 1, 0));
        CHECK(enc.at(i, 0) > enc.at(i - 1, 0));
      }
    }
  }
}

TEST_CASE("luminance uses Rec.601 weights") {
  const ImagePlane rgb(1, 1, 3, {1.0, 0.0, 0.0});
  CHECK(luminance(rgb).at(0, 0) == doctest::Approx(0.299));
  const ImagePlane white(1, 1, 3, {1.0, 1.0, 1.0});
  CHECK(luminance(white).at(0, 0) == doctest::Approx(1.0));
}
