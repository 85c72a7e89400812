#include <cmath>

#include "doctest.h"
#include "flaresynth/depth_stub.hpp"
#include "flaresynth/errors.hpp"
#include "flaresynth/illumination.hpp"

using namespace flaresynth;

TEST_CASE("constant profile") {
  const DepthMap d = synth_depth(7, 5, DepthProfile::constant(2.0));
  CHECK(mean_depth(d) == 2.0);
}

TEST_CASE("radial profile endpoints") {
  const DepthMap d = synth_depth(9, 9, DepthProfile::radial(1.0, 3.0));
  CHECK(d.at(4, 4) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(d.at(0, 0) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(d.at(8, 8) == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("radial profile is symmetric under quarter turns") {
  const int n = 12;
  const DepthMap d = synth_depth(n, n, DepthProfile::radial(0.5, 4.0));
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) CHECK(d.at(x, y) == doctest::Approx(d.at(n - 1 - y, x)).epsilon(1e-12));
}

TEST_CASE("horizontal ramp") {
  const DepthMap d = synth_depth(3, 2, DepthProfile::ramp(1.0, 2.0));
  CHECK(d.at(0, 1) == 1.0);
  CHECK(d.at(1, 1) == 1.5);
  CHECK(d.at(2, 0) == 2.0);
}

TEST_CASE("invalid profiles") {
  CHECK_THROWS_AS(synth_depth(4, 4, DepthProfile::constant(0.0)), InvalidArgument);
  CHECK_THROWS_AS(synth_depth(4, 4, DepthProfile::radial(3.0, 1.0)), InvalidArgument);
  CHECK_THROWS_AS(synth_depth(4, 4, DepthProfile::ramp(-1.0, 1.0)), InvalidArgument);
  CHECK_THROWS_AS(synth_depth(0, 4, DepthProfile::constant(1.0)), InvalidArgument);
  CHECK_THROWS_AS(parse_depth_kind("spherical"), InvalidArgument);
  CHECK(parse_depth_kind("ramp") == DepthProfile::Kind::kHorizontalRamp);
}
