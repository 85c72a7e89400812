#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "flaresynth/cli.hpp"
#include "flaresynth/png_io.hpp"
#include "test_support.hpp"

namespace flaresynth::testing {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

inline CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliResult r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// Smooth color gradients with a little texture, saved as 8-bit sRGB-like PNGs.
inline void write_backgrounds(const std::filesystem::path& dir, int count, int w, int h,
                              std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed({seed, static_cast<std::uint64_t>(i)}));
    const double base[3] = {rng.uniform(0.1, 0.6), rng.uniform(0.1, 0.6), rng.uniform(0.1, 0.6)};
    const double fx = rng.uniform(0.5, 3.0);
    const double fy = rng.uniform(0.5, 3.0);
    ImagePlane img(w, h, 3, Encoding::kGammaEncoded);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double wave = 0.15 * std::sin(fx * 6.283 * x / w) * std::cos(fy * 6.283 * y / h);
        for (int c = 0; c < 3; ++c) {
          img.at(x, y, c) = std::clamp(base[c] + wave + 0.03 * rng.uniform(-1.0, 1.0), 0.0, 1.0);
        }
      }
    }
    char name[32];
    std::snprintf(name, sizeof name, "bg_%03d.png", i);
    save_image(img, dir / name, 8);
  }
}

}  // namespace flaresynth::testing
