#include "flaresynth/depth_stub.hpp"

#include <cmath>
#include <vector>

#include "flaresynth/errors.hpp"

namespace flaresynth {

DepthProfile::Kind parse_depth_kind(const std::string& name) {
  if (name == "constant") return DepthProfile::Kind::kConstant;
  if (name == "radial") return DepthProfile::Kind::kRadial;
  if (name == "ramp") return DepthProfile::Kind::kHorizontalRamp;
  throw InvalidArgument("unknown depth profile '" + name + "' (expected constant, radial or ramp)");
}

DepthMap synth_depth(int width, int height, const DepthProfile& profile) {
  if (width <= 0 || height <= 0) throw InvalidArgument("depth map size must be positive");
  if (!(profile.first > 0.0) || !(profile.second > 0.0) || !std::isfinite(profile.first) ||
      !std::isfinite(profile.second)) {
    throw InvalidArgument("depth profile values must be finite and > 0");
  }
  if (profile.kind == DepthProfile::Kind::kRadial && profile.first > profile.second) {
    throw InvalidArgument("radial depth requires near <= far");
  }

  std::vector<double> data(static_cast<std::size_t>(width) * height);
  const double cx = (width - 1) / 2.0;
  const double cy = (height - 1) / 2.0;
  const double corner = std::hypot(cx, cy);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double d = profile.first;
      switch (profile.kind) {
        case DepthProfile::Kind::kConstant:
          break;
        case DepthProfile::Kind::kRadial: {
          const double t = corner > 0.0 ? std::hypot(x - cx, y - cy) / corner : 0.0;
          d = profile.first + (profile.second - profile.first) * t;
          break;
        }
        case DepthProfile::Kind::kHorizontalRamp: {
          const double t = width > 1 ? static_cast<double>(x) / (width - 1) : 0.0;
          d = profile.first + (profile.second - profile.first) * t;
          break;
        }
      }
      data[static_cast<std::size_t>(y) * width + x] = d;
    }
  }
  return DepthMap(width, height, std::move(data));
}

}  // namespace flaresynth
