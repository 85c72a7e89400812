#pragma once

#include <string>

#include "flaresynth/image.hpp"

namespace flaresynth {

// Synthetic depth profiles standing in for a monocular depth estimator.
struct DepthProfile {
  enum class Kind { kConstant, kRadial, kHorizontalRamp };
  Kind kind = Kind::kConstant;
  double first = 1.0;   // constant value, radial near depth, or ramp left depth
  double second = 1.0;  // radial far depth or ramp right depth; unused for constant

  static DepthProfile constant(double value) { return {Kind::kConstant, value, value}; }
  static DepthProfile radial(double near, double far) { return {Kind::kRadial, near, far}; }
  static DepthProfile ramp(double left, double right) { return {Kind::kHorizontalRamp, left, right}; }
};

DepthProfile::Kind parse_depth_kind(const std::string& name);

// radial: linear in distance from the pixel-index center, `first` at the
// center and `second` at the farthest corner. ramp: linear across columns.
DepthMap synth_depth(int width, int height, const DepthProfile& profile);

}  // namespace flaresynth
