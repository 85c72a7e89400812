#pragma once

#include <optional>

#include "flaresynth/image.hpp"
#include "flaresynth/random.hpp"

namespace flaresynth {

// Forward map from template pixel p to canvas pixel q:
//   q = A (p - c_src) + c_dst + translation,  A = scale * R(rotation) * [[1, sx], [sy, 1]]
// where c_src / c_dst are the pixel-index centers ((W-1)/2, (H-1)/2) of the
// template and the canvas.
struct AffineParams {
  double scale = 1.0;
  double rotation = 0.0;
  double tx = 0.0;
  double ty = 0.0;
  double shear_x = 0.0;
  double shear_y = 0.0;

  static AffineParams identity() { return {}; }
  bool operator==(const AffineParams&) const = default;
};

struct Range {
  double min = 0.0;
  double max = 0.0;
  bool operator==(const Range&) const = default;
};

struct AffineRanges {
  Range scale{0.5, 1.5};
  Range rotation{0.0, 6.283185307179586};
  Range tx{0.0, 0.0};
  Range ty{0.0, 0.0};
  Range shear_x{-0.2, 0.2};
  Range shear_y{-0.2, 0.2};
  int min_visible_source_px = 16;
  int max_retries = 8;

  // Defaults with translation uniform over a width x height canvas.
  static AffineRanges defaults_for(int width, int height);
  bool operator==(const AffineRanges&) const = default;
};

void validate(const AffineParams& params);
void validate(const AffineRanges& ranges);

// Each field drawn independently and uniformly, in declaration order.
AffineParams sample_affine(const AffineRanges& ranges, Rng& rng);

enum class Interpolation { kBilinear, kNearest };

// Destination-driven resampling onto a width x height canvas. Samples that
// fall outside the source are black.
ImagePlane apply_affine(const ImagePlane& src, const AffineParams& params, int width, int height,
                        Interpolation interpolation);

}  // namespace flaresynth
