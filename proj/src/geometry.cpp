#include "flaresynth/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "flaresynth/errors.hpp"

namespace flaresynth {
namespace {

void check_range(const Range& r, const char* name) {
  if (!std::isfinite(r.min) || !std::isfinite(r.max) || r.min > r.max) {
    throw InvalidArgument(std::string("affine range '") + name + "' must be finite with min <= max");
  }
}

struct Matrix2 {
  double a, b, c, d;  // [[a, b], [c, d]]
};

Matrix2 forward_matrix(const AffineParams& p) {
  const double cs = std::cos(p.rotation);
  const double sn = std::sin(p.rotation);
  // R * Shear
  const Matrix2 rs{cs - sn * p.shear_y, cs * p.shear_x - sn, sn + cs * p.shear_y,
                   sn * p.shear_x + cs};
  return {p.scale * rs.a, p.scale * rs.b, p.scale * rs.c, p.scale * rs.d};
}

// Zero outside the source, so bilinear weights stay a convex combination of
// in-range samples and black.
double sample_or_black(const ImagePlane& src, long x, long y, int c) {
  if (x < 0 || y < 0 || x >= src.width() || y >= src.height()) return 0.0;
  return src.at(static_cast<int>(x), static_cast<int>(y), c);
}

}  // namespace

AffineRanges AffineRanges::defaults_for(int width, int height) {
  AffineRanges r;
  r.tx = {-0.5 * width, 0.5 * width};
  r.ty = {-0.5 * height, 0.5 * height};
  return r;
}

void validate(const AffineParams& p) {
  if (!(p.scale > 0.0 && p.scale <= 8.0)) throw InvalidArgument("affine scale must lie in (0, 8]");
  if (!(std::abs(p.shear_x) <= 1.0 && std::abs(p.shear_y) <= 1.0)) {
    throw InvalidArgument("affine shear must lie in [-1, 1]");
  }
  if (!std::isfinite(p.rotation) || !std::isfinite(p.tx) || !std::isfinite(p.ty)) {
    throw InvalidArgument("affine parameters must be finite");
  }
}

void validate(const AffineRanges& r) {
  check_range(r.scale, "scale");
  check_range(r.rotation, "rotation");
  check_range(r.tx, "tx");
  check_range(r.ty, "ty");
  check_range(r.shear_x, "shear_x");
  check_range(r.shear_y, "shear_y");
  if (!(r.scale.min > 0.0 && r.scale.max <= 8.0)) throw InvalidArgument("scale range must lie in (0, 8]");
  if (r.shear_x.min < -1.0 || r.shear_x.max > 1.0 || r.shear_y.min < -1.0 || r.shear_y.max > 1.0) {
    throw InvalidArgument("shear ranges must lie in [-1, 1]");
  }
  if (r.max_retries < 1) throw InvalidArgument("max_retries must be >= 1");
  if (r.min_visible_source_px < 1) throw InvalidArgument("min_visible_source_px must be >= 1");
}

AffineParams sample_affine(const AffineRanges& ranges, Rng& rng) {
  AffineParams p;
  p.scale = rng.uniform(ranges.scale.min, ranges.scale.max);
  p.rotation = rng.uniform(ranges.rotation.min, ranges.rotation.max);
  p.tx = rng.uniform(ranges.tx.min, ranges.tx.max);
  p.ty = rng.uniform(ranges.ty.min, ranges.ty.max);
  p.shear_x = rng.uniform(ranges.shear_x.min, ranges.shear_x.max);
  p.shear_y = rng.uniform(ranges.shear_y.min, ranges.shear_y.max);
  return p;
}

ImagePlane apply_affine(const ImagePlane& src, const AffineParams& params, int width, int height,
                        Interpolation interpolation) {
  ImagePlane out(width, height, src.channels(), src.encoding());
  const Matrix2 m = forward_matrix(params);
  const double det = m.a * m.d - m.b * m.c;
  if (std::abs(det) < 1e-12) return out;  // collapses to a line: nothing visible
  const Matrix2 inv{m.d / det, -m.b / det, -m.c / det, m.a / det};

  const double src_cx = (src.width() - 1) / 2.0;
  const double src_cy = (src.height() - 1) / 2.0;
  const double dst_cx = (width - 1) / 2.0 + params.tx;
  const double dst_cy = (height - 1) / 2.0 + params.ty;
  const int channels = src.channels();

  for (int y = 0; y < height; ++y) {
    const double qy = y - dst_cy;
    for (int x = 0; x < width; ++x) {
      const double qx = x - dst_cx;
      const double sx = inv.a * qx + inv.b * qy + src_cx;
      const double sy = inv.c * qx + inv.d * qy + src_cy;
      if (sx <= -1.0 || sy <= -1.0 || sx >= src.width() || sy >= src.height()) continue;

      if (interpolation == Interpolation::kNearest) {
        const long nx = static_cast<long>(std::floor(sx + 0.5));
        const long ny = static_cast<long>(std::floor(sy + 0.5));
        for (int c = 0; c < channels; ++c) out.at(x, y, c) = sample_or_black(src, nx, ny, c);
        continue;
      }

      const double fx = std::floor(sx);
      const double fy = std::floor(sy);
      const long x0 = static_cast<long>(fx);
      const long y0 = static_cast<long>(fy);
      const double wx = sx - fx;
      const double wy = sy - fy;
      for (int c = 0; c < channels; ++c) {
        const double v00 = sample_or_black(src, x0, y0, c);
        const double v10 = sample_or_black(src, x0 + 1, y0, c);
        const double v01 = sample_or_black(src, x0, y0 + 1, c);
        const double v11 = sample_or_black(src, x0 + 1, y0 + 1, c);
        const double top = (1.0 - wx) * v00 + wx * v10;
        const double bottom = (1.0 - wx) * v01 + wx * v11;
        // Rounding must not push the blend outside its inputs.
        const double lo = std::min({v00, v10, v01, v11});
        const double hi = std::max({v00, v10, v01, v11});
        out.at(x, y, c) = std::clamp((1.0 - wy) * top + wy * bottom, lo, hi);
      }
    }
  }
  return out;
}

}  // namespace flaresynth
