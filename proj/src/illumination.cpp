#include "flaresynth/illumination.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "flaresynth/errors.hpp"

namespace flaresynth {

double CameraModel::half_fov_rad() const {
  return horizontal_fov_deg * std::numbers::pi / 360.0;
}

void validate(const CameraModel& cam) {
  if (!(cam.horizontal_fov_deg > 0.0 && cam.horizontal_fov_deg < 180.0)) {
    throw InvalidArgument("horizontal field of view must lie in (0, 180) degrees, got " +
                          std::to_string(cam.horizontal_fov_deg));
  }
  if (cam.width <= 0 || cam.height <= 0) throw InvalidArgument("camera image size must be positive");
}

RegionMask source_region(const ImagePlane& annotation, double tau) {
  if (annotation.channels() != 1) throw InvalidArgument("source annotation must be single-channel");
  RegionMask mask(annotation.width(), annotation.height());
  for (int y = 0; y < annotation.height(); ++y) {
    for (int x = 0; x < annotation.width(); ++x) mask.set(x, y, annotation.at(x, y) > tau);
  }
  return mask;
}

double incident_angle(double radius_px, const CameraModel& cam) {
  const double field_fraction = 2.0 * radius_px / cam.width;
  if (field_fraction == 0.0) return 0.0;
  // Edge of the field: arctan(tan(phi/2)) is phi/2.
  if (field_fraction == 1.0) return cam.half_fov_rad();
  return std::atan(field_fraction * std::tan(cam.half_fov_rad()));
}

SpatialEstimate estimate_spatial(const RegionMask& mask, const DepthMap& depth,
                                 const CameraModel& cam) {
  validate(cam);
  if (mask.width() != depth.width() || mask.height() != depth.height()) {
    throw DimensionMismatch("source mask and depth map differ in size");
  }
  if (mask.width() != cam.width || mask.height() != cam.height) {
    throw DimensionMismatch("source mask and camera image differ in size");
  }
  const double cx = cam.center_x();
  const double cy = cam.center_y();
  double depth_sum = 0.0;
  double radius_sum = 0.0;
  double x_sum = 0.0;
  double y_sum = 0.0;
  long n = 0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      depth_sum += depth.at(x, y);
      radius_sum += std::hypot(x - cx, y - cy);
      x_sum += x;
      y_sum += y;
      ++n;
    }
  }
  if (n == 0) throw EmptySourceRegion();

  SpatialEstimate est;
  est.visible_px = n;
  est.depth = depth_sum / n;
  est.radius_px = radius_sum / n;
  est.theta = incident_angle(est.radius_px, cam);
  est.centroid_x = x_sum / n;
  est.centroid_y = y_sum / n;
  return est;
}

double illuminance(const IlluminanceSample& s) {
  if (!(s.distance > 0.0)) throw InvalidArgument("illuminance distance must be > 0");
  return s.intensity * std::cos(s.angle) / (s.distance * s.distance);
}

double mean_depth(const DepthMap& depth) {
  // Neumaier summation; maps are large and the mean feeds a squared ratio.
  double sum = 0.0;
  double compensation = 0.0;
  for (double v : depth.values()) {
    const double t = sum + v;
    compensation += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return (sum + compensation) / static_cast<double>(depth.values().size());
}

double bam_gain(const SpatialEstimate& est, double d_bar, const CameraModel& cam,
                std::optional<GainClamp> clamp) {
  if (!(d_bar > 0.0)) throw InvalidArgument("mean depth must be > 0");
  if (!(est.depth > 0.0)) throw InvalidArgument("source depth must be > 0");
  validate(cam);
  const double off_axis = (2.0 * est.radius_px / cam.width) * std::tan(cam.half_fov_rad());
  double gain = (d_bar * d_bar) / (est.depth * est.depth * std::sqrt(1.0 + off_axis * off_axis));
  if (clamp) {
    if (!(clamp->min >= 0.0 && clamp->min <= clamp->max)) {
      throw InvalidArgument("gain clamp must satisfy 0 <= min <= max");
    }
    gain = std::clamp(gain, clamp->min, clamp->max);
  }
  return gain;
}

ImagePlane apply_gain(const ImagePlane& flare, double gain) {
  if (!(gain >= 0.0) || !std::isfinite(gain)) throw InvalidArgument("gain must be finite and >= 0");
  ImagePlane out = flare;
  for (double& v : out.values()) v *= gain;
  return out;
}

}  // namespace flaresynth
