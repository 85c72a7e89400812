#pragma once

#include <optional>

#include "flaresynth/image.hpp"

namespace flaresynth {

// Pinhole camera described by its horizontal field of view; the image center
// is the pixel-index center ((W-1)/2, (H-1)/2).
struct CameraModel {
  double horizontal_fov_deg = 84.0;
  int width = 0;
  int height = 0;

  double center_x() const { return (width - 1) / 2.0; }
  double center_y() const { return (height - 1) / 2.0; }
  double half_fov_rad() const;
};

void validate(const CameraModel& cam);

struct SpatialEstimate {
  double depth = 0.0;       // mean depth over the source pixels
  double radius_px = 0.0;   // mean distance of the source pixels to the image center
  double theta = 0.0;       // incident angle, radians
  long visible_px = 0;
  double centroid_x = 0.0;
  double centroid_y = 0.0;
};

struct IlluminanceSample {
  double intensity = 1.0;
  double angle = 0.0;
  double distance = 1.0;
};

struct GainClamp {
  double min = 0.05;
  double max = 5.0;
};

// 1 where annotation > tau (strict).
RegionMask source_region(const ImagePlane& annotation, double tau = 0.5);

// Incident angle for a source `radius_px` from the image center.
double incident_angle(double radius_px, const CameraModel& cam);

// Throws EmptySourceRegion when the mask is empty and DimensionMismatch when
// the mask, depth map and camera disagree in size.
SpatialEstimate estimate_spatial(const RegionMask& mask, const DepthMap& depth,
                                 const CameraModel& cam);

// E = I cos(theta) / d^2.
double illuminance(const IlluminanceSample& sample);

double mean_depth(const DepthMap& depth);

// Brightness gain of one flare relative to an on-axis source at the mean depth:
//   g = d_bar^2 / (d^2 * sqrt(1 + ((2 r / W) tan(fov / 2))^2))
// optionally clamped into [clamp.min, clamp.max].
double bam_gain(const SpatialEstimate& est, double mean_depth, const CameraModel& cam,
                std::optional<GainClamp> clamp = std::nullopt);

// Per-sample multiply; the result is not clipped.
ImagePlane apply_gain(const ImagePlane& flare, double gain);

}  // namespace flaresynth
