#include "flaresynth/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flaresynth/errors.hpp"

namespace flaresynth {
namespace {

void check_dims(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw InvalidArgument("image dimensions must be positive, got " + std::to_string(width) +
                          "x" + std::to_string(height));
  }
}

void check_gamma(double gamma) {
  if (!(gamma >= 1.0 && gamma <= 3.0)) {
    throw InvalidArgument("gamma must lie in [1, 3], got " + std::to_string(gamma));
  }
}

ImagePlane power_law(const ImagePlane& img, double exponent, Encoding result) {
  ImagePlane out = img;
  for (double& v : out.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("gamma transform input outside [0,1]");
    v = std::pow(v, exponent);
  }
  out.set_encoding(result);
  return out;
}

}  // namespace

ImagePlane::ImagePlane(int width, int height, int channels, Encoding encoding)
    : width_(width), height_(height), channels_(channels), encoding_(encoding) {
  check_dims(width, height);
  if (channels != 1 && channels != 3) throw InvalidArgument("channels must be 1 or 3");
  data_.assign(pixel_count() * channels, 0.0);
}

ImagePlane::ImagePlane(int width, int height, int channels, std::vector<double> data,
                       Encoding encoding)
    : width_(width), height_(height), channels_(channels), encoding_(encoding),
      data_(std::move(data)) {
  check_dims(width, height);
  if (channels != 1 && channels != 3) throw InvalidArgument("channels must be 1 or 3");
  if (data_.size() != pixel_count() * channels) {
    throw InvalidArgument("image data length does not match width*height*channels");
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw InvalidArgument("image data contains a non-finite value");
  }
}

bool ImagePlane::same_shape(const ImagePlane& other) const {
  return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
}

bool ImagePlane::within_unit_range() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

DepthMap::DepthMap(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != static_cast<std::size_t>(width) * height) {
    throw InvalidArgument("depth data length does not match width*height");
  }
  for (double v : data_) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw InvalidArgument("depth values must be finite and strictly positive");
    }
  }
}

RegionMask::RegionMask(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

RegionMask::RegionMask(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != static_cast<std::size_t>(width) * height) {
    throw InvalidArgument("mask data length does not match width*height");
  }
  for (auto v : data_) {
    if (v > 1) throw InvalidArgument("mask values must be 0 or 1");
  }
}

std::size_t RegionMask::count() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

ImagePlane clip01(const ImagePlane& img) {
  ImagePlane out = img;
  for (double& v : out.values()) {
    if (!std::isfinite(v)) throw InvalidArgument("clip01: non-finite value");
    v = std::min(std::max(v, 0.0), 1.0);
  }
  return out;
}

ImagePlane to_linear(const ImagePlane& img, double gamma) {
  check_gamma(gamma);
  return power_law(img, gamma, Encoding::kLinear);
}

ImagePlane to_encoded(const ImagePlane& img, double gamma) {
  check_gamma(gamma);
  return power_law(img, 1.0 / gamma, Encoding::kGammaEncoded);
}

ImagePlane luminance(const ImagePlane& img) {
  if (img.channels() == 1) return img;
  ImagePlane out(img.width(), img.height(), 1, img.encoding());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      out.at(x, y) = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
    }
  }
  return out;
}

}  // namespace flaresynth
