#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace flaresynth {

enum class Encoding { kLinear, kGammaEncoded };

// Row-major, channel-interleaved image with 1 or 3 channels of double samples.
//
// Samples read from or written to disk live in [0,1]. Intermediate planes (a
// gained flare layer before compositing, the raw sum of several flares) may
// exceed 1, so the range is checked at the IO boundary and by clip01 rather
// than on every construction. All samples are always finite.
class ImagePlane {
 public:
  ImagePlane() = default;
  ImagePlane(int width, int height, int channels, Encoding encoding = Encoding::kLinear);
  ImagePlane(int width, int height, int channels, std::vector<double> data,
             Encoding encoding = Encoding::kLinear);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const { return data_.empty(); }

  Encoding encoding() const { return encoding_; }
  void set_encoding(Encoding encoding) { encoding_ = encoding; }

  double& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  double at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool same_shape(const ImagePlane& other) const;
  bool same_size(int width, int height) const { return width_ == width && height_ == height; }
  bool within_unit_range() const;

  bool operator==(const ImagePlane& other) const = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  Encoding encoding_ = Encoding::kLinear;
  std::vector<double> data_;
};

// Per-pixel relative depth, larger = farther. Every value is finite and > 0.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  double at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<const double> values() const { return data_; }

  bool operator==(const DepthMap& other) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

// Binary per-pixel mask, 1 = inside the region.
class RegionMask {
 public:
  RegionMask() = default;
  RegionMask(int width, int height, std::uint8_t fill = 0);
  RegionMask(int width, int height, std::vector<std::uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }
  bool at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool on) { data_[static_cast<std::size_t>(y) * width_ + x] = on ? 1 : 0; }
  std::span<const std::uint8_t> values() const { return data_; }
  std::size_t count() const;
  bool empty_region() const { return count() == 0; }

  bool operator==(const RegionMask& other) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

// min(max(v,0),1) on every sample; throws InvalidArgument on non-finite input.
ImagePlane clip01(const ImagePlane& img);

// v^gamma and v^(1/gamma). gamma must lie in [1, 3]; input samples in [0,1].
ImagePlane to_linear(const ImagePlane& img, double gamma);
ImagePlane to_encoded(const ImagePlane& img, double gamma);

// Rec.601 luma for RGB input, a copy for single-channel input.
ImagePlane luminance(const ImagePlane& img);

}  // namespace flaresynth
