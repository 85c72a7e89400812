#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flaresynth/image.hpp"

namespace flaresynth {

// Integer samples exactly as stored in a PNG file (gray or RGB, 8 or 16 bit).
struct RawRaster {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> codes;
  std::vector<std::pair<std::string, std::string>> text;
};

RawRaster read_png(const std::filesystem::path& path);
void write_png(const RawRaster& raster, const std::filesystem::path& path);

// Values are code / (2^bitdepth - 1).
ImagePlane load_image(const std::filesystem::path& path, Encoding expected_encoding);
// Stores round(v * (2^bitdepth - 1)), half away from zero. Samples must lie in [0,1].
void save_image(const ImagePlane& img, const std::filesystem::path& path, int bit_depth);

// Depth files are single-channel; code 0 is rejected. Values are normalized to
// (0,1] on disk. save_depth records the normalization factor in a text chunk so
// load_depth returns the original scale; files without it load as normalized depth.
DepthMap load_depth(const std::filesystem::path& path);
void save_depth(const DepthMap& depth, const std::filesystem::path& path);

// Any nonzero code is inside the mask. Written as 8-bit gray, 0 / 255.
RegionMask load_mask(const std::filesystem::path& path);
void save_mask(const RegionMask& mask, const std::filesystem::path& path);

inline constexpr const char* kDepthScaleKey = "flaresynth.depth_scale";

}  // namespace flaresynth
