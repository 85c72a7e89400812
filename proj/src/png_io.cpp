#include "flaresynth/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

#include "flaresynth/errors.hpp"

namespace flaresynth {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngErrorState {
  std::jmp_buf jump;
  std::string message;
};

void on_png_error(png_structp png, png_const_charp msg) {
  auto* state = static_cast<PngErrorState*>(png_get_error_ptr(png));
  state->message = msg ? msg : "unknown libpng error";
  std::longjmp(state->jump, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

int max_code(int bit_depth) { return bit_depth == 16 ? 65535 : 255; }

std::string describe(const std::filesystem::path& path) { return "'" + path.string() + "'"; }

}  // namespace

RawRaster read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw IoError("cannot open " + describe(path));

  png_byte signature[8];
  if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
    throw IoError(describe(path) + " is not a PNG file");
  }

  PngErrorState state;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &state, on_png_error,
                                           on_png_warning);
  if (!png) throw IoError("libpng: cannot allocate read struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng: cannot allocate info struct");
  }

  RawRaster raster;
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  std::string failure;

  if (setjmp(state.jump)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed to decode " + describe(path) + ": " + state.message);
  }

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);

  if (width == 0 || height == 0) {
    failure = "zero-dimension image";
  } else if (bit_depth != 8 && bit_depth != 16) {
    failure = "unsupported bit depth " + std::to_string(bit_depth);
  } else if (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB) {
    failure = "unsupported color type (only gray and RGB are accepted)";
  }
  if (!failure.empty()) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(describe(path) + ": " + failure);
  }

  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  raster.width = static_cast<int>(width);
  raster.height = static_cast<int>(height);
  raster.channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
  raster.bit_depth = bit_depth;

  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = buffer.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, info);

  png_textp text = nullptr;
  int num_text = 0;
  if (png_get_text(png, info, &text, &num_text) > 0) {
    for (int i = 0; i < num_text; ++i) {
      raster.text.emplace_back(text[i].key, text[i].text ? text[i].text : "");
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t samples = static_cast<std::size_t>(width) * height * raster.channels;
  raster.codes.resize(samples);
  for (png_uint_32 y = 0; y < height; ++y) {
    const png_byte* row = rows[y];
    const std::size_t row_samples = static_cast<std::size_t>(width) * raster.channels;
    for (std::size_t i = 0; i < row_samples; ++i) {
      const std::uint16_t code =
          bit_depth == 16 ? static_cast<std::uint16_t>((row[2 * i] << 8) | row[2 * i + 1])
                          : static_cast<std::uint16_t>(row[i]);
      raster.codes[y * row_samples + i] = code;
    }
  }
  return raster;
}

void write_png(const RawRaster& raster, const std::filesystem::path& path) {
  if (raster.bit_depth != 8 && raster.bit_depth != 16) {
    throw InvalidArgument("PNG bit depth must be 8 or 16");
  }
  if (raster.channels != 1 && raster.channels != 3) {
    throw InvalidArgument("PNG channel count must be 1 or 3");
  }
  const std::size_t row_samples = static_cast<std::size_t>(raster.width) * raster.channels;
  const std::size_t bytes_per_sample = raster.bit_depth / 8;
  std::vector<png_byte> buffer(row_samples * bytes_per_sample * raster.height);
  for (std::size_t i = 0; i < raster.codes.size(); ++i) {
    const std::uint16_t code = raster.codes[i];
    if (bytes_per_sample == 2) {
      buffer[2 * i] = static_cast<png_byte>(code >> 8);
      buffer[2 * i + 1] = static_cast<png_byte>(code & 0xff);
    } else {
      buffer[i] = static_cast<png_byte>(code);
    }
  }
  std::vector<png_bytep> rows(raster.height);
  for (int y = 0; y < raster.height; ++y) {
    rows[y] = buffer.data() + y * row_samples * bytes_per_sample;
  }

  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw IoError("cannot write " + describe(path));

  PngErrorState state;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &state, on_png_error,
                                            on_png_warning);
  if (!png) throw IoError("libpng: cannot allocate write struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng: cannot allocate info struct");
  }
  std::vector<png_text> text_chunks;
  if (setjmp(state.jump)) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed to encode " + describe(path) + ": " + state.message);
  }

  png_init_io(png, file.get());
  // Fixed settings so identical rasters always produce identical bytes.
  png_set_compression_level(png, 6);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_SUB);
  png_set_IHDR(png, info, raster.width, raster.height, raster.bit_depth,
               raster.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  for (const auto& [key, value] : raster.text) {
    png_text chunk{};
    chunk.compression = PNG_TEXT_COMPRESSION_NONE;
    chunk.key = const_cast<char*>(key.c_str());
    chunk.text = const_cast<char*>(value.c_str());
    chunk.text_length = value.size();
    text_chunks.push_back(chunk);
  }
  if (!text_chunks.empty()) {
    png_set_text(png, info, text_chunks.data(), static_cast<int>(text_chunks.size()));
  }
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);

  if (std::fflush(file.get()) != 0) throw IoError("cannot flush " + describe(path));
}

ImagePlane load_image(const std::filesystem::path& path, Encoding expected_encoding) {
  const RawRaster raster = read_png(path);
  const double scale = max_code(raster.bit_depth);
  std::vector<double> data(raster.codes.size());
  std::transform(raster.codes.begin(), raster.codes.end(), data.begin(),
                 [scale](std::uint16_t c) { return c / scale; });
  return ImagePlane(raster.width, raster.height, raster.channels, std::move(data),
                    expected_encoding);
}

void save_image(const ImagePlane& img, const std::filesystem::path& path, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw InvalidArgument("bit depth must be 8 or 16");
  if (img.empty()) throw InvalidArgument("cannot save an empty image");
  if (!img.within_unit_range()) throw InvalidArgument("cannot save samples outside [0,1]");
  RawRaster raster;
  raster.width = img.width();
  raster.height = img.height();
  raster.channels = img.channels();
  raster.bit_depth = bit_depth;
  const double scale = max_code(bit_depth);
  raster.codes.resize(img.values().size());
  std::transform(img.values().begin(), img.values().end(), raster.codes.begin(),
                 [scale](double v) { return static_cast<std::uint16_t>(std::lround(v * scale)); });
  write_png(raster, path);
}

DepthMap load_depth(const std::filesystem::path& path) {
  const RawRaster raster = read_png(path);
  if (raster.channels != 1) throw IoError(describe(path) + ": depth maps must be grayscale");
  double scale = 1.0;
  for (const auto& [key, value] : raster.text) {
    if (key == kDepthScaleKey) {
      try {
        scale = std::stod(value);
      } catch (const std::exception&) {
        throw IoError(describe(path) + ": malformed depth scale '" + value + "'");
      }
      if (!std::isfinite(scale) || scale <= 0.0) {
        throw IoError(describe(path) + ": depth scale must be positive");
      }
    }
  }
  const double full = max_code(raster.bit_depth);
  std::vector<double> data(raster.codes.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (raster.codes[i] == 0) throw IoError(describe(path) + ": depth code value 0 is invalid");
    data[i] = raster.codes[i] / full * scale;
  }
  return DepthMap(raster.width, raster.height, std::move(data));
}

void save_depth(const DepthMap& depth, const std::filesystem::path& path) {
  if (depth.values().empty()) throw InvalidArgument("cannot save an empty depth map");
  const double scale = *std::max_element(depth.values().begin(), depth.values().end());
  RawRaster raster;
  raster.width = depth.width();
  raster.height = depth.height();
  raster.channels = 1;
  raster.bit_depth = 16;
  raster.codes.resize(depth.values().size());
  std::transform(depth.values().begin(), depth.values().end(), raster.codes.begin(),
                 [scale](double v) {
                   const long code = std::lround(v / scale * 65535.0);
                   return static_cast<std::uint16_t>(std::clamp(code, 1L, 65535L));
                 });
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", scale);
  raster.text.emplace_back(kDepthScaleKey, buf);
  write_png(raster, path);
}

RegionMask load_mask(const std::filesystem::path& path) {
  const RawRaster raster = read_png(path);
  std::vector<std::uint8_t> data(static_cast<std::size_t>(raster.width) * raster.height);
  for (std::size_t p = 0; p < data.size(); ++p) {
    bool on = false;
    for (int c = 0; c < raster.channels; ++c) on |= raster.codes[p * raster.channels + c] != 0;
    data[p] = on ? 1 : 0;
  }
  return RegionMask(raster.width, raster.height, std::move(data));
}

void save_mask(const RegionMask& mask, const std::filesystem::path& path) {
  RawRaster raster;
  raster.width = mask.width();
  raster.height = mask.height();
  raster.channels = 1;
  raster.bit_depth = 8;
  raster.codes.resize(mask.values().size());
  std::transform(mask.values().begin(), mask.values().end(), raster.codes.begin(),
                 [](std::uint8_t v) { return static_cast<std::uint16_t>(v ? 255 : 0); });
  write_png(raster, path);
}

}  // namespace flaresynth
