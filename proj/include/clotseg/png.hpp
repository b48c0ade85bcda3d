#pragma once

#include <png.h>

#include <cstdint>
#include <vector>

#include "clotseg/error.hpp"
#include "clotseg/image.hpp"
#include "clotseg/image_io.hpp"

namespace clotseg {

/// Encodes an 8-bit grayscale PNG (round(p * 255)). Output carries no timestamps.
inline std::vector<std::uint8_t> encode_png8(const GrayImage& image) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(ErrorCode::io_error, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorCode::io_error, "png_create_info_struct failed");
  }
  std::vector<std::uint8_t> out;
  const std::vector<std::uint8_t> samples = quantize8(image);
  std::vector<png_const_bytep> rows(image.height());
  for (std::size_t y = 0; y < image.height(); ++y) rows[y] = samples.data() + y * image.width();

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::io_error, "libpng encoding failed");
  }
  png_set_write_fn(
      png, &out,
      [](png_structp p, png_bytep data, png_size_t length) {
        auto* sink = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(p));
        sink->insert(sink->end(), data, data + length);
      },
      nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()), static_cast<png_uint_32>(image.height()), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

inline GrayImage mask_to_image(const BinaryMask& mask) {
  GrayImage img(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i) img.pixels()[i] = mask.test(i) ? 1.0 : 0.0;
  return img;
}

}  // namespace clotseg
