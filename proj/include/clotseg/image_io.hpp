#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clotseg/error.hpp"
#include "clotseg/image.hpp"

namespace clotseg {

/// A loaded slice plus the provenance needed to reproduce its normalization.
struct StudySlice {
  GrayImage image;
  std::string source_id;
  int original_bit_depth = 16;
  double raw_min = 0.0;
  double raw_max = 0.0;
};

/// Per-slice min-max normalization of stored values. Constant input maps to 0.
inline StudySlice normalize_stored(std::span<const std::int32_t> stored, std::size_t width,
                                   std::size_t height, int bit_depth, std::string source_id) {
  if (stored.size() != width * height) {
    throw Error(ErrorCode::dimension_mismatch, "stored value count does not match dimensions");
  }
  StudySlice slice;
  slice.source_id = std::move(source_id);
  slice.original_bit_depth = bit_depth;
  std::vector<double> pixels(stored.size(), 0.0);
  if (!stored.empty()) {
    auto [lo, hi] = std::minmax_element(stored.begin(), stored.end());
    slice.raw_min = *lo;
    slice.raw_max = *hi;
    if (*hi > *lo) {
      const double range = static_cast<double>(*hi) - static_cast<double>(*lo);
      for (std::size_t i = 0; i < stored.size(); ++i) {
        pixels[i] = (static_cast<double>(stored[i]) - static_cast<double>(*lo)) / range;
      }
    }
  }
  slice.image = GrayImage(width, height, std::move(pixels));
  return slice;
}

namespace detail {

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::size_t pos) : bytes_(bytes), pos_(pos) {}

  bool at_end() const noexcept { return pos_ >= bytes_.size(); }
  std::size_t pos() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  void need(std::size_t n) const {
    if (remaining() < n) throw Error(ErrorCode::malformed_dicom, "unexpected end of data at offset " + std::to_string(pos_));
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = static_cast<std::uint32_t>(bytes_[pos_]) | (static_cast<std::uint32_t>(bytes_[pos_ + 1]) << 8) |
                      (static_cast<std::uint32_t>(bytes_[pos_ + 2]) << 16) |
                      (static_cast<std::uint32_t>(bytes_[pos_ + 3]) << 24);
    pos_ += 4;
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  void skip(std::size_t n) { take(n); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
};

inline constexpr std::uint32_t kUndefinedLength = 0xFFFFFFFFu;
inline constexpr std::uint32_t tag(std::uint16_t group, std::uint16_t element) {
  return (static_cast<std::uint32_t>(group) << 16) | element;
}
inline constexpr std::uint32_t kItem = tag(0xFFFE, 0xE000);
inline constexpr std::uint32_t kItemDelimiter = tag(0xFFFE, 0xE00D);
inline constexpr std::uint32_t kSequenceDelimiter = tag(0xFFFE, 0xE0DD);
inline constexpr std::uint32_t kPixelData = tag(0x7FE0, 0x0010);

inline bool has_long_length(std::string_view vr) {
  static constexpr std::string_view kLong[] = {"OB", "OD", "OF", "OL", "OV", "OW", "SQ",
                                               "SV", "UC", "UN", "UR", "UT", "UV"};
  return std::find(std::begin(kLong), std::end(kLong), vr) != std::end(kLong);
}

struct DicomElement {
  std::uint32_t tag = 0;
  std::string vr;
  std::uint32_t length = 0;
  std::span<const std::uint8_t> value;
};

inline std::string trim_value(std::span<const std::uint8_t> value) {
  std::string s(value.begin(), value.end());
  while (!s.empty() && (s.back() == '\0' || s.back() == ' ')) s.pop_back();
  std::size_t first = s.find_first_not_of(' ');
  return first == std::string::npos ? std::string{} : s.substr(first);
}

inline void skip_undefined_sequence(ByteReader& reader);

/// Reads one explicit-VR little-endian element. Undefined-length sequences are skipped.
inline DicomElement read_element(ByteReader& reader) {
  DicomElement el;
  const std::uint16_t group = reader.u16();
  const std::uint16_t element = reader.u16();
  el.tag = tag(group, element);
  auto vr_bytes = reader.take(2);
  el.vr.assign(vr_bytes.begin(), vr_bytes.end());
  if (!std::isupper(static_cast<unsigned char>(el.vr[0])) || !std::isupper(static_cast<unsigned char>(el.vr[1]))) {
    throw Error(ErrorCode::malformed_dicom, "invalid VR at offset " + std::to_string(reader.pos() - 2));
  }
  if (has_long_length(el.vr)) {
    reader.skip(2);
    el.length = reader.u32();
  } else {
    el.length = reader.u16();
  }
  if (el.length == kUndefinedLength) {
    if (el.tag == kPixelData) {
      throw Error(ErrorCode::unsupported_transfer_syntax, "encapsulated (compressed) pixel data");
    }
    if (el.vr != "SQ" && el.vr != "UN") {
      throw Error(ErrorCode::malformed_dicom, "undefined length on non-sequence element");
    }
    skip_undefined_sequence(reader);
    return el;
  }
  el.value = reader.take(el.length);
  return el;
}

inline void skip_undefined_sequence(ByteReader& reader) {
  for (;;) {
    const std::uint16_t group = reader.u16();
    const std::uint16_t element = reader.u16();
    const std::uint32_t item_tag = tag(group, element);
    const std::uint32_t length = reader.u32();
    if (item_tag == kSequenceDelimiter) return;
    if (item_tag != kItem) throw Error(ErrorCode::malformed_dicom, "expected sequence item");
    if (length != kUndefinedLength) {
      reader.skip(length);
      continue;
    }
    for (;;) {
      reader.need(4);
      ByteReader peek = reader;
      const std::uint16_t next_group = peek.u16();
      const std::uint32_t next = tag(next_group, peek.u16());
      if (next == kItemDelimiter) {
        reader.skip(8);
        break;
      }
      read_element(reader);
    }
  }
}

inline std::uint16_t as_u16(const DicomElement& el) {
  if (el.value.size() < 2) throw Error(ErrorCode::malformed_dicom, "short US value");
  return static_cast<std::uint16_t>(el.value[0] | (el.value[1] << 8));
}

}  // namespace detail

inline constexpr std::string_view kExplicitVrLittleEndian = "1.2.840.10008.1.2.1";

/// Parses a single-frame, uncompressed, explicit-VR little-endian monochrome DICOM file.
inline StudySlice load_dicom(std::span<const std::uint8_t> bytes, std::string source_id = {}) {
  using namespace detail;
  if (bytes.size() < 132 || std::memcmp(bytes.data() + 128, "DICM", 4) != 0) {
    throw Error(ErrorCode::missing_preamble, "no DICM magic at offset 128");
  }
  ByteReader reader(bytes, 132);

  std::optional<std::string> transfer_syntax;
  std::optional<std::uint16_t> rows, columns, bits_allocated, bits_stored, pixel_representation, samples;
  std::optional<std::string> photometric, frames;
  std::optional<std::span<const std::uint8_t>> pixel_data;
  bool dataset_checked = false;

  while (!reader.at_end()) {
    // The meta group is always explicit VR LE; check the syntax before touching the dataset.
    if (!dataset_checked) {
      reader.need(2);
      ByteReader peek = reader;
      if (peek.u16() != 0x0002) {
        if (!transfer_syntax) throw Error(ErrorCode::unsupported_transfer_syntax, "no transfer syntax in file meta");
        if (*transfer_syntax != kExplicitVrLittleEndian) {
          throw Error(ErrorCode::unsupported_transfer_syntax, *transfer_syntax);
        }
        dataset_checked = true;
      }
    }
    const DicomElement el = read_element(reader);
    switch (el.tag) {
      case tag(0x0002, 0x0010): transfer_syntax = trim_value(el.value); break;
      case tag(0x0028, 0x0002): samples = as_u16(el); break;
      case tag(0x0028, 0x0004): photometric = trim_value(el.value); break;
      case tag(0x0028, 0x0008): frames = trim_value(el.value); break;
      case tag(0x0028, 0x0010): rows = as_u16(el); break;
      case tag(0x0028, 0x0011): columns = as_u16(el); break;
      case tag(0x0028, 0x0100): bits_allocated = as_u16(el); break;
      case tag(0x0028, 0x0101): bits_stored = as_u16(el); break;
      case tag(0x0028, 0x0103): pixel_representation = as_u16(el); break;
      case kPixelData: pixel_data = el.value; break;
      default: break;
    }
  }
  if (!dataset_checked) {
    if (!transfer_syntax || *transfer_syntax != kExplicitVrLittleEndian) {
      throw Error(ErrorCode::unsupported_transfer_syntax, transfer_syntax.value_or("no transfer syntax in file meta"));
    }
  }
  if (!pixel_data) throw Error(ErrorCode::missing_pixel_data, "no (7FE0,0010) element");
  if (!rows || !columns || *rows == 0 || *columns == 0) {
    throw Error(ErrorCode::unsupported_image, "missing or zero Rows/Columns");
  }
  if (samples.value_or(1) != 1) throw Error(ErrorCode::unsupported_image, "only single-sample (grayscale) images");
  const std::string pi = photometric.value_or("MONOCHROME2");
  if (pi != "MONOCHROME1" && pi != "MONOCHROME2") throw Error(ErrorCode::unsupported_image, "photometric " + pi);
  if (frames && !frames->empty() && std::stoi(*frames) > 1) throw Error(ErrorCode::unsupported_image, "multi-frame");
  const int allocated = bits_allocated.value_or(16);
  if (allocated != 8 && allocated != 16) {
    throw Error(ErrorCode::unsupported_image, "bits allocated " + std::to_string(allocated));
  }
  const int stored_bits = std::clamp<int>(bits_stored.value_or(static_cast<std::uint16_t>(allocated)), 1, allocated);
  const bool is_signed = pixel_representation.value_or(0) == 1;

  const std::size_t width = *columns;
  const std::size_t height = *rows;
  const std::size_t bytes_per_sample = static_cast<std::size_t>(allocated) / 8;
  const std::size_t expected = width * height * bytes_per_sample;
  const std::size_t actual = pixel_data->size();
  // Odd-length values carry one pad byte.
  if (actual != expected && !(expected % 2 == 1 && actual == expected + 1)) {
    throw Error(ErrorCode::dimension_mismatch, "pixel data has " + std::to_string(actual) + " bytes, expected " +
                                                   std::to_string(expected));
  }

  std::vector<std::int32_t> stored(width * height);
  const std::uint32_t value_mask = stored_bits >= 32 ? 0xFFFFFFFFu : ((1u << stored_bits) - 1u);
  const auto& data = *pixel_data;
  for (std::size_t i = 0; i < stored.size(); ++i) {
    std::uint32_t raw = bytes_per_sample == 1 ? data[i]
                                              : static_cast<std::uint32_t>(data[2 * i] | (data[2 * i + 1] << 8));
    raw &= value_mask;
    std::int32_t v = static_cast<std::int32_t>(raw);
    if (is_signed && (raw & (1u << (stored_bits - 1)))) v -= static_cast<std::int32_t>(1u << stored_bits);
    stored[i] = v;
  }
  StudySlice slice = normalize_stored(stored, width, height, allocated, std::move(source_id));
  if (pi == "MONOCHROME1" && slice.raw_max > slice.raw_min) {
    for (double& p : slice.image.pixels()) p = 1.0 - p;
  }
  return slice;
}

namespace detail {

inline std::size_t pgm_next_token(std::span<const std::uint8_t> bytes, std::size_t& pos, std::string& token) {
  token.clear();
  while (pos < bytes.size()) {
    const char c = static_cast<char>(bytes[pos]);
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    token.push_back(static_cast<char>(bytes[pos++]));
  }
  return token.size();
}

inline std::size_t pgm_number(std::span<const std::uint8_t> bytes, std::size_t& pos, const char* what) {
  std::string token;
  if (pgm_next_token(bytes, pos, token) == 0) throw Error(ErrorCode::bad_header, std::string("missing ") + what);
  std::size_t value = 0;
  for (char c : token) {
    if (c < '0' || c > '9') throw Error(ErrorCode::bad_header, std::string("non-numeric ") + what);
    value = value * 10 + static_cast<std::size_t>(c - '0');
    if (value > (1u << 30)) throw Error(ErrorCode::bad_header, std::string("oversized ") + what);
  }
  return value;
}

}  // namespace detail

/// Parses a binary PGM (P5). Samples wider than a byte are big-endian.
inline StudySlice load_pgm(std::span<const std::uint8_t> bytes, std::string source_id = {}) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw Error(ErrorCode::bad_magic, "not a P5 PGM");
  std::size_t pos = 2;
  const std::size_t width = detail::pgm_number(bytes, pos, "width");
  const std::size_t height = detail::pgm_number(bytes, pos, "height");
  const std::size_t maxval = detail::pgm_number(bytes, pos, "maxval");
  if (width == 0 || height == 0) throw Error(ErrorCode::bad_header, "zero dimension");
  if (maxval == 0 || maxval > 65535) throw Error(ErrorCode::bad_header, "maxval out of range");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw Error(ErrorCode::truncated_pixel_data, "no raster after header");
  }
  ++pos;
  const std::size_t sample_bytes = maxval < 256 ? 1 : 2;
  const std::size_t needed = width * height * sample_bytes;
  if (bytes.size() - pos < needed) {
    throw Error(ErrorCode::truncated_pixel_data,
                std::to_string(bytes.size() - pos) + " raster bytes, expected " + std::to_string(needed));
  }
  std::vector<std::int32_t> stored(width * height);
  for (std::size_t i = 0; i < stored.size(); ++i) {
    stored[i] = sample_bytes == 1 ? bytes[pos + i] : (bytes[pos + 2 * i] << 8) | bytes[pos + 2 * i + 1];
  }
  return normalize_stored(stored, width, height, sample_bytes == 1 ? 8 : 16, std::move(source_id));
}

/// Quantizes to 16-bit stored values (round(p * 65535)).
inline std::vector<std::uint16_t> quantize16(const GrayImage& image) {
  std::vector<std::uint16_t> out(image.size());
  auto px = image.pixels();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::uint16_t>(std::lround(clamp01(px[i]) * 65535.0));
  return out;
}

inline std::vector<std::uint8_t> quantize8(const GrayImage& image) {
  std::vector<std::uint8_t> out(image.size());
  auto px = image.pixels();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::uint8_t>(std::lround(clamp01(px[i]) * 255.0));
  return out;
}

inline std::vector<std::uint8_t> encode_pgm16(const GrayImage& image) {
  const std::string header = "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n65535\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + image.size() * 2);
  for (std::uint16_t v : quantize16(image)) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  }
  return out;
}

inline std::vector<std::uint8_t> encode_pgm8(const GrayImage& image) {
  const std::string header = "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  auto q = quantize8(image);
  out.insert(out.end(), q.begin(), q.end());
  return out;
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::io_error, "read failed for " + path.string());
  return bytes;
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::io_error, "write failed for " + path.string());
}

inline void write_file(const std::filesystem::path& path, std::string_view text) {
  write_file(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

/// Detects DICOM (DICM at 128) or PGM (P5) by content. source_id is the file stem.
inline StudySlice load_image_file(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  std::string id = path.stem().string();
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return load_pgm(bytes, std::move(id));
  if (bytes.size() >= 132 && std::memcmp(bytes.data() + 128, "DICM", 4) == 0) return load_dicom(bytes, std::move(id));
  throw Error(ErrorCode::bad_magic, path.string() + " is neither DICOM nor P5 PGM");
}

}  // namespace clotseg
