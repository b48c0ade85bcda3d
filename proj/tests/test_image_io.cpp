#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <string>

#include "clotseg/image_io.hpp"
#include "clotseg/random.hpp"

using namespace clotseg;

namespace {

const std::filesystem::path kDicom = std::filesystem::path(CLOTSEG_TEST_DATA) / "dicom";

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::io_error;
}

}  // namespace

TEST(Dicom, Tiny16BitNormalizesToThirds) {
  const auto s = load_dicom(read_file(kDicom / "tiny_2x2_u16.dcm"), "tiny");
  ASSERT_EQ(s.image.width(), 2u);
  ASSERT_EQ(s.image.height(), 2u);
  EXPECT_DOUBLE_EQ(s.image(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(s.image(1, 0), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.image(0, 1), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.image(1, 1), 1.0);
  EXPECT_EQ(s.original_bit_depth, 16);
  EXPECT_EQ(s.raw_min, 0.0);
  EXPECT_EQ(s.raw_max, 300.0);
  EXPECT_EQ(s.source_id, "tiny");
}

TEST(Dicom, EightBitSamples) {
  const auto s = load_dicom(read_file(kDicom / "tiny_2x3_u8.dcm"));
  ASSERT_EQ(s.image.width(), 3u);
  ASSERT_EQ(s.image.height(), 2u);
  EXPECT_EQ(s.original_bit_depth, 8);
  const double want[] = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(s.image.pixels()[i], want[i], 1e-15);
}

TEST(Dicom, SignedPixelsAreSignExtended) {
  const auto s = load_dicom(read_file(kDicom / "tiny_2x2_s16.dcm"));
  EXPECT_EQ(s.raw_min, -100.0);
  EXPECT_EQ(s.raw_max, 200.0);
  EXPECT_DOUBLE_EQ(s.image(1, 0), 100.0 / 300.0);
}

TEST(Dicom, Monochrome1IsInverted) {
  const auto s = load_dicom(read_file(kDicom / "tiny_2x2_mono1.dcm"));
  EXPECT_DOUBLE_EQ(s.image(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(s.image(1, 1), 0.0);
}

TEST(Dicom, ConstantImageNormalizesToZero) {
  const auto s = load_dicom(read_file(kDicom / "constant_8x8.dcm"));
  EXPECT_EQ(s.raw_min, 1234.0);
  EXPECT_EQ(s.raw_max, 1234.0);
  for (double p : s.image.pixels()) EXPECT_EQ(p, 0.0);
}

TEST(Dicom, FullSizeSlice) {
  const auto s = load_dicom(read_file(kDicom / "slice_256.dcm"));
  EXPECT_EQ(s.image.width(), 256u);
  EXPECT_EQ(s.image.height(), 256u);
}

TEST(Dicom, MatchesPgmOfSameGrid) {
  const auto d = load_dicom(read_file(kDicom / "slice_256.dcm"));
  const auto p = load_pgm(read_file(kDicom / "slice_256.pgm"));
  EXPECT_TRUE(d.image == p.image);
  EXPECT_EQ(d.raw_min, p.raw_min);
  EXPECT_EQ(d.raw_max, p.raw_max);
}

TEST(Dicom, ErrorPaths) {
  EXPECT_EQ(code_of([] { load_dicom(read_file(kDicom / "not_dicom.dcm")); }), ErrorCode::missing_preamble);
  EXPECT_EQ(code_of([] { load_dicom(read_file(kDicom / "big_endian.dcm")); }),
            ErrorCode::unsupported_transfer_syntax);
  EXPECT_EQ(code_of([] { load_dicom(read_file(kDicom / "no_pixel_data.dcm")); }), ErrorCode::missing_pixel_data);
  EXPECT_EQ(code_of([] { load_dicom(read_file(kDicom / "short_pixel_data.dcm")); }), ErrorCode::dimension_mismatch);
  EXPECT_EQ(code_of([] { load_dicom(std::vector<std::uint8_t>(10, 0)); }), ErrorCode::missing_preamble);
}

TEST(Dicom, TruncatedFileIsMalformedNotCrash) {
  const auto full = read_file(kDicom / "tiny_2x2_u16.dcm");
  for (std::size_t cut = 132; cut < full.size(); cut += 7) {
    std::vector<std::uint8_t> part(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_THROW(load_dicom(part), Error) << "cut at " << cut;
  }
}

TEST(Pgm, EightBitLinearScaling) {
  std::string f = "P5\n3 2\n255\n";
  for (int v : {0, 51, 102, 153, 204, 255}) f.push_back(static_cast<char>(v));
  const auto s = load_pgm(bytes_of(f));
  const double want[] = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(s.image.pixels()[i], want[i], 1e-15);
  EXPECT_EQ(s.original_bit_depth, 8);
}

TEST(Pgm, SixteenBitEndpoints) {
  std::string f = "P5\n# comment\n2 1\n65535\n";
  f += std::string("\x00\x00\xff\xff", 4);
  const auto s = load_pgm(bytes_of(f));
  EXPECT_EQ(s.image.pixels()[0], 0.0);
  EXPECT_EQ(s.image.pixels()[1], 1.0);
  EXPECT_EQ(s.original_bit_depth, 16);
}

TEST(Pgm, ErrorPaths) {
  EXPECT_EQ(code_of([] { load_pgm(bytes_of("P2\n1 1\n255\n0")); }), ErrorCode::bad_magic);
  EXPECT_EQ(code_of([] { load_pgm(bytes_of("P5\n1 x\n255\n0")); }), ErrorCode::bad_header);
  EXPECT_EQ(code_of([] { load_pgm(bytes_of("P5\n1 1\n0\n0")); }), ErrorCode::bad_header);
  EXPECT_EQ(code_of([] { load_pgm(bytes_of("P5\n4 4\n255\nabc")); }), ErrorCode::truncated_pixel_data);
  EXPECT_EQ(code_of([] { load_pgm(bytes_of("P5\n2 1\n65535\n\x01\x02\x03")); }), ErrorCode::truncated_pixel_data);
}

TEST(Pgm, RoundTripWithinOneLsb) {
  Rng rng(11);
  std::vector<double> px(64 * 48);
  for (double& v : px) v = rng.uniform();
  px[0] = 0.0;
  px[1] = 1.0;
  const GrayImage img(64, 48, px);
  const auto back = load_pgm(encode_pgm16(img));
  for (std::size_t i = 0; i < px.size(); ++i) EXPECT_LE(std::abs(back.image.pixels()[i] - px[i]), 1.0 / 65535.0);
}

TEST(Normalize, OrderPreserving) {
  Rng rng(3);
  std::vector<std::int32_t> stored(200);
  for (auto& v : stored) v = static_cast<std::int32_t>(rng.next() % 4096);
  const auto s = normalize_stored(stored, 20, 10, 16, "x");
  for (std::size_t i = 0; i < stored.size(); ++i)
    for (std::size_t j = 0; j < stored.size(); ++j)
      if (stored[i] < stored[j]) {
        EXPECT_LE(s.image.pixels()[i], s.image.pixels()[j]);
      }
}

TEST(ImageFile, DetectsFormatAndUsesStem) {
  const auto s = load_image_file(kDicom / "tiny_2x2_u16.dcm");
  EXPECT_EQ(s.source_id, "tiny_2x2_u16");
  EXPECT_EQ(code_of([] { load_image_file(kDicom / "missing.dcm"); }), ErrorCode::io_error);
}

TEST(GrayImage, RejectsBadPixels) {
  EXPECT_EQ(code_of([] { GrayImage(2, 2, std::vector<double>(3, 0.0)); }), ErrorCode::dimension_mismatch);
  EXPECT_EQ(code_of([] { GrayImage(1, 1, std::vector<double>{1.5}); }), ErrorCode::invalid_params);
}
