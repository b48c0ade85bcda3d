#include <gtest/gtest.h>

#include <cmath>

#include "clotseg/filters.hpp"
#include "clotseg/random.hpp"

using namespace clotseg;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::io_error;
}

GrayImage random_image(std::size_t w, std::size_t h, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> px(w * h);
  for (double& v : px) v = rng.uniform();
  return GrayImage(w, h, std::move(px));
}

}  // namespace

TEST(Gaussian, KernelShape) {
  const auto k = gaussian_kernel(1.5);
  ASSERT_EQ(k.size(), 11u);
  double sum = 0.0;
  for (double w : k) sum += w;
  EXPECT_NEAR(sum, 1.0, 1e-15);
  for (std::size_t i = 0; i < k.size(); ++i) EXPECT_DOUBLE_EQ(k[i], k[k.size() - 1 - i]);
  // Ratio of neighbours follows exp(-(2i+1)/(2 sigma^2)).
  EXPECT_NEAR(k[6] / k[5], std::exp(-1.0 / 4.5), 1e-14);
}

TEST(Gaussian, ConstantAndRampPreserved) {
  const GrayImage c(20, 20, 0.37);
  const auto bc = gaussian_blur(c, 1.5);
  for (double v : bc.pixels()) EXPECT_NEAR(v, 0.37, 1e-15);

  GrayImage ramp(30, 30);
  for (std::size_t y = 0; y < 30; ++y)
    for (std::size_t x = 0; x < 30; ++x) ramp(x, y) = x / 40.0;
  const auto br = gaussian_blur(ramp, 1.5);
  for (std::size_t y = 0; y < 30; ++y)
    for (std::size_t x = 5; x < 25; ++x) EXPECT_NEAR(br(x, y), x / 40.0, 1e-12);
}

TEST(Unsharp, ZeroGainIsIdentity) {
  const auto f = random_image(32, 32, 5);
  FilterParams p;
  p.lambda = 0.0;
  EXPECT_EQ(unsharp(f, p), f);
}

TEST(Unsharp, StepEdgeMatchesHandComputation) {
  // Vertical step 0.2 | 0.8 at x = 16. Only the horizontal pass matters.
  GrayImage f(32, 8);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 32; ++x) f(x, y) = x < 16 ? 0.2 : 0.8;
  const double sigma = 1.5;
  std::vector<double> w;
  double z = 0.0;
  for (int i = -5; i <= 5; ++i) {
    w.push_back(std::exp(-i * i / (2 * sigma * sigma)));
    z += w.back();
  }
  double blur15 = 0.0;  // pixel x = 15, neighbours 10..20
  for (int i = -5; i <= 5; ++i) blur15 += w[i + 5] / z * (15 + i < 16 ? 0.2 : 0.8);
  const double want = 0.2 + 0.21 * (0.2 - blur15);
  const auto g = unsharp(f, FilterParams{});
  EXPECT_NEAR(g(15, 3), want, 1e-14);
  EXPECT_LT(g(15, 3), 0.2);
  EXPECT_GT(g(16, 3), 0.8);
  EXPECT_DOUBLE_EQ(g(2, 3), 0.2);
}

TEST(Clahe, TileEdges) {
  EXPECT_EQ(tile_edges(256, 8), (std::vector<std::size_t>{0, 32, 64, 96, 128, 160, 192, 224, 256}));
  EXPECT_EQ(tile_edges(10, 3), (std::vector<std::size_t>{0, 3, 6, 10}));
}

TEST(Clahe, ClippedHistogramConservesCount) {
  const auto f = random_image(16, 16, 9);
  std::vector<double> v(f.pixels().begin(), f.pixels().end());
  for (int i = 0; i < 100; ++i) v[i] = 0.5;  // one tall bin
  FilterParams p;
  const auto h = clipped_histogram(v, p);
  double total = 0.0;
  for (double c : h) total += c;
  EXPECT_NEAR(total, static_cast<double>(v.size()), 1e-9);
  const double limit = p.clahe_clip * v.size();
  for (double c : h) EXPECT_LE(c, limit + total / p.clahe_bins + 1e-12);
}

TEST(Clahe, UniformTileMapsToBinMidpoints) {
  std::vector<double> v(256);
  for (std::size_t i = 0; i < 256; ++i) v[i] = (i + 0.5) / 256.0;
  const auto m = tile_mapping(v, FilterParams{});
  ASSERT_FALSE(m.identity);
  for (std::size_t k = 0; k < 256; ++k) EXPECT_NEAR(m.lut[k], (k + 0.5) / 256.0, 1e-15);
}

TEST(Clahe, SingleBinTileIsIdentity) {
  const std::vector<double> v(64, 0.3);
  const auto m = tile_mapping(v, FilterParams{});
  EXPECT_TRUE(m.identity);
  EXPECT_EQ(m(0.3), 0.3);
}

TEST(Clahe, TilePeriodicImageMatchesOracle) {
  // Every 8x8 tile holds the same 64 distinct values, so all tile maps agree
  // and blending reduces to the single clipped-CDF map.
  GrayImage f(64, 64);
  for (std::size_t y = 0; y < 64; ++y)
    for (std::size_t x = 0; x < 64; ++x) f(x, y) = ((y % 8) * 8 + (x % 8)) * 4.0 / 256.0 + 1.0 / 512.0;
  const auto g = clahe(f, FilterParams{});

  // Oracle: 64 occupied bins of count 1, clip 0.64, excess 23.04 spread over 256 bins.
  const double n = 64.0, limit = 0.64, share = 64 * (1.0 - limit) / 256.0;
  std::vector<double> lut(256);
  double cum = 0.0;
  for (int k = 0; k < 256; ++k) {
    const double h = (k % 4 == 0 ? limit : 0.0) + share;
    lut[k] = (cum + 0.5 * h) / n;
    cum += h;
  }
  for (std::size_t y = 0; y < 64; ++y)
    for (std::size_t x = 0; x < 64; ++x) {
      const int bin = static_cast<int>(f(x, y) * 256);
      ASSERT_NEAR(g(x, y), lut[bin], 1e-12) << x << "," << y;
    }
}

TEST(Clahe, ConstantImageFixedPoint) {
  for (double c : {0.0, 0.25, 0.999, 1.0}) {
    const GrayImage f(64, 48, c);
    EXPECT_EQ(clahe(f, FilterParams{}), f);
  }
}

TEST(Clahe, OutputInRangeWithMonotoneTileMaps) {
  const auto f = random_image(64, 64, 21);
  const auto g = clahe(f, FilterParams{});
  for (double v : g.pixels()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  std::vector<double> tile(f.pixels().begin(), f.pixels().begin() + 64);
  const auto m = tile_mapping(tile, FilterParams{});
  for (std::size_t k = 1; k < m.lut.size(); ++k) EXPECT_LE(m.lut[k - 1], m.lut[k]);
}

TEST(Clahe, TooFineGrid) {
  EXPECT_EQ(code_of([] { clahe(GrayImage(16, 16, 0.5), FilterParams{}); }), ErrorCode::tile_grid_too_fine);
}

TEST(Superpose, Arithmetic) {
  const GrayImage o(8, 8, 0.3), e(8, 8, 0.9);
  EXPECT_NEAR(superpose_linear(o, e)(1, 1), 0.6, 1e-15);
  EXPECT_NEAR(superpose_weighted(o, e)(1, 1), 0.7, 1e-15);
  EXPECT_EQ(code_of([&] { superpose_linear(o, GrayImage(9, 8)); }), ErrorCode::dimension_mismatch);
}

TEST(FilteredSet, ConstantImageFixedPoints) {
  const GrayImage f(64, 64, 0.42);
  const auto s = build_filtered_set(f, FilterParams{});
  for (const GrayImage* img : {&s.original, &s.sharpened, &s.enhanced, &s.simple_enhanced, &s.weighted_enhanced}) {
    for (double v : img->pixels()) EXPECT_NEAR(v, 0.42, 1e-15);
  }
}

TEST(FilteredSet, TooSmall) {
  EXPECT_EQ(code_of([] { build_filtered_set(GrayImage(7, 64), FilterParams{}); }), ErrorCode::image_too_small);
}

TEST(FilterParams, ValidationAndPartialJson) {
  FilterParams p;
  p.lambda = -0.1;
  EXPECT_EQ(code_of([&] { p.validate(); }), ErrorCode::invalid_params);
  const auto q = nlohmann::json::parse(R"({"lambda":0.5})").get<FilterParams>();
  EXPECT_EQ(q.lambda, 0.5);
  EXPECT_EQ(q.clahe_tiles_x, 8u);
  EXPECT_EQ(nlohmann::json(FilterParams{}).get<FilterParams>(), FilterParams{});
  EXPECT_EQ(code_of([] { nlohmann::json::parse(R"({"lambda":"x"})").get<FilterParams>(); }), ErrorCode::invalid_params);
}
