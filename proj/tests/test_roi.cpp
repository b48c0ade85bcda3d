#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "clotseg/roi.hpp"

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

PolygonRoi rect(double x0, double y0, double x1, double y1) { return PolygonRoi{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}}; }

}  // namespace

TEST(Rasterize, CircleMatchesCenterTest) {
  const auto m = rasterize(RoiShape{EllipseRoi{16, 16, 10, 10, 0}}, 32, 32);
  std::size_t want = 0;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      const bool in = (x + 0.5 - 16) * (x + 0.5 - 16) + (y + 0.5 - 16) * (y + 0.5 - 16) <= 100.0;
      want += in;
      EXPECT_EQ(m(x, y), in) << x << "," << y;
    }
  EXPECT_EQ(m.popcount(), want);
}

TEST(Rasterize, RotatedEllipseHalfTurnIsSame) {
  const auto a = rasterize(RoiShape{EllipseRoi{20.3, 18.7, 12, 5, 0.4}}, 40, 40);
  const auto b = rasterize(RoiShape{EllipseRoi{20.3, 18.7, 12, 5, 0.4 + std::acos(-1.0)}}, 40, 40);
  // Boundary pixels may flip under a half-turn rounding; interiors agree.
  EXPECT_LE(a.minus(b).popcount() + b.minus(a).popcount(), 2u);
}

TEST(Rasterize, AxisAlignedRectangle) {
  const auto m = rasterize(RoiShape{rect(2, 3, 10, 7)}, 16, 16);
  EXPECT_EQ(m.popcount(), 8u * 4u);
  EXPECT_TRUE(m(2, 3));
  EXPECT_TRUE(m(9, 6));
  EXPECT_FALSE(m(10, 6));
  EXPECT_FALSE(m(9, 7));
}

TEST(Rasterize, PolygonOutsideFrameIsClamped) {
  const auto m = rasterize(RoiShape{rect(-5, -5, 4, 4)}, 8, 8);
  EXPECT_EQ(m.popcount(), 16u);
}

TEST(Rasterize, EmptyShapeThrows) {
  EXPECT_EQ(code_of([] { rasterize(RoiShape{EllipseRoi{4.0, 4.0, 0.1, 0.1, 0}}, 8, 8); }), ErrorCode::empty_mask);
  EXPECT_EQ(code_of([] { rasterize(RoiShape{rect(20, 20, 30, 30)}, 8, 8); }), ErrorCode::empty_mask);
}

TEST(Validate, RejectsDegenerateShapes) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(code_of([] { validate(RoiShape{EllipseRoi{1, 1, 0, 1, 0}}); }), ErrorCode::invalid_roi);
  EXPECT_EQ(code_of([&] { validate(RoiShape{EllipseRoi{nan, 1, 1, 1, 0}}); }), ErrorCode::invalid_roi);
  EXPECT_EQ(code_of([] { validate(RoiShape{PolygonRoi{{{0, 0}, {1, 1}}}}); }), ErrorCode::invalid_roi);
  EXPECT_EQ(code_of([] { validate(RoiShape{PolygonRoi{{{0, 0}, {1, 1}, {2, 2}}}}); }), ErrorCode::invalid_roi);
  // Bowtie.
  EXPECT_EQ(code_of([] { validate(RoiShape{PolygonRoi{{{0, 0}, {4, 4}, {4, 0}, {0, 4}}}}); }), ErrorCode::invalid_roi);
  EXPECT_NO_THROW(validate(RoiShape{rect(0, 0, 1, 1)}));
}

TEST(Masks, PartitionAndContainment) {
  const RoiShape lumen = EllipseRoi{32, 32, 20, 15, 0.3};
  const RoiShape clot = EllipseRoi{30, 33, 6, 4, 1.0};
  const auto m = make_masks(lumen, clot, 64, 64);
  EXPECT_TRUE(m.clot.subset_of(m.lumen));
  EXPECT_EQ((m.clot & m.lumen_only).popcount(), 0u);
  EXPECT_EQ(m.clot | m.lumen_only, m.lumen);
}

TEST(Masks, ClotOutsideLumen) {
  try {
    make_masks(RoiShape{EllipseRoi{20, 20, 10, 10, 0}}, RoiShape{EllipseRoi{28, 20, 5, 5, 0}}, 64, 64);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::clot_not_contained);
    EXPECT_NE(std::string(e.what()).find("outside"), std::string::npos);
  }
}

TEST(Masks, ClotEqualToLumen) {
  const RoiShape s = EllipseRoi{20, 20, 10, 10, 0};
  EXPECT_EQ(code_of([&] { make_masks(s, s, 64, 64); }), ErrorCode::lumen_equals_clot);
}

TEST(RoiJson, RoundTripBothKinds) {
  const RoiPair pair{EllipseRoi{10.5, 11.25, 8, 6, 0.125}, PolygonRoi{{{9, 9}, {12, 9}, {11, 13}}}};
  const nlohmann::json j = pair;
  EXPECT_EQ(j["lumen"]["kind"], "ellipse");
  EXPECT_EQ(j["clot"]["kind"], "polygon");
  EXPECT_EQ(j.get<RoiPair>(), pair);
  EXPECT_EQ(nlohmann::json::parse(j.dump()).get<RoiPair>(), pair);
}

TEST(RoiJson, RotationOptional) {
  const auto shape = nlohmann::json::parse(R"({"kind":"ellipse","cx":1,"cy":2,"a":3,"b":4})").get<RoiShape>();
  EXPECT_EQ(std::get<EllipseRoi>(shape).rotation, 0.0);
}

TEST(RoiJson, SchemaErrors) {
  EXPECT_EQ(code_of([] { nlohmann::json::parse(R"({"kind":"square"})").get<RoiShape>(); }), ErrorCode::invalid_roi);
  EXPECT_EQ(code_of([] { nlohmann::json::parse(R"({"kind":"ellipse","cx":1})").get<RoiShape>(); }),
            ErrorCode::invalid_roi);
  EXPECT_EQ(code_of([] { nlohmann::json::parse(R"({"kind":"polygon","points":[[1,2,3]]})").get<RoiShape>(); }),
            ErrorCode::invalid_roi);
  EXPECT_EQ(code_of([] { nlohmann::json::parse(R"({"lumen":{}})").get<RoiPair>(); }), ErrorCode::invalid_roi);
}

TEST(RoiJson, AcceptsSidecarDocument) {
  const auto doc = nlohmann::json::parse(
      R"({"roi":{"lumen":{"kind":"ellipse","cx":5,"cy":5,"a":4,"b":4},"clot":{"kind":"ellipse","cx":5,"cy":5,"a":1,"b":1}},"expected":"POSITIVE"})");
  const RoiPair p = parse_roi_document(doc);
  EXPECT_EQ(std::get<EllipseRoi>(p.lumen).a, 4.0);
}
