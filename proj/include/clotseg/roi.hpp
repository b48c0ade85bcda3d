#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "clotseg/error.hpp"
#include "clotseg/image.hpp"

namespace clotseg {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Ellipse in pixel coordinates; `rotation` (radians) turns the a-axis away from +x.
struct EllipseRoi {
  double cx = 0.0;
  double cy = 0.0;
  double a = 1.0;
  double b = 1.0;
  double rotation = 0.0;
  friend bool operator==(const EllipseRoi&, const EllipseRoi&) = default;
};

struct PolygonRoi {
  std::vector<Point2> points;
  friend bool operator==(const PolygonRoi&, const PolygonRoi&) = default;
};

using RoiShape = std::variant<EllipseRoi, PolygonRoi>;

/// The two user-drawn regions of one slice.
struct RoiPair {
  RoiShape lumen;
  RoiShape clot;
  friend bool operator==(const RoiPair&, const RoiPair&) = default;
};

/// clot, lumen and lumen AND NOT clot.
struct MaskTriple {
  BinaryMask clot;
  BinaryMask lumen;
  BinaryMask lumen_only;
};

namespace detail {

inline double cross(Point2 o, Point2 a, Point2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

inline bool on_segment(Point2 p, Point2 q, Point2 r) {
  return std::min(p.x, r.x) <= q.x && q.x <= std::max(p.x, r.x) && std::min(p.y, r.y) <= q.y &&
         q.y <= std::max(p.y, r.y);
}

inline int orientation(Point2 p, Point2 q, Point2 r) {
  const double v = cross(p, q, r);
  if (v > 0) return 1;
  if (v < 0) return -1;
  return 0;
}

inline bool segments_intersect(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, q1, p2)) return true;
  if (o2 == 0 && on_segment(p1, q2, p2)) return true;
  if (o3 == 0 && on_segment(q1, p1, q2)) return true;
  if (o4 == 0 && on_segment(q1, p2, q2)) return true;
  return false;
}

inline double signed_area(const std::vector<Point2>& pts) {
  double s = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Point2& p = pts[i];
    const Point2& q = pts[(i + 1) % pts.size()];
    s += p.x * q.y - q.x * p.y;
  }
  return 0.5 * s;
}

}  // namespace detail

inline void validate(const EllipseRoi& e) {
  if (!std::isfinite(e.cx) || !std::isfinite(e.cy) || !std::isfinite(e.rotation)) {
    throw Error(ErrorCode::invalid_roi, "ellipse has non-finite geometry");
  }
  if (!(e.a > 0.0) || !(e.b > 0.0) || !std::isfinite(e.a) || !std::isfinite(e.b)) {
    throw Error(ErrorCode::invalid_roi, "ellipse semi-axes must be positive");
  }
}

inline void validate(const PolygonRoi& poly) {
  const auto& pts = poly.points;
  if (pts.size() < 3) throw Error(ErrorCode::invalid_roi, "polygon needs at least 3 vertices");
  for (const auto& p : pts) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw Error(ErrorCode::invalid_roi, "non-finite polygon vertex");
  }
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (detail::segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n])) {
        throw Error(ErrorCode::invalid_roi, "polygon edges " + std::to_string(i) + " and " + std::to_string(j) +
                                                " intersect");
      }
    }
  }
  if (std::abs(detail::signed_area(pts)) <= 0.0) throw Error(ErrorCode::invalid_roi, "polygon has zero area");
}

inline void validate(const RoiShape& shape) {
  std::visit([](const auto& s) { validate(s); }, shape);
}

/// Pixel (x, y) is inside when its center (x + 0.5, y + 0.5) is.
inline bool contains(const EllipseRoi& e, double px, double py) {
  const double dx = px - e.cx;
  const double dy = py - e.cy;
  const double c = std::cos(e.rotation);
  const double s = std::sin(e.rotation);
  const double u = (dx * c + dy * s) / e.a;
  const double v = (-dx * s + dy * c) / e.b;
  return u * u + v * v <= 1.0;
}

/// Even-odd rule.
inline bool contains(const PolygonRoi& poly, double px, double py) {
  bool inside = false;
  const auto& pts = poly.points;
  for (std::size_t i = 0, j = pts.size() - 1; i < pts.size(); j = i++) {
    const Point2& a = pts[i];
    const Point2& b = pts[j];
    if ((a.y > py) != (b.y > py)) {
      const double x_cross = a.x + (py - a.y) * (b.x - a.x) / (b.y - a.y);
      if (px < x_cross) inside = !inside;
    }
  }
  return inside;
}

inline BinaryMask rasterize(const EllipseRoi& e, std::size_t width, std::size_t height) {
  validate(e);
  BinaryMask mask(width, height);
  const double c = std::cos(e.rotation);
  const double s = std::sin(e.rotation);
  const double half_w = std::sqrt(e.a * e.a * c * c + e.b * e.b * s * s);
  const double half_h = std::sqrt(e.a * e.a * s * s + e.b * e.b * c * c);
  const double x_lo = std::max(0.0, std::floor(e.cx - half_w - 1.0));
  const double x_hi = std::min(static_cast<double>(width), std::ceil(e.cx + half_w + 1.0));
  const double y_lo = std::max(0.0, std::floor(e.cy - half_h - 1.0));
  const double y_hi = std::min(static_cast<double>(height), std::ceil(e.cy + half_h + 1.0));
  for (double y = y_lo; y < y_hi; y += 1.0) {
    for (double x = x_lo; x < x_hi; x += 1.0) {
      if (contains(e, x + 0.5, y + 0.5)) mask.set(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
    }
  }
  return mask;
}

/// Vertices are clamped to the image rectangle before the even-odd test.
inline BinaryMask rasterize(const PolygonRoi& poly, std::size_t width, std::size_t height) {
  validate(poly);
  PolygonRoi clamped = poly;
  for (auto& p : clamped.points) {
    p.x = std::clamp(p.x, 0.0, static_cast<double>(width));
    p.y = std::clamp(p.y, 0.0, static_cast<double>(height));
  }
  BinaryMask mask(width, height);
  if (std::abs(detail::signed_area(clamped.points)) <= 0.0) return mask;
  double x_min = clamped.points[0].x, x_max = x_min, y_min = clamped.points[0].y, y_max = y_min;
  for (const auto& p : clamped.points) {
    x_min = std::min(x_min, p.x);
    x_max = std::max(x_max, p.x);
    y_min = std::min(y_min, p.y);
    y_max = std::max(y_max, p.y);
  }
  const auto x0 = static_cast<std::size_t>(std::floor(x_min));
  const auto x1 = std::min(width, static_cast<std::size_t>(std::ceil(x_max)));
  const auto y0 = static_cast<std::size_t>(std::floor(y_min));
  const auto y1 = std::min(height, static_cast<std::size_t>(std::ceil(y_max)));
  for (std::size_t y = y0; y < y1; ++y) {
    for (std::size_t x = x0; x < x1; ++x) {
      if (contains(clamped, static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5)) mask.set(x, y);
    }
  }
  return mask;
}

/// Throws empty_mask when no pixel center falls inside the shape.
inline BinaryMask rasterize(const RoiShape& shape, std::size_t width, std::size_t height) {
  BinaryMask mask = std::visit([&](const auto& s) { return rasterize(s, width, height); }, shape);
  if (!mask.any()) throw Error(ErrorCode::empty_mask, "ROI covers no pixel center");
  return mask;
}

/// Builds the three classification masks; the clot must lie pixelwise inside the lumen.
inline MaskTriple make_masks(const RoiShape& lumen_shape, const RoiShape& clot_shape, std::size_t width,
                             std::size_t height) {
  MaskTriple masks;
  masks.lumen = rasterize(lumen_shape, width, height);
  masks.clot = rasterize(clot_shape, width, height);
  if (!masks.clot.subset_of(masks.lumen)) {
    const std::size_t outside = masks.clot.minus(masks.lumen).popcount();
    throw Error(ErrorCode::clot_not_contained,
                std::to_string(outside) + " clot pixel(s) lie outside the lumen ROI");
  }
  masks.lumen_only = masks.lumen.minus(masks.clot);
  if (!masks.lumen_only.any()) throw Error(ErrorCode::lumen_equals_clot, "lumen ROI has no pixels outside the clot ROI");
  return masks;
}

inline MaskTriple make_masks(const RoiPair& rois, std::size_t width, std::size_t height) {
  return make_masks(rois.lumen, rois.clot, width, height);
}

// JSON schema shared by CLI ROI files, the service and the UI:
//   {"kind":"ellipse","cx":..,"cy":..,"a":..,"b":..,"rot":..}
//   {"kind":"polygon","points":[[x,y],...]}

inline void to_json(nlohmann::json& j, const RoiShape& shape) {
  if (const auto* e = std::get_if<EllipseRoi>(&shape)) {
    j = nlohmann::json{{"kind", "ellipse"}, {"cx", e->cx}, {"cy", e->cy}, {"a", e->a}, {"b", e->b}, {"rot", e->rotation}};
  } else {
    const auto& poly = std::get<PolygonRoi>(shape);
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : poly.points) pts.push_back({p.x, p.y});
    j = nlohmann::json{{"kind", "polygon"}, {"points", pts}};
  }
}

inline void from_json(const nlohmann::json& j, RoiShape& shape) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "ellipse") {
      EllipseRoi e;
      e.cx = j.at("cx").get<double>();
      e.cy = j.at("cy").get<double>();
      e.a = j.at("a").get<double>();
      e.b = j.at("b").get<double>();
      e.rotation = j.value("rot", 0.0);
      shape = e;
    } else if (kind == "polygon") {
      PolygonRoi poly;
      for (const auto& p : j.at("points")) {
        if (!p.is_array() || p.size() != 2) throw Error(ErrorCode::invalid_roi, "polygon point must be [x, y]");
        poly.points.push_back({p[0].get<double>(), p[1].get<double>()});
      }
      shape = std::move(poly);
    } else {
      throw Error(ErrorCode::invalid_roi, "unknown ROI kind '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::invalid_roi, ex.what());
  }
}

inline void to_json(nlohmann::json& j, const RoiPair& rois) {
  j = nlohmann::json{{"lumen", rois.lumen}, {"clot", rois.clot}};
}

inline void from_json(const nlohmann::json& j, RoiPair& rois) {
  if (!j.is_object() || !j.contains("lumen") || !j.contains("clot")) {
    throw Error(ErrorCode::invalid_roi, "ROI object needs 'lumen' and 'clot'");
  }
  j.at("lumen").get_to(rois.lumen);
  j.at("clot").get_to(rois.clot);
}

/// Accepts a bare ROI object or a phantom sidecar carrying it under "roi".
inline RoiPair parse_roi_document(const nlohmann::json& doc) {
  if (doc.is_object() && doc.contains("roi") && !doc.contains("lumen")) return doc.at("roi").get<RoiPair>();
  return doc.get<RoiPair>();
}

}  // namespace clotseg
