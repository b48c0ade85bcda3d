#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "clotseg/error.hpp"
#include "clotseg/image.hpp"

namespace clotseg {

/// Enhancement chain configuration. Defaults: gain 0.21, 8x8 CLAHE tiles, 256 bins, 1% clip.
struct FilterParams {
  double lambda = 0.21;
  double unsharp_sigma = 1.5;
  std::size_t clahe_tiles_x = 8;
  std::size_t clahe_tiles_y = 8;
  double clahe_clip = 0.01;
  std::size_t clahe_bins = 256;

  void validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorCode::invalid_params, "lambda must lie in [0,1]");
    if (!(unsharp_sigma > 0.0) || !std::isfinite(unsharp_sigma)) {
      throw Error(ErrorCode::invalid_params, "unsharp_sigma must be positive");
    }
    if (clahe_tiles_x < 2 || clahe_tiles_y < 2) throw Error(ErrorCode::invalid_params, "CLAHE needs at least 2x2 tiles");
    if (clahe_bins < 16) throw Error(ErrorCode::invalid_params, "CLAHE needs at least 16 bins");
    if (!(clahe_clip > 0.0 && clahe_clip <= 1.0)) throw Error(ErrorCode::invalid_params, "clahe_clip must lie in (0,1]");
  }

  friend bool operator==(const FilterParams&, const FilterParams&) = default;
};

/// The five images consumed by the classifier.
struct FilteredSet {
  GrayImage original;
  GrayImage sharpened;
  GrayImage enhanced;
  GrayImage simple_enhanced;    ///< linear superposition, re-equalized (intensity criterion)
  GrayImage weighted_enhanced;  ///< 2:1 superposition, re-equalized (occupation criterion)
};

inline std::vector<double> gaussian_kernel(double sigma) {
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double w = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

/// Separable Gaussian, kernel truncated at 3 sigma, replicated borders.
inline GrayImage gaussian_blur(const GrayImage& f, double sigma) {
  const std::vector<double> k = gaussian_kernel(sigma);
  const auto radius = static_cast<std::ptrdiff_t>(k.size() / 2);
  const auto w = static_cast<std::ptrdiff_t>(f.width());
  const auto h = static_cast<std::ptrdiff_t>(f.height());
  std::vector<double> tmp(f.size());
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        const std::ptrdiff_t xx = std::clamp<std::ptrdiff_t>(x + i, 0, w - 1);
        acc += k[static_cast<std::size_t>(i + radius)] * f(static_cast<std::size_t>(xx), static_cast<std::size_t>(y));
      }
      tmp[static_cast<std::size_t>(y * w + x)] = acc;
    }
  }
  GrayImage out(f.width(), f.height());
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        const std::ptrdiff_t yy = std::clamp<std::ptrdiff_t>(y + i, 0, h - 1);
        acc += k[static_cast<std::size_t>(i + radius)] * tmp[static_cast<std::size_t>(yy * w + x)];
      }
      out(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = clamp01(acc);
    }
  }
  return out;
}

/// f + lambda * (f - blur(f)), clamped to [0,1].
inline GrayImage unsharp(const GrayImage& f, const FilterParams& params) {
  params.validate();
  if (params.lambda == 0.0) return f;
  const GrayImage blurred = gaussian_blur(f, params.unsharp_sigma);
  GrayImage out(f.width(), f.height());
  auto src = f.pixels();
  auto low = blurred.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double g = src[i] - low[i];
    dst[i] = clamp01(src[i] + params.lambda * g);
  }
  return out;
}

/// Equalization map of one CLAHE tile. A tile whose raw histogram occupies a
/// single bin maps every value to itself.
struct TileMapping {
  bool identity = false;
  std::vector<double> lut;

  double operator()(double v) const noexcept {
    if (identity) return v;
    const std::size_t bins = lut.size();
    const std::size_t k = std::min(bins - 1, static_cast<std::size_t>(v * static_cast<double>(bins)));
    return lut[k];
  }
};

inline std::size_t histogram_bin(double v, std::size_t bins) noexcept {
  return std::min(bins - 1, static_cast<std::size_t>(clamp01(v) * static_cast<double>(bins)));
}

/// Clipped histogram of a tile: counts above clip * n are cut and the excess
/// is spread uniformly over all bins, so the total stays n.
inline std::vector<double> clipped_histogram(std::span<const double> values, const FilterParams& params) {
  std::vector<double> hist(params.clahe_bins, 0.0);
  for (double v : values) hist[histogram_bin(v, params.clahe_bins)] += 1.0;
  const double limit = params.clahe_clip * static_cast<double>(values.size());
  double excess = 0.0;
  for (double& c : hist) {
    if (c > limit) {
      excess += c - limit;
      c = limit;
    }
  }
  const double share = excess / static_cast<double>(params.clahe_bins);
  for (double& c : hist) c += share;
  return hist;
}

/// Midpoint-CDF mapping of the clipped histogram; monotone non-decreasing.
inline TileMapping tile_mapping(std::span<const double> values, const FilterParams& params) {
  TileMapping m;
  if (values.empty()) {
    m.identity = true;
    return m;
  }
  const std::size_t first_bin = histogram_bin(values[0], params.clahe_bins);
  m.identity = std::all_of(values.begin(), values.end(),
                           [&](double v) { return histogram_bin(v, params.clahe_bins) == first_bin; });
  if (m.identity) return m;
  const std::vector<double> hist = clipped_histogram(values, params);
  const double n = static_cast<double>(values.size());
  m.lut.resize(hist.size());
  double cumulative = 0.0;
  for (std::size_t k = 0; k < hist.size(); ++k) {
    m.lut[k] = clamp01((cumulative + 0.5 * hist[k]) / n);
    cumulative += hist[k];
  }
  return m;
}

/// Tile boundaries along one axis: edge[i] = i * extent / tiles.
inline std::vector<std::size_t> tile_edges(std::size_t extent, std::size_t tiles) {
  std::vector<std::size_t> edges(tiles + 1);
  for (std::size_t i = 0; i <= tiles; ++i) edges[i] = i * extent / tiles;
  return edges;
}

namespace detail {

struct BlendWeight {
  std::size_t lo = 0;
  std::size_t hi = 0;
  double t = 0.0;  // weight of `hi`
};

// Interpolation between tile centers along one axis; outside the first/last
// center only one tile contributes.
inline std::vector<BlendWeight> blend_weights(const std::vector<std::size_t>& edges) {
  const std::size_t tiles = edges.size() - 1;
  const std::size_t extent = edges.back();
  std::vector<double> centers(tiles);
  for (std::size_t i = 0; i < tiles; ++i) centers[i] = 0.5 * static_cast<double>(edges[i] + edges[i + 1]);
  std::vector<BlendWeight> out(extent);
  std::size_t i = 0;
  for (std::size_t p = 0; p < extent; ++p) {
    const double c = static_cast<double>(p) + 0.5;
    if (c <= centers.front()) {
      out[p] = {0, 0, 0.0};
    } else if (c >= centers.back()) {
      out[p] = {tiles - 1, tiles - 1, 0.0};
    } else {
      while (i + 1 < tiles && centers[i + 1] <= c) ++i;
      out[p] = {i, i + 1, (c - centers[i]) / (centers[i + 1] - centers[i])};
    }
  }
  return out;
}

}  // namespace detail

/// Contrast-limited adaptive histogram equalization with bilinear blending of
/// the four nearest tile mappings.
inline GrayImage clahe(const GrayImage& f, const FilterParams& params) {
  params.validate();
  constexpr std::size_t kMinTileEdge = 4;
  if (f.width() / params.clahe_tiles_x < kMinTileEdge || f.height() / params.clahe_tiles_y < kMinTileEdge) {
    throw Error(ErrorCode::tile_grid_too_fine, std::to_string(params.clahe_tiles_x) + "x" +
                                                   std::to_string(params.clahe_tiles_y) + " tiles on a " +
                                                   std::to_string(f.width()) + "x" + std::to_string(f.height()) +
                                                   " image leaves tiles smaller than 4x4");
  }
  const auto xe = tile_edges(f.width(), params.clahe_tiles_x);
  const auto ye = tile_edges(f.height(), params.clahe_tiles_y);

  std::vector<TileMapping> maps(params.clahe_tiles_x * params.clahe_tiles_y);
  std::vector<double> tile_values;
  for (std::size_t ty = 0; ty < params.clahe_tiles_y; ++ty) {
    for (std::size_t tx = 0; tx < params.clahe_tiles_x; ++tx) {
      tile_values.clear();
      for (std::size_t y = ye[ty]; y < ye[ty + 1]; ++y) {
        for (std::size_t x = xe[tx]; x < xe[tx + 1]; ++x) tile_values.push_back(f(x, y));
      }
      maps[ty * params.clahe_tiles_x + tx] = tile_mapping(tile_values, params);
    }
  }

  const auto wx = detail::blend_weights(xe);
  const auto wy = detail::blend_weights(ye);
  GrayImage out(f.width(), f.height());
  for (std::size_t y = 0; y < f.height(); ++y) {
    const auto& by = wy[y];
    for (std::size_t x = 0; x < f.width(); ++x) {
      const auto& bx = wx[x];
      const double v = f(x, y);
      const auto at = [&](std::size_t ty, std::size_t tx) { return maps[ty * params.clahe_tiles_x + tx](v); };
      // lerp is exact when both ends agree, so uniform regions map exactly.
      const double top = std::lerp(at(by.lo, bx.lo), at(by.lo, bx.hi), bx.t);
      const double bottom = std::lerp(at(by.hi, bx.lo), at(by.hi, bx.hi), bx.t);
      out(x, y) = clamp01(std::lerp(top, bottom, by.t));
    }
  }
  return out;
}

namespace detail {

template <typename Blend>
GrayImage pixelwise(const GrayImage& a, const GrayImage& b, Blend blend) {
  if (!a.same_shape(b)) throw Error(ErrorCode::dimension_mismatch, "superposed images differ in size");
  GrayImage out(a.width(), a.height());
  auto pa = a.pixels();
  auto pb = b.pixels();
  auto po = out.pixels();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = clamp01(blend(pa[i], pb[i]));
  return out;
}

}  // namespace detail

/// (original + enhanced) / 2
inline GrayImage superpose_linear(const GrayImage& original, const GrayImage& enhanced) {
  return detail::pixelwise(original, enhanced, [](double o, double e) { return (o + e) / 2.0; });
}

/// (2 * enhanced + original) / 3, written as a lerp so equal inputs pass through exactly.
inline GrayImage superpose_weighted(const GrayImage& original, const GrayImage& enhanced) {
  return detail::pixelwise(original, enhanced, [](double o, double e) { return std::lerp(o, e, 2.0 / 3.0); });
}

inline FilteredSet build_filtered_set(const GrayImage& original, const FilterParams& params) {
  params.validate();
  if (original.width() < kMinImageEdge || original.height() < kMinImageEdge) {
    throw Error(ErrorCode::image_too_small, "filter pipeline needs at least 8x8 pixels");
  }
  FilteredSet set;
  set.original = original;
  set.sharpened = unsharp(original, params);
  set.enhanced = clahe(set.sharpened, params);
  set.simple_enhanced = clahe(superpose_linear(original, set.enhanced), params);
  set.weighted_enhanced = clahe(superpose_weighted(original, set.enhanced), params);
  return set;
}

inline void to_json(nlohmann::json& j, const FilterParams& p) {
  j = nlohmann::json{{"lambda", p.lambda},
                     {"unsharp_sigma", p.unsharp_sigma},
                     {"clahe_tiles_x", p.clahe_tiles_x},
                     {"clahe_tiles_y", p.clahe_tiles_y},
                     {"clahe_clip", p.clahe_clip},
                     {"clahe_bins", p.clahe_bins}};
}

/// Missing keys keep their defaults so override files can be partial.
inline void from_json(const nlohmann::json& j, FilterParams& p) {
  try {
    p.lambda = j.value("lambda", p.lambda);
    p.unsharp_sigma = j.value("unsharp_sigma", p.unsharp_sigma);
    p.clahe_tiles_x = j.value("clahe_tiles_x", p.clahe_tiles_x);
    p.clahe_tiles_y = j.value("clahe_tiles_y", p.clahe_tiles_y);
    p.clahe_clip = j.value("clahe_clip", p.clahe_clip);
    p.clahe_bins = j.value("clahe_bins", p.clahe_bins);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::invalid_params, ex.what());
  }
}

}  // namespace clotseg
