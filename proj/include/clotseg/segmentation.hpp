#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "clotseg/error.hpp"
#include "clotseg/image.hpp"

namespace clotseg {

inline constexpr std::size_t kOtsuBins = 256;

struct OtsuResult {
  double threshold = 0.0;     ///< largest value still assigned to the dark class
  std::size_t bin = 0;        ///< last histogram bin of the dark class
  double effectiveness = 0.0; ///< between-class / total variance, in [0,1]
};

inline std::size_t otsu_bin(double v) noexcept {
  return std::min(kOtsuBins - 1, static_cast<std::size_t>(clamp01(v) * static_cast<double>(kOtsuBins)));
}

using OtsuHistogram = std::array<std::uint64_t, kOtsuBins>;

/// Otsu's method on a 256-bin histogram. Maximizes between-class variance
/// (equivalently minimizes within-class variance); ties go to the lowest bin.
/// Throws degenerate_histogram when fewer than two bins are occupied.
inline OtsuResult otsu_histogram(const OtsuHistogram& counts) {
  std::uint64_t total = 0;
  std::uint64_t sum = 0;
  std::uint64_t sum_sq = 0;
  for (std::size_t i = 0; i < kOtsuBins; ++i) {
    total += counts[i];
    sum += i * counts[i];
    sum_sq += i * i * counts[i];
  }

  std::uint64_t n0 = 0;
  std::uint64_t s0 = 0;
  long double best = -1.0L;
  std::size_t best_bin = 0;
  for (std::size_t k = 0; k + 1 < kOtsuBins; ++k) {
    n0 += counts[k];
    s0 += k * counts[k];
    const std::uint64_t n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    // N^2 * sigma_b^2 = (s0 * N - S * n0)^2 / (n0 * n1)
    const auto diff = static_cast<__int128>(s0) * total - static_cast<__int128>(sum) * n0;
    const long double d = static_cast<long double>(diff);
    const long double between = d * d / (static_cast<long double>(n0) * static_cast<long double>(n1));
    if (between > best) {
      best = between;
      best_bin = k;
    }
  }
  if (best < 0.0L) throw Error(ErrorCode::degenerate_histogram, "all values share one histogram bin");

  OtsuResult r;
  r.bin = best_bin;
  // Dark class is [0, (k+1)/256); the threshold is the largest double below that edge.
  r.threshold = std::nextafter(static_cast<double>(best_bin + 1) / static_cast<double>(kOtsuBins), 0.0);
  const long double n = static_cast<long double>(total);
  const long double total_var = (n * static_cast<long double>(sum_sq) - static_cast<long double>(sum) * sum);
  r.effectiveness = total_var > 0.0L ? static_cast<double>(std::min(1.0L, best / total_var)) : 0.0;
  return r;
}

inline OtsuResult otsu(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::degenerate_histogram, "no values");
  OtsuHistogram counts{};
  for (double v : values) ++counts[otsu_bin(v)];
  return otsu_histogram(counts);
}

inline double otsu_threshold(std::span<const double> values) { return otsu(values).threshold; }

/// Pixels of `image` inside `mask` whose value is <= threshold (dark foreground).
inline BinaryMask binarize(const GrayImage& image, const BinaryMask& mask, double threshold) {
  if (!mask.matches(image)) throw Error(ErrorCode::dimension_mismatch, "mask and image differ in size");
  BinaryMask out(image.width(), image.height());
  auto px = image.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (mask.test(i) && px[i] <= threshold) out.set_index(i);
  }
  return out;
}

/// Values of `image` under `mask`, in raster order.
inline std::vector<double> masked_values(const GrayImage& image, const BinaryMask& mask) {
  if (!mask.matches(image)) throw Error(ErrorCode::dimension_mismatch, "mask and image differ in size");
  std::vector<double> out;
  auto px = image.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (mask.test(i)) out.push_back(px[i]);
  }
  return out;
}

struct Offset {
  int dx = 0;
  int dy = 0;
};

/// Discrete Euclidean disk {(dx,dy) : dx^2 + dy^2 <= r^2}.
inline std::vector<Offset> disk(int radius) {
  std::vector<Offset> out;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy <= radius * radius) out.push_back({dx, dy});
    }
  }
  return out;
}

/// Pixels outside the frame count as background.
inline BinaryMask dilate(const BinaryMask& mask, int radius) {
  const auto se = disk(radius);
  const auto w = static_cast<int>(mask.width());
  const auto h = static_cast<int>(mask.height());
  BinaryMask out(mask.width(), mask.height());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(static_cast<std::size_t>(x), static_cast<std::size_t>(y))) continue;
      for (const auto& o : se) {
        const int xx = x + o.dx;
        const int yy = y + o.dy;
        if (xx >= 0 && xx < w && yy >= 0 && yy < h) out.set(static_cast<std::size_t>(xx), static_cast<std::size_t>(yy));
      }
    }
  }
  return out;
}

/// Pixels outside the frame count as foreground, so closing stays extensive at the border.
inline BinaryMask erode(const BinaryMask& mask, int radius) {
  const auto se = disk(radius);
  const auto w = static_cast<int>(mask.width());
  const auto h = static_cast<int>(mask.height());
  BinaryMask out(mask.width(), mask.height());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(static_cast<std::size_t>(x), static_cast<std::size_t>(y))) continue;
      bool keep = true;
      for (const auto& o : se) {
        const int xx = x + o.dx;
        const int yy = y + o.dy;
        if (xx < 0 || xx >= w || yy < 0 || yy >= h) continue;
        if (!mask(static_cast<std::size_t>(xx), static_cast<std::size_t>(yy))) {
          keep = false;
          break;
        }
      }
      if (keep) out.set(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
    }
  }
  return out;
}

/// Dilation followed by erosion with the radius-r disk.
inline BinaryMask morphological_close(const BinaryMask& mask, int radius = 5) {
  if (radius < 1) throw Error(ErrorCode::invalid_params, "closing radius must be >= 1");
  return erode(dilate(mask, radius), radius);
}

struct PixelCoord {
  int x = 0;
  int y = 0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// One 8-connected foreground component with its shape moments.
struct Region {
  std::vector<PixelCoord> pixels;
  std::size_t area = 0;
  double centroid_x = 0.0;
  double centroid_y = 0.0;
  double mu20 = 0.0;  ///< central moments normalized by area (pixel^2)
  double mu02 = 0.0;
  double mu11 = 0.0;
  double eccentricity = 0.0;
};

/// sqrt(1 - l2/l1) from the eigenvalues of the normalized second-moment matrix.
inline double eccentricity_from_moments(double mu20, double mu02, double mu11) {
  const double mean = 0.5 * (mu20 + mu02);
  const double radius = std::sqrt(0.25 * (mu20 - mu02) * (mu20 - mu02) + mu11 * mu11);
  const double l1 = mean + radius;
  const double l2 = std::max(0.0, mean - radius);
  if (!(l1 > 0.0)) return 0.0;
  return std::clamp(std::sqrt(std::max(0.0, 1.0 - l2 / l1)), 0.0, 1.0);
}

inline void compute_region_properties(Region& r) {
  r.area = r.pixels.size();
  if (r.area == 0) return;
  double sx = 0.0, sy = 0.0;
  for (const auto& p : r.pixels) {
    sx += p.x;
    sy += p.y;
  }
  const double n = static_cast<double>(r.area);
  r.centroid_x = sx / n;
  r.centroid_y = sy / n;
  double m20 = 0.0, m02 = 0.0, m11 = 0.0;
  for (const auto& p : r.pixels) {
    const double dx = p.x - r.centroid_x;
    const double dy = p.y - r.centroid_y;
    m20 += dx * dx;
    m02 += dy * dy;
    m11 += dx * dy;
  }
  r.mu20 = m20 / n;
  r.mu02 = m02 / n;
  r.mu11 = m11 / n;
  r.eccentricity = r.area == 1 ? 0.0 : eccentricity_from_moments(r.mu20, r.mu02, r.mu11);
}

inline double region_eccentricity(const Region& region) {
  if (region.pixels.size() <= 1) return 0.0;
  Region copy = region;
  compute_region_properties(copy);
  return copy.eccentricity;
}

/// 8-connected labeling; regions sorted by area, largest first (ties keep raster order).
inline std::vector<Region> connected_components(const BinaryMask& mask) {
  const auto w = static_cast<int>(mask.width());
  const auto h = static_cast<int>(mask.height());
  std::vector<std::uint8_t> seen(mask.size(), 0);
  std::vector<Region> regions;
  std::vector<PixelCoord> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto idx = static_cast<std::size_t>(y) * mask.width() + static_cast<std::size_t>(x);
      if (!mask.test(idx) || seen[idx]) continue;
      Region region;
      seen[idx] = 1;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const PixelCoord p = stack.back();
        stack.pop_back();
        region.pixels.push_back(p);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = p.x + dx;
            const int yy = p.y + dy;
            if (xx < 0 || xx >= w || yy < 0 || yy >= h) continue;
            const auto j = static_cast<std::size_t>(yy) * mask.width() + static_cast<std::size_t>(xx);
            if (mask.test(j) && !seen[j]) {
              seen[j] = 1;
              stack.push_back({xx, yy});
            }
          }
        }
      }
      compute_region_properties(region);
      regions.push_back(std::move(region));
    }
  }
  std::stable_sort(regions.begin(), regions.end(), [](const Region& a, const Region& b) { return a.area > b.area; });
  return regions;
}

/// Mean of `image` over `mask`.
inline double mean_intensity(const GrayImage& image, const BinaryMask& mask) {
  if (!mask.matches(image)) throw Error(ErrorCode::dimension_mismatch, "mask and image differ in size");
  double sum = 0.0;
  std::size_t n = 0;
  auto px = image.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (mask.test(i)) {
      sum += px[i];
      ++n;
    }
  }
  if (n == 0) throw Error(ErrorCode::empty_mask, "mean over an empty mask");
  return sum / static_cast<double>(n);
}

}  // namespace clotseg
