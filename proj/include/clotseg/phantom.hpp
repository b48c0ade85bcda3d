#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "clotseg/classifier.hpp"
#include "clotseg/error.hpp"
#include "clotseg/image.hpp"
#include "clotseg/image_io.hpp"
#include "clotseg/random.hpp"
#include "clotseg/roi.hpp"

namespace clotseg {

enum class PhantomKind { real_clot, turbulence, clean_lumen };

constexpr std::string_view to_string(PhantomKind k) noexcept {
  switch (k) {
    case PhantomKind::real_clot: return "real_clot";
    case PhantomKind::turbulence: return "turbulence";
    case PhantomKind::clean_lumen: return "clean_lumen";
  }
  return "unknown";
}

inline PhantomKind phantom_kind_from_string(std::string_view s) {
  if (s == "real_clot") return PhantomKind::real_clot;
  if (s == "turbulence") return PhantomKind::turbulence;
  if (s == "clean_lumen") return PhantomKind::clean_lumen;
  throw Error(ErrorCode::invalid_phantom_spec, "unknown phantom kind '" + std::string(s) + "'");
}

/// Synthetic vessel cross-section: a bright elliptical lumen on a dark
/// background, optionally carrying a solid dark disc (real clot) or a smooth
/// elongated attenuation ridge (flow artifact).
struct PhantomSpec {
  std::uint64_t seed = 1;
  PhantomKind kind = PhantomKind::real_clot;
  std::size_t image_size = 256;
  double background = 0.1;
  EllipseRoi lumen{128.0, 128.0, 70.0, 50.0, 0.0};
  double lumen_intensity = 0.8;
  double lumen_roi_inset = 3.0;  ///< lumen ROI semi-axes are the lumen's minus this

  Point2 inclusion_center{128.0, 128.0};
  // real_clot
  double inclusion_radius = 12.0;
  double intensity_ratio = 0.4;
  // turbulence
  double ridge_sigma_along = 12.0;
  double ridge_sigma_across = 3.0;
  double ridge_rotation = 0.0;
  double peak_attenuation = 0.2;

  /// Clot ROI semi-axes relative to the inclusion radius (real_clot, clean_lumen)
  /// or to the ridge sigmas (turbulence).
  double clot_roi_scale = 1.1;
  double noise_sigma = 0.02;

  friend bool operator==(const PhantomSpec&, const PhantomSpec&) = default;
};

struct PhantomCase {
  PhantomSpec spec;
  StudySlice slice;
  RoiShape lumen_roi;
  RoiShape clot_roi;
  Verdict expected = Verdict::negative;

  RoiPair rois() const { return RoiPair{lumen_roi, clot_roi}; }
};

inline EllipseRoi phantom_lumen_roi(const PhantomSpec& s) {
  EllipseRoi roi = s.lumen;
  roi.a -= s.lumen_roi_inset;
  roi.b -= s.lumen_roi_inset;
  return roi;
}

inline EllipseRoi phantom_clot_roi(const PhantomSpec& s) {
  if (s.kind == PhantomKind::turbulence) {
    return EllipseRoi{s.inclusion_center.x, s.inclusion_center.y, s.ridge_sigma_along * s.clot_roi_scale,
                      s.ridge_sigma_across * s.clot_roi_scale, s.ridge_rotation};
  }
  const double r = s.inclusion_radius * s.clot_roi_scale;
  return EllipseRoi{s.inclusion_center.x, s.inclusion_center.y, r, r, 0.0};
}

inline void validate(const PhantomSpec& s) {
  if (s.image_size < 32) throw Error(ErrorCode::invalid_phantom_spec, "image_size must be >= 32");
  if (!(s.background > 0.0 && s.background < 1.0) || !(s.lumen_intensity > 0.0 && s.lumen_intensity < 1.0)) {
    throw Error(ErrorCode::invalid_phantom_spec, "intensities must lie in (0,1)");
  }
  if (!(s.noise_sigma >= 0.0)) throw Error(ErrorCode::invalid_phantom_spec, "noise_sigma must be >= 0");
  if (!(s.clot_roi_scale >= 1.0)) throw Error(ErrorCode::invalid_phantom_spec, "clot ROI must enclose the inclusion");
  validate(s.lumen);
  const EllipseRoi lumen_roi = phantom_lumen_roi(s);
  if (!(lumen_roi.a > 0.0 && lumen_roi.b > 0.0)) throw Error(ErrorCode::invalid_phantom_spec, "inset exceeds lumen");
  switch (s.kind) {
    case PhantomKind::real_clot:
      if (!(s.inclusion_radius > 0.0)) throw Error(ErrorCode::invalid_phantom_spec, "inclusion_radius must be > 0");
      if (!(s.intensity_ratio > 0.0 && s.intensity_ratio < 1.0)) {
        throw Error(ErrorCode::invalid_phantom_spec, "intensity_ratio must lie in (0,1)");
      }
      break;
    case PhantomKind::turbulence:
      if (!(s.ridge_sigma_across > 0.0) || s.ridge_sigma_along < 3.0 * s.ridge_sigma_across) {
        throw Error(ErrorCode::invalid_phantom_spec, "turbulence ridge needs axis ratio >= 3");
      }
      if (!(s.peak_attenuation > 0.0 && s.peak_attenuation < 0.25)) {
        throw Error(ErrorCode::invalid_phantom_spec, "turbulence peak attenuation must lie in (0, 0.25)");
      }
      break;
    case PhantomKind::clean_lumen:
      if (!(s.inclusion_radius > 0.0)) throw Error(ErrorCode::invalid_phantom_spec, "inclusion_radius must be > 0");
      break;
  }
  // The clot ROI encloses the inclusion, so checking its outline suffices.
  const EllipseRoi clot = phantom_clot_roi(s);
  const double c = std::cos(clot.rotation), sn = std::sin(clot.rotation);
  for (int i = 0; i < 72; ++i) {
    const double t = 2.0 * std::numbers::pi * i / 72.0;
    const double u = clot.a * std::cos(t), v = clot.b * std::sin(t);
    const double px = clot.cx + u * c - v * sn;
    const double py = clot.cy + u * sn + v * c;
    if (!contains(lumen_roi, px, py)) {
      throw Error(ErrorCode::inclusion_outside_lumen, "clot region reaches outside the lumen ROI");
    }
  }
}

/// Deterministic for a fixed spec. The returned slice is what loading the
/// 16-bit PGM rendering of the phantom yields.
inline PhantomCase generate(const PhantomSpec& spec) {
  validate(spec);
  const std::size_t n = spec.image_size;
  std::vector<double> field(n * n, spec.background);
  const double ridge_c = std::cos(spec.ridge_rotation), ridge_s = std::sin(spec.ridge_rotation);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double px = static_cast<double>(x) + 0.5;
      const double py = static_cast<double>(y) + 0.5;
      if (!contains(spec.lumen, px, py)) continue;
      double v = spec.lumen_intensity;
      const double dx = px - spec.inclusion_center.x;
      const double dy = py - spec.inclusion_center.y;
      if (spec.kind == PhantomKind::real_clot) {
        if (dx * dx + dy * dy <= spec.inclusion_radius * spec.inclusion_radius) v *= spec.intensity_ratio;
      } else if (spec.kind == PhantomKind::turbulence) {
        const double u = (dx * ridge_c + dy * ridge_s) / spec.ridge_sigma_along;
        const double w = (-dx * ridge_s + dy * ridge_c) / spec.ridge_sigma_across;
        v *= 1.0 - spec.peak_attenuation * std::exp(-0.5 * (u * u + w * w));
      }
      field[y * n + x] = v;
    }
  }
  if (spec.noise_sigma > 0.0) {
    Rng rng(spec.seed);
    for (double& v : field) v += spec.noise_sigma * rng.normal();
  }
  std::vector<std::int32_t> stored(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    stored[i] = static_cast<std::int32_t>(std::lround(std::clamp(field[i], 0.0, 1.0) * 65535.0));
  }
  PhantomCase out;
  out.spec = spec;
  // The slice is what a written phantom file reads back as, so in-memory and
  // on-disk cases classify identically.
  const StudySlice raw = normalize_stored(stored, n, n, 16, {});
  out.slice = load_pgm(encode_pgm16(raw.image),
                       std::string(to_string(spec.kind)) + "_seed" + std::to_string(spec.seed));
  out.lumen_roi = phantom_lumen_roi(spec);
  out.clot_roi = phantom_clot_roi(spec);
  out.expected = spec.kind == PhantomKind::real_clot ? Verdict::positive : Verdict::negative;
  return out;
}

/// Seed of case `index` of `kind` in a corpus.
inline std::uint64_t corpus_seed(std::uint64_t base_seed, PhantomKind kind, std::size_t index) {
  return splitmix64(base_seed ^ splitmix64((static_cast<std::uint64_t>(kind) << 32) | index));
}

/// Jittered spec: radius +/-30%, position, rotation; fixed noise level.
inline PhantomSpec jittered_spec(PhantomKind kind, std::uint64_t seed, double noise_sigma) {
  Rng rng(seed ^ 0xA5A5A5A5A5A5A5A5ull);
  PhantomSpec s;
  s.seed = seed;
  s.kind = kind;
  s.noise_sigma = noise_sigma;
  s.lumen.rotation = rng.uniform(0.0, std::numbers::pi);
  s.lumen.cx += rng.uniform(-8.0, 8.0);
  s.lumen.cy += rng.uniform(-8.0, 8.0);
  s.inclusion_center = {s.lumen.cx + rng.uniform(-6.0, 6.0), s.lumen.cy + rng.uniform(-6.0, 6.0)};
  s.inclusion_radius *= rng.uniform(0.7, 1.3);
  s.ridge_rotation = rng.uniform(0.0, std::numbers::pi);
  const double ridge_scale = rng.uniform(0.7, 1.3);
  s.ridge_sigma_along *= ridge_scale;
  s.ridge_sigma_across *= ridge_scale;
  return s;
}

inline std::vector<PhantomCase> generate_corpus(std::size_t n_per_kind, std::uint64_t base_seed,
                                                double noise_sigma = 0.02) {
  if (n_per_kind < 1) throw Error(ErrorCode::invalid_phantom_spec, "n_per_kind must be >= 1");
  std::vector<PhantomCase> cases;
  cases.reserve(3 * n_per_kind);
  for (PhantomKind kind : {PhantomKind::real_clot, PhantomKind::turbulence, PhantomKind::clean_lumen}) {
    for (std::size_t i = 0; i < n_per_kind; ++i) {
      cases.push_back(generate(jittered_spec(kind, corpus_seed(base_seed, kind, i), noise_sigma)));
    }
  }
  return cases;
}

inline void to_json(nlohmann::json& j, const PhantomSpec& s) {
  j = nlohmann::json{{"seed", s.seed},
                     {"kind", to_string(s.kind)},
                     {"image_size", s.image_size},
                     {"background", s.background},
                     {"lumen", RoiShape{s.lumen}},
                     {"lumen_intensity", s.lumen_intensity},
                     {"lumen_roi_inset", s.lumen_roi_inset},
                     {"inclusion_center", {s.inclusion_center.x, s.inclusion_center.y}},
                     {"inclusion_radius", s.inclusion_radius},
                     {"intensity_ratio", s.intensity_ratio},
                     {"ridge_sigma_along", s.ridge_sigma_along},
                     {"ridge_sigma_across", s.ridge_sigma_across},
                     {"ridge_rotation", s.ridge_rotation},
                     {"peak_attenuation", s.peak_attenuation},
                     {"clot_roi_scale", s.clot_roi_scale},
                     {"noise_sigma", s.noise_sigma}};
}

}  // namespace clotseg
