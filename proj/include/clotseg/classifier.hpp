#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "clotseg/error.hpp"
#include "clotseg/filters.hpp"
#include "clotseg/image.hpp"
#include "clotseg/image_io.hpp"
#include "clotseg/roi.hpp"
#include "clotseg/segmentation.hpp"

namespace clotseg {

enum class Verdict { negative, positive };

constexpr std::string_view to_string(Verdict v) noexcept { return v == Verdict::positive ? "POSITIVE" : "NEGATIVE"; }

inline Verdict verdict_from_string(std::string_view s) {
  if (s == "POSITIVE") return Verdict::positive;
  if (s == "NEGATIVE") return Verdict::negative;
  throw Error(ErrorCode::parse_error, "verdict must be POSITIVE or NEGATIVE, got '" + std::string(s) + "'");
}

/// Criterion thresholds. Defaults: intensity ratio 0.40 +/- 0.20 (inclusive),
/// occupation > 7% of the clot ROI, eccentricity < 0.8, radius-5 closing disk.
struct CriterionThresholds {
  double intensity_center = 0.40;
  double intensity_halfwidth = 0.20;
  double occupation_min_fraction = 0.07;
  double eccentricity_max = 0.8;
  int closing_radius = 5;
  /// Otsu splits with a lower between/total variance ratio count as "no structure".
  double otsu_min_effectiveness = 0.8;

  double intensity_low() const noexcept { return intensity_center - intensity_halfwidth; }
  double intensity_high() const noexcept { return intensity_center + intensity_halfwidth; }

  void validate() const {
    if (!(intensity_center > 0.0) || !(intensity_halfwidth > 0.0) || !(intensity_low() > 0.0) ||
        !(intensity_high() < 1.0)) {
      throw Error(ErrorCode::invalid_params, "intensity band must lie inside (0,1)");
    }
    if (!(occupation_min_fraction > 0.0)) throw Error(ErrorCode::invalid_params, "occupation threshold must be positive");
    if (!(eccentricity_max > 0.0)) throw Error(ErrorCode::invalid_params, "eccentricity threshold must be positive");
    if (closing_radius < 1) throw Error(ErrorCode::invalid_params, "closing radius must be >= 1");
    if (!(otsu_min_effectiveness >= 0.0 && otsu_min_effectiveness < 1.0)) {
      throw Error(ErrorCode::invalid_params, "otsu_min_effectiveness must lie in [0,1)");
    }
  }

  friend bool operator==(const CriterionThresholds&, const CriterionThresholds&) = default;
};

/// Acceptance band of one criterion; an absent bound is unbounded on that side.
struct Band {
  std::optional<double> low;
  bool low_inclusive = true;
  std::optional<double> high;
  bool high_inclusive = true;

  bool contains(double v) const noexcept {
    if (low) {
      if (low_inclusive ? v < *low - kInclusiveSlack : v <= *low) return false;
    }
    if (high) {
      if (high_inclusive ? v > *high + kInclusiveSlack : v >= *high) return false;
    }
    return true;
  }

  // Inclusive edges absorb rounding in ratios such as 0.48 / 0.80.
  static constexpr double kInclusiveSlack = 1e-12;

  friend bool operator==(const Band&, const Band&) = default;
};

/// One measured criterion. An undefined value is never indicative.
struct ParameterResult {
  std::string name;
  std::optional<double> value;
  Band band;
  bool indicative = false;
  std::string detail;

  friend bool operator==(const ParameterResult&, const ParameterResult&) = default;
};

/// Evidence behind the occupation criterion.
struct SegmentationEvidence {
  std::optional<double> otsu_threshold;
  std::optional<double> otsu_effectiveness;
  std::size_t clot_area = 0;
  std::size_t foreground_area = 0;  ///< after closing, inside the clot ROI
  std::size_t component_count = 0;

  friend bool operator==(const SegmentationEvidence&, const SegmentationEvidence&) = default;
};

struct Provenance {
  std::string source_id;
  RoiPair roi;
  int original_bit_depth = 16;
  double raw_min = 0.0;
  double raw_max = 0.0;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct ClotAssessment {
  Verdict verdict = Verdict::negative;
  ParameterResult intensity;
  ParameterResult occupation;
  ParameterResult eccentricity;
  SegmentationEvidence segmentation;
  MaskTriple masks;
  BinaryMask clot_binary;  ///< Otsu foreground after closing, restricted to the clot ROI
  FilterParams params;
  CriterionThresholds thresholds;
  Provenance provenance;
};

inline std::string format_value(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

/// mean(simple_enhanced | clot) / mean(simple_enhanced | lumen_only), inclusive band.
inline ParameterResult eval_intensity(const FilteredSet& fset, const MaskTriple& masks,
                                      const CriterionThresholds& th) {
  ParameterResult r;
  r.name = "intensity_ratio";
  r.band = Band{th.intensity_low(), true, th.intensity_high(), true};
  const double clot_mean = mean_intensity(fset.simple_enhanced, masks.clot);
  const double lumen_mean = mean_intensity(fset.simple_enhanced, masks.lumen_only);
  if (!(lumen_mean > 0.0)) {
    r.detail = "lumen-only mean intensity is zero";
    return r;
  }
  r.value = clot_mean / lumen_mean;
  r.indicative = r.band.contains(*r.value);
  r.detail = "clot mean " + format_value(clot_mean) + ", lumen-only mean " + format_value(lumen_mean);
  return r;
}

struct OccupationOutcome {
  ParameterResult result;
  BinaryMask clot_binary;
  SegmentationEvidence evidence;
};

/// Otsu on the weighted image inside the clot ROI, dark foreground, closing,
/// then foreground area / clot ROI area with a strict lower bound.
inline OccupationOutcome eval_occupation(const FilteredSet& fset, const MaskTriple& masks,
                                         const CriterionThresholds& th) {
  OccupationOutcome out;
  ParameterResult& r = out.result;
  r.name = "occupation";
  r.band = Band{th.occupation_min_fraction, false, std::nullopt, true};
  out.clot_binary = BinaryMask(masks.clot.width(), masks.clot.height());
  out.evidence.clot_area = masks.clot.popcount();

  const std::vector<double> values = masked_values(fset.weighted_enhanced, masks.clot);
  OtsuResult split;
  try {
    split = otsu(values);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::degenerate_histogram) throw;
    r.value = 0.0;
    r.detail = "uniform clot region, no binary structure";
    return out;
  }
  out.evidence.otsu_threshold = split.threshold;
  out.evidence.otsu_effectiveness = split.effectiveness;
  if (split.effectiveness < th.otsu_min_effectiveness) {
    r.value = 0.0;
    r.detail = "Otsu split effectiveness " + format_value(split.effectiveness) + " below " +
               format_value(th.otsu_min_effectiveness) + ", no binary structure";
    return out;
  }

  const BinaryMask foreground = binarize(fset.weighted_enhanced, masks.clot, split.threshold);
  if (foreground.any()) {
    out.clot_binary = morphological_close(foreground, th.closing_radius) & masks.clot;
  }
  out.evidence.foreground_area = out.clot_binary.popcount();
  out.evidence.component_count = connected_components(out.clot_binary).size();
  r.value = static_cast<double>(out.evidence.foreground_area) / static_cast<double>(out.evidence.clot_area);
  r.indicative = r.band.contains(*r.value);
  r.detail = std::to_string(out.evidence.foreground_area) + " of " + std::to_string(out.evidence.clot_area) +
             " clot pixels solid after closing";
  return out;
}

/// Eccentricity of the largest closed component, strict upper bound.
inline ParameterResult eval_eccentricity(const BinaryMask& clot_binary, const CriterionThresholds& th) {
  ParameterResult r;
  r.name = "eccentricity";
  r.band = Band{std::nullopt, true, th.eccentricity_max, false};
  const auto regions = connected_components(clot_binary);
  if (regions.empty()) {
    r.detail = "no solid component";
    return r;
  }
  r.value = regions.front().eccentricity;
  r.indicative = r.band.contains(*r.value);
  r.detail = "largest of " + std::to_string(regions.size()) + " component(s), area " +
             std::to_string(regions.front().area);
  return r;
}

/// POSITIVE iff intensity and occupation agree, or exactly one of them holds
/// and the shape is circular.
constexpr Verdict decide(bool intensity, bool occupation, bool eccentricity) noexcept {
  const bool positive = (intensity && occupation) || ((intensity != occupation) && eccentricity);
  return positive ? Verdict::positive : Verdict::negative;
}

inline ClotAssessment classify(const StudySlice& slice, const RoiShape& lumen, const RoiShape& clot,
                               const FilterParams& params = {}, const CriterionThresholds& th = {}) {
  params.validate();
  th.validate();
  ClotAssessment a;
  a.params = params;
  a.thresholds = th;
  a.provenance = Provenance{slice.source_id, RoiPair{lumen, clot}, slice.original_bit_depth, slice.raw_min,
                            slice.raw_max};
  a.masks = make_masks(lumen, clot, slice.image.width(), slice.image.height());
  const FilteredSet fset = build_filtered_set(slice.image, params);
  a.intensity = eval_intensity(fset, a.masks, th);
  OccupationOutcome occ = eval_occupation(fset, a.masks, th);
  a.occupation = std::move(occ.result);
  a.segmentation = occ.evidence;
  a.clot_binary = std::move(occ.clot_binary);
  a.eccentricity = eval_eccentricity(a.clot_binary, th);
  a.verdict = decide(a.intensity.indicative, a.occupation.indicative, a.eccentricity.indicative);
  return a;
}

inline ClotAssessment classify(const StudySlice& slice, const RoiPair& rois, const FilterParams& params = {},
                               const CriterionThresholds& th = {}) {
  return classify(slice, rois.lumen, rois.clot, params, th);
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const CriterionThresholds& t) {
  j = nlohmann::json{{"intensity_center", t.intensity_center},
                     {"intensity_halfwidth", t.intensity_halfwidth},
                     {"occupation_min_fraction", t.occupation_min_fraction},
                     {"eccentricity_max", t.eccentricity_max},
                     {"closing_radius", t.closing_radius},
                     {"otsu_min_effectiveness", t.otsu_min_effectiveness}};
}

inline void from_json(const nlohmann::json& j, CriterionThresholds& t) {
  try {
    t.intensity_center = j.value("intensity_center", t.intensity_center);
    t.intensity_halfwidth = j.value("intensity_halfwidth", t.intensity_halfwidth);
    t.occupation_min_fraction = j.value("occupation_min_fraction", t.occupation_min_fraction);
    t.eccentricity_max = j.value("eccentricity_max", t.eccentricity_max);
    t.closing_radius = j.value("closing_radius", t.closing_radius);
    t.otsu_min_effectiveness = j.value("otsu_min_effectiveness", t.otsu_min_effectiveness);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::invalid_params, ex.what());
  }
}

template <typename T>
nlohmann::json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

inline void to_json(nlohmann::json& j, const Band& b) {
  j = nlohmann::json{{"low", optional_json(b.low)},
                     {"low_inclusive", b.low_inclusive},
                     {"high", optional_json(b.high)},
                     {"high_inclusive", b.high_inclusive}};
}

inline void from_json(const nlohmann::json& j, Band& b) {
  b.low = optional_from<double>(j, "low");
  b.low_inclusive = j.at("low_inclusive").get<bool>();
  b.high = optional_from<double>(j, "high");
  b.high_inclusive = j.at("high_inclusive").get<bool>();
}

inline void to_json(nlohmann::json& j, const ParameterResult& r) {
  j = nlohmann::json{{"name", r.name},
                     {"value", optional_json(r.value)},
                     {"band", r.band},
                     {"indicative", r.indicative},
                     {"detail", r.detail}};
}

inline void from_json(const nlohmann::json& j, ParameterResult& r) {
  r.name = j.at("name").get<std::string>();
  r.value = optional_from<double>(j, "value");
  r.band = j.at("band").get<Band>();
  r.indicative = j.at("indicative").get<bool>();
  r.detail = j.value("detail", std::string{});
}

inline void to_json(nlohmann::json& j, const SegmentationEvidence& s) {
  j = nlohmann::json{{"otsu_threshold", optional_json(s.otsu_threshold)},
                     {"otsu_effectiveness", optional_json(s.otsu_effectiveness)},
                     {"clot_area", s.clot_area},
                     {"foreground_area", s.foreground_area},
                     {"component_count", s.component_count}};
}

inline void from_json(const nlohmann::json& j, SegmentationEvidence& s) {
  s.otsu_threshold = optional_from<double>(j, "otsu_threshold");
  s.otsu_effectiveness = optional_from<double>(j, "otsu_effectiveness");
  s.clot_area = j.at("clot_area").get<std::size_t>();
  s.foreground_area = j.at("foreground_area").get<std::size_t>();
  s.component_count = j.at("component_count").get<std::size_t>();
}

}  // namespace clotseg
