#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "clotseg/classifier.hpp"
#include "clotseg/error.hpp"
#include "clotseg/filters.hpp"
#include "clotseg/roi.hpp"

namespace clotseg {

inline constexpr int kReportSchemaVersion = 1;

struct Normalization {
  int original_bit_depth = 16;
  double raw_min = 0.0;
  double raw_max = 0.0;
  friend bool operator==(const Normalization&, const Normalization&) = default;
};

/// The serializable part of a ClotAssessment; identical for CLI and service.
struct AssessmentRecord {
  std::string source_id;
  RoiPair roi;
  Normalization normalization;
  FilterParams params;
  CriterionThresholds thresholds;
  ParameterResult intensity;
  ParameterResult occupation;
  ParameterResult eccentricity;
  SegmentationEvidence segmentation;
  Verdict verdict = Verdict::negative;
  friend bool operator==(const AssessmentRecord&, const AssessmentRecord&) = default;
};

inline AssessmentRecord make_record(const ClotAssessment& a) {
  AssessmentRecord r;
  r.source_id = a.provenance.source_id;
  r.roi = a.provenance.roi;
  r.normalization = {a.provenance.original_bit_depth, a.provenance.raw_min, a.provenance.raw_max};
  r.params = a.params;
  r.thresholds = a.thresholds;
  r.intensity = a.intensity;
  r.occupation = a.occupation;
  r.eccentricity = a.eccentricity;
  r.segmentation = a.segmentation;
  r.verdict = a.verdict;
  return r;
}

struct Timings {
  double load_ms = 0.0;
  double classify_ms = 0.0;
  double total_ms = 0.0;
  friend bool operator==(const Timings&, const Timings&) = default;
};

struct CaseError {
  std::string code;
  std::string message;
  friend bool operator==(const CaseError&, const CaseError&) = default;
};

struct CaseReport {
  std::optional<std::string> image;  ///< manifest entry, batch mode only
  std::optional<Verdict> expected;
  std::optional<AssessmentRecord> assessment;
  std::optional<CaseError> error;
  std::optional<Timings> timings;
  friend bool operator==(const CaseReport&, const CaseReport&) = default;
};

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Diagnostic statistics as fractions in [0,1]; undefined when a denominator is zero.
struct Statistics {
  ConfusionCounts counts;
  std::optional<double> accuracy;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> ppv;
  std::optional<double> npv;
  friend bool operator==(const Statistics&, const Statistics&) = default;
};

inline Statistics compute_statistics(const ConfusionCounts& c) {
  const auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  Statistics s;
  s.counts = c;
  s.accuracy = ratio(c.tp + c.tn, c.total());
  s.sensitivity = ratio(c.tp, c.tp + c.fn);
  s.specificity = ratio(c.tn, c.tn + c.fp);
  s.ppv = ratio(c.tp, c.tp + c.fp);
  s.npv = ratio(c.tn, c.tn + c.fn);
  return s;
}

struct Report {
  int schema_version = kReportSchemaVersion;
  std::string mode = "classify";
  std::vector<CaseReport> cases;
  std::size_t error_count = 0;
  std::optional<Statistics> statistics;
  friend bool operator==(const Report&, const Report&) = default;
};

/// Confusion counts over cases that carry both a label and a verdict.
/// Returns nullopt when no case is labeled.
inline std::optional<Statistics> statistics_for(const std::vector<CaseReport>& cases) {
  ConfusionCounts c;
  bool any = false;
  for (const auto& cr : cases) {
    if (!cr.expected || !cr.assessment) continue;
    any = true;
    const bool predicted = cr.assessment->verdict == Verdict::positive;
    const bool actual = *cr.expected == Verdict::positive;
    if (predicted && actual) ++c.tp;
    else if (predicted) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  if (!any) return std::nullopt;
  return compute_statistics(c);
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const Verdict& v) { j = std::string(to_string(v)); }
inline void from_json(const nlohmann::json& j, Verdict& v) { v = verdict_from_string(j.get<std::string>()); }

/// Fixed conventions, echoed in every assessment so results are reproducible.
inline nlohmann::json conventions_json() {
  return nlohmann::json{{"normalization", "per-slice min-max of stored values to [0,1]"},
                        {"roi_rasterization", "pixel center (x+0.5, y+0.5) inside shape; polygons even-odd"},
                        {"unsharp_residual", "f - gaussian_blur(f, sigma), kernel truncated at 3 sigma, replicate border"},
                        {"otsu", "256-bin histogram of clot-ROI pixels of weighted_enhanced, lowest bin on ties"},
                        {"foreground", "dark: value <= otsu threshold"},
                        {"structuring_element", "discrete Euclidean disk of closing_radius"},
                        {"connectivity", 8},
                        {"intensity_band", "inclusive"},
                        {"occupation_bound", "strict >"},
                        {"eccentricity_bound", "strict <"},
                        {"eccentricity_region", "largest closed component"},
                        {"solidity_alias", "occupation"}};
}

inline void to_json(nlohmann::json& j, const AssessmentRecord& r) {
  j = nlohmann::json{{"source_id", r.source_id},
                     {"roi", r.roi},
                     {"normalization",
                      {{"original_bit_depth", r.normalization.original_bit_depth},
                       {"raw_min", r.normalization.raw_min},
                       {"raw_max", r.normalization.raw_max}}},
                     {"params", r.params},
                     {"thresholds", r.thresholds},
                     {"criteria", {{"intensity_ratio", r.intensity}, {"occupation", r.occupation}, {"eccentricity", r.eccentricity}}},
                     {"segmentation", r.segmentation},
                     {"verdict", r.verdict},
                     {"conventions", conventions_json()}};
}

inline void from_json(const nlohmann::json& j, AssessmentRecord& r) {
  r.source_id = j.at("source_id").get<std::string>();
  r.roi = j.at("roi").get<RoiPair>();
  const auto& n = j.at("normalization");
  r.normalization = {n.at("original_bit_depth").get<int>(), n.at("raw_min").get<double>(), n.at("raw_max").get<double>()};
  r.params = j.at("params").get<FilterParams>();
  r.thresholds = j.at("thresholds").get<CriterionThresholds>();
  const auto& c = j.at("criteria");
  r.intensity = c.at("intensity_ratio").get<ParameterResult>();
  r.occupation = c.at("occupation").get<ParameterResult>();
  r.eccentricity = c.at("eccentricity").get<ParameterResult>();
  r.segmentation = j.at("segmentation").get<SegmentationEvidence>();
  r.verdict = j.at("verdict").get<Verdict>();
}

inline void to_json(nlohmann::json& j, const Timings& t) {
  j = nlohmann::json{{"load_ms", t.load_ms}, {"classify_ms", t.classify_ms}, {"total_ms", t.total_ms}};
}
inline void from_json(const nlohmann::json& j, Timings& t) {
  t.load_ms = j.at("load_ms").get<double>();
  t.classify_ms = j.at("classify_ms").get<double>();
  t.total_ms = j.at("total_ms").get<double>();
}

inline void to_json(nlohmann::json& j, const CaseError& e) { j = nlohmann::json{{"code", e.code}, {"message", e.message}}; }
inline void from_json(const nlohmann::json& j, CaseError& e) {
  e.code = j.at("code").get<std::string>();
  e.message = j.at("message").get<std::string>();
}

inline void to_json(nlohmann::json& j, const CaseReport& c) {
  j = nlohmann::json::object();
  if (c.image) j["image"] = *c.image;
  if (c.expected) j["expected"] = *c.expected;
  if (c.assessment) j["assessment"] = *c.assessment;
  if (c.error) j["error"] = *c.error;
  if (c.timings) j["timings_ms"] = *c.timings;
}

inline void from_json(const nlohmann::json& j, CaseReport& c) {
  c.image = optional_from<std::string>(j, "image");
  c.expected = optional_from<Verdict>(j, "expected");
  c.assessment = optional_from<AssessmentRecord>(j, "assessment");
  c.error = optional_from<CaseError>(j, "error");
  c.timings = optional_from<Timings>(j, "timings_ms");
}

inline void to_json(nlohmann::json& j, const Statistics& s) {
  j = nlohmann::json{{"tp", s.counts.tp},
                     {"fp", s.counts.fp},
                     {"tn", s.counts.tn},
                     {"fn", s.counts.fn},
                     {"accuracy", optional_json(s.accuracy)},
                     {"sensitivity", optional_json(s.sensitivity)},
                     {"specificity", optional_json(s.specificity)},
                     {"ppv", optional_json(s.ppv)},
                     {"npv", optional_json(s.npv)}};
}

inline void from_json(const nlohmann::json& j, Statistics& s) {
  s.counts = {j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(), j.at("tn").get<std::size_t>(),
              j.at("fn").get<std::size_t>()};
  s.accuracy = optional_from<double>(j, "accuracy");
  s.sensitivity = optional_from<double>(j, "sensitivity");
  s.specificity = optional_from<double>(j, "specificity");
  s.ppv = optional_from<double>(j, "ppv");
  s.npv = optional_from<double>(j, "npv");
}

inline void to_json(nlohmann::json& j, const Report& r) {
  j = nlohmann::json{{"schema_version", r.schema_version}, {"mode", r.mode}, {"cases", r.cases}, {"error_count", r.error_count}};
  if (r.statistics) j["statistics"] = *r.statistics;
}

inline void from_json(const nlohmann::json& j, Report& r) {
  r.schema_version = j.at("schema_version").get<int>();
  r.mode = j.at("mode").get<std::string>();
  r.cases = j.at("cases").get<std::vector<CaseReport>>();
  r.error_count = j.at("error_count").get<std::size_t>();
  r.statistics = optional_from<Statistics>(j, "statistics");
}

inline std::string serialize(const Report& r) { return nlohmann::json(r).dump(2) + "\n"; }

inline Report parse_report(const std::string& text) {
  try {
    return nlohmann::json::parse(text).get<Report>();
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::parse_error, ex.what());
  }
}

}  // namespace clotseg
