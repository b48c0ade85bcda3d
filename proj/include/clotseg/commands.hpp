#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "clotseg/classifier.hpp"
#include "clotseg/error.hpp"
#include "clotseg/filters.hpp"
#include "clotseg/image_io.hpp"
#include "clotseg/phantom.hpp"
#include "clotseg/png.hpp"
#include "clotseg/report.hpp"
#include "clotseg/roi.hpp"

namespace clotseg {

struct RunOptions {
  FilterParams params;
  CriterionThresholds thresholds;
  bool timings = true;
  std::size_t jobs = 1;
};

inline nlohmann::json parse_json_text(std::string_view text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::parse_error, what + ": " + ex.what());
  }
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_json_text(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), path.string());
}

/// A flag value is inline JSON when it starts with '{', otherwise a file path.
inline nlohmann::json json_argument(const std::string& value) {
  const auto first = value.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && value[first] == '{') return parse_json_text(value, "inline JSON");
  return read_json_file(value);
}

inline RoiPair load_roi_file(const std::filesystem::path& path) { return parse_roi_document(read_json_file(path)); }

namespace detail {

using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point from, Clock::time_point to) {
  return std::chrono::duration<double, std::milli>(to - from).count();
}

}  // namespace detail

/// Runs one case. Pipeline errors throw; callers decide whether to record them.
inline CaseReport run_case(const std::filesystem::path& image_path, const RoiPair& rois, const RunOptions& opt) {
  const auto t0 = detail::Clock::now();
  const StudySlice slice = load_image_file(image_path);
  const auto t1 = detail::Clock::now();
  const ClotAssessment a = classify(slice, rois, opt.params, opt.thresholds);
  const auto t2 = detail::Clock::now();
  CaseReport cr;
  cr.assessment = make_record(a);
  if (opt.timings) cr.timings = Timings{detail::elapsed_ms(t0, t1), detail::elapsed_ms(t1, t2), detail::elapsed_ms(t0, t2)};
  return cr;
}

inline Report cmd_classify(const std::filesystem::path& image_path, const std::filesystem::path& roi_path,
                           const RunOptions& opt = {}) {
  Report report;
  report.mode = "classify";
  report.cases.push_back(run_case(image_path, load_roi_file(roi_path), opt));
  return report;
}

struct ManifestEntry {
  std::string image;
  std::string roi;
  std::optional<Verdict> expected;
};

/// {"cases": [{"image": path, "roi": path, "expected": "POSITIVE"|"NEGATIVE"}]}
inline std::vector<ManifestEntry> parse_manifest(const nlohmann::json& doc) {
  std::vector<ManifestEntry> out;
  try {
    for (const auto& c : doc.at("cases")) {
      ManifestEntry e;
      e.image = c.at("image").get<std::string>();
      e.roi = c.at("roi").get<std::string>();
      if (c.contains("expected") && !c.at("expected").is_null()) {
        e.expected = verdict_from_string(c.at("expected").get<std::string>());
      }
      out.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::parse_error, std::string("manifest: ") + ex.what());
  }
  return out;
}

/// Per-case failures are recorded, never thrown. Results keep manifest order
/// regardless of `jobs`.
inline Report cmd_batch(const std::filesystem::path& manifest_path, const RunOptions& opt = {}) {
  const auto entries = parse_manifest(read_json_file(manifest_path));
  const auto base = manifest_path.parent_path();
  Report report;
  report.mode = "batch";
  report.cases.resize(entries.size());

  auto run_one = [&](std::size_t i) {
    const auto& e = entries[i];
    CaseReport cr;
    try {
      cr = run_case(base / e.image, load_roi_file(base / e.roi), opt);
    } catch (const Error& ex) {
      cr.error = CaseError{std::string(to_string(ex.code())), ex.what()};
    }
    cr.image = e.image;
    cr.expected = e.expected;
    report.cases[i] = std::move(cr);
  };

  const std::size_t workers = std::clamp<std::size_t>(opt.jobs, 1, std::max<std::size_t>(1, entries.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < entries.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < entries.size(); i = next++) run_one(i);
      });
    }
  }

  report.error_count = static_cast<std::size_t>(
      std::count_if(report.cases.begin(), report.cases.end(), [](const CaseReport& c) { return c.error.has_value(); }));
  report.statistics = statistics_for(report.cases);
  return report;
}

inline std::string phantom_file_stem(PhantomKind kind, std::size_t index) {
  return "case_" + std::string(to_string(kind)) + "_" + std::to_string(index);
}

inline nlohmann::json phantom_sidecar(const PhantomCase& pc) {
  return nlohmann::json{{"roi", pc.rois()}, {"expected", pc.expected}, {"spec", pc.spec}};
}

/// Writes case_<kind>_<index>.pgm and .json for `count` jittered phantoms.
/// Returns the written paths in order.
inline std::vector<std::filesystem::path> cmd_phantom(PhantomKind kind, std::size_t count, std::uint64_t seed,
                                                      const std::filesystem::path& out_dir, double noise_sigma = 0.02) {
  if (count < 1) throw Error(ErrorCode::invalid_phantom_spec, "count must be >= 1");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (std::size_t i = 0; i < count; ++i) {
    const PhantomCase pc = generate(jittered_spec(kind, corpus_seed(seed, kind, i), noise_sigma));
    const auto stem = out_dir / phantom_file_stem(kind, i);
    auto pgm = stem;
    pgm += ".pgm";
    auto json = stem;
    json += ".json";
    write_file(pgm, encode_pgm16(pc.slice.image));
    write_file(json, phantom_sidecar(pc).dump(2) + "\n");
    written.push_back(pgm);
    written.push_back(json);
  }
  return written;
}

/// File names of the debug renders, in output order.
inline const std::vector<std::string>& render_names() {
  static const std::vector<std::string> names{"01_original.png",         "02_sharpened.png",
                                              "03_enhanced.png",         "04_simple_enhanced.png",
                                              "05_weighted_enhanced.png", "06_mask_clot.png",
                                              "07_mask_lumen.png",       "08_mask_lumen_only.png",
                                              "09_clot_binary_closed.png"};
  return names;
}

inline std::vector<std::filesystem::path> cmd_render(const std::filesystem::path& image_path,
                                                     const std::filesystem::path& roi_path,
                                                     const std::filesystem::path& out_dir, const RunOptions& opt = {}) {
  const StudySlice slice = load_image_file(image_path);
  const RoiPair rois = load_roi_file(roi_path);
  const ClotAssessment a = classify(slice, rois, opt.params, opt.thresholds);
  const FilteredSet fset = build_filtered_set(slice.image, opt.params);
  const std::vector<GrayImage> images{fset.original,
                                      fset.sharpened,
                                      fset.enhanced,
                                      fset.simple_enhanced,
                                      fset.weighted_enhanced,
                                      mask_to_image(a.masks.clot),
                                      mask_to_image(a.masks.lumen),
                                      mask_to_image(a.masks.lumen_only),
                                      mask_to_image(a.clot_binary)};
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto path = out_dir / render_names()[i];
    write_file(path, encode_png8(images[i]));
    written.push_back(path);
  }
  return written;
}

}  // namespace clotseg
