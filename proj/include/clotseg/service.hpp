#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "clotseg/classifier.hpp"
#include "clotseg/error.hpp"
#include "clotseg/filters.hpp"
#include "clotseg/image_io.hpp"
#include "clotseg/png.hpp"
#include "clotseg/report.hpp"
#include "clotseg/roi.hpp"

namespace clotseg {

// ---------------------------------------------------------------------------
// Run-length encoding of masks for overlays:
//   {"width": W, "height": H, "runs": [bg, fg, bg, fg, ...]}
// Runs scan in raster order and always start with a (possibly empty) background run.

inline nlohmann::json encode_rle(const BinaryMask& mask) {
  std::vector<std::size_t> runs;
  bool current = false;
  std::size_t length = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask.test(i) != current) {
      runs.push_back(length);
      current = !current;
      length = 0;
    }
    ++length;
  }
  runs.push_back(length);
  return nlohmann::json{{"width", mask.width()}, {"height", mask.height()}, {"runs", runs}};
}

inline BinaryMask decode_rle(const nlohmann::json& j) {
  try {
    BinaryMask mask(j.at("width").get<std::size_t>(), j.at("height").get<std::size_t>());
    std::size_t pos = 0;
    bool on = false;
    for (const auto& r : j.at("runs")) {
      const auto n = r.get<std::size_t>();
      if (pos + n > mask.size()) throw Error(ErrorCode::parse_error, "RLE runs exceed mask size");
      if (on) {
        for (std::size_t i = pos; i < pos + n; ++i) mask.set_index(i);
      }
      pos += n;
      on = !on;
    }
    if (pos != mask.size()) throw Error(ErrorCode::parse_error, "RLE runs do not cover the mask");
    return mask;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::parse_error, ex.what());
  }
}

// ---------------------------------------------------------------------------

/// Slices loaded once from a directory of .pgm/.dcm files; id is the file stem.
class StudyCatalog {
 public:
  StudyCatalog() = default;

  static StudyCatalog load(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) throw Error(ErrorCode::io_error, dir.string() + " is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      const auto ext = entry.path().extension().string();
      if (ext == ".pgm" || ext == ".dcm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    StudyCatalog catalog;
    for (const auto& f : files) catalog.add(load_image_file(f));
    return catalog;
  }

  void add(StudySlice slice) {
    std::string id = slice.source_id;
    if (entries_.contains(id)) throw Error(ErrorCode::duplicate_study_id, "duplicate study id '" + id + "'");
    entries_.emplace(std::move(id), std::move(slice));
  }

  const StudySlice* find(const std::string& id) const {
    const auto it = entries_.find(id);
    return it == entries_.end() ? nullptr : &it->second;
  }

  /// Ordered lexicographically by id.
  const std::map<std::string, StudySlice>& entries() const noexcept { return entries_; }

 private:
  std::map<std::string, StudySlice> entries_;
};

struct ServiceResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

inline ServiceResponse json_response(int status, const nlohmann::json& body) {
  return ServiceResponse{status, "application/json", body.dump()};
}

inline ServiceResponse error_response(int status, std::string_view code, const std::string& message) {
  return json_response(status, nlohmann::json{{"error", code}, {"message", message}});
}

/// HTTP-independent request handlers. The catalog is immutable; the filtered
/// view cache computes each id at most once and is safe under concurrent use.
class ClassificationService {
 public:
  explicit ClassificationService(StudyCatalog catalog) : catalog_(std::move(catalog)) {
    for (const auto& [id, slice] : catalog_.entries()) cache_.emplace(id, std::make_unique<CacheEntry>());
  }

  const StudyCatalog& catalog() const noexcept { return catalog_; }

  ServiceResponse list_studies() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [id, slice] : catalog_.entries()) {
      out.push_back({{"id", id}, {"width", slice.image.width()}, {"height", slice.image.height()}});
    }
    return json_response(200, out);
  }

  ServiceResponse image(const std::string& id, const std::string& view) {
    const StudySlice* slice = catalog_.find(id);
    if (!slice) return error_response(404, "unknown_study", "no study '" + id + "'");
    if (view != "original" && view != "simple" && view != "weighted") {
      return error_response(400, "unknown_view", "view must be original, simple or weighted");
    }
    try {
      const FilteredSet& fset = filtered(id, *slice);
      const GrayImage& img = view == "original" ? fset.original
                             : view == "simple" ? fset.simple_enhanced
                                                : fset.weighted_enhanced;
      const auto png = encode_png8(img);
      return ServiceResponse{200, "image/png", std::string(png.begin(), png.end())};
    } catch (const Error& ex) {
      return error_response(422, to_string(ex.code()), ex.what());
    }
  }

  /// Body: {"lumen": ROI, "clot": ROI, "params"?: {...}, "thresholds"?: {...}}.
  /// A body that does not decode against the schema gives 400; value validation
  /// (ROI geometry, parameters, containment) happens in the pipeline and gives 422.
  ServiceResponse classify(const std::string& id, const std::string& body) const {
    const StudySlice* slice = catalog_.find(id);
    if (!slice) return error_response(404, "unknown_study", "no study '" + id + "'");
    RoiPair rois;
    FilterParams params;
    CriterionThresholds thresholds;
    try {
      const auto doc = nlohmann::json::parse(body);
      rois = doc.get<RoiPair>();
      if (doc.contains("params")) params = doc.at("params").get<FilterParams>();
      if (doc.contains("thresholds")) thresholds = doc.at("thresholds").get<CriterionThresholds>();
    } catch (const nlohmann::json::exception& ex) {
      return error_response(400, "malformed_body", ex.what());
    } catch (const Error& ex) {
      return error_response(400, to_string(ex.code()), ex.what());
    }
    try {
      const ClotAssessment a = clotseg::classify(*slice, rois, params, thresholds);
      return json_response(200, nlohmann::json{{"assessment", make_record(a)},
                                               {"overlays",
                                                {{"clot", encode_rle(a.masks.clot)},
                                                 {"lumen", encode_rle(a.masks.lumen)},
                                                 {"lumen_only", encode_rle(a.masks.lumen_only)},
                                                 {"clot_binary", encode_rle(a.clot_binary)}}}});
    } catch (const Error& ex) {
      return error_response(ex.kind() == ErrorKind::io ? 500 : 422, to_string(ex.code()), ex.what());
    }
  }

  /// Number of ids whose filtered views have been computed.
  std::size_t cached_count() const {
    std::size_t n = 0;
    for (const auto& [id, entry] : cache_) n += entry->computed.load() ? 1 : 0;
    return n;
  }

 private:
  struct CacheEntry {
    std::once_flag once;
    std::atomic<bool> computed{false};
    std::optional<FilteredSet> value;
  };

  const FilteredSet& filtered(const std::string& id, const StudySlice& slice) {
    CacheEntry& entry = *cache_.at(id);
    std::call_once(entry.once, [&] {
      entry.value = build_filtered_set(slice.image, FilterParams{});
      entry.computed = true;
    });
    return *entry.value;
  }

  StudyCatalog catalog_;
  std::map<std::string, std::unique_ptr<CacheEntry>> cache_;
};

// ---------------------------------------------------------------------------
// HTTP binding

inline void apply(const ServiceResponse& r, httplib::Response& res) {
  res.status = r.status;
  res.set_content(r.body, r.content_type);
}

/// Registers the API routes on a new server. CORS allows `cors_origin`.
inline std::unique_ptr<httplib::Server> make_http_server(ClassificationService& service,
                                                         const std::string& cors_origin = "*") {
  auto server = std::make_unique<httplib::Server>();
  server->set_default_headers({{"Access-Control-Allow-Origin", cors_origin},
                               {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                               {"Access-Control-Allow-Headers", "Content-Type"}});
  server->Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server->Get("/api/studies", [&service](const httplib::Request&, httplib::Response& res) {
    apply(service.list_studies(), res);
  });
  server->Get(R"(/api/studies/([^/]+)/image)", [&service](const httplib::Request& req, httplib::Response& res) {
    const std::string view = req.has_param("view") ? req.get_param_value("view") : "original";
    apply(service.image(req.matches[1], view), res);
  });
  server->Post(R"(/api/studies/([^/]+)/classify)", [&service](const httplib::Request& req, httplib::Response& res) {
    apply(service.classify(req.matches[1], req.body), res);
  });
  server->set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      res.set_content(nlohmann::json{{"error", "not_found"}, {"message", "no such route"}}.dump(), "application/json");
    }
  });
  return server;
}

}  // namespace clotseg
