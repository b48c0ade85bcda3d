// clotseg command-line entry point.
//
// Exit codes: 0 ok, 1 batch finished with failed cases, 2 validation,
// 64 usage, 65 malformed input data, 74 I/O.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "clotseg/clotseg.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCaseErrors = 1;
constexpr int kExitValidation = 2;
constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitIo = 74;

int exit_code_for(const clotseg::Error& e) {
  switch (e.kind()) {
    case clotseg::ErrorKind::io: return kExitIo;
    case clotseg::ErrorKind::format: return kExitData;
    case clotseg::ErrorKind::validation: return kExitValidation;
  }
  return kExitValidation;
}

void init_logging() {
  auto logger = spdlog::stderr_color_mt("clotseg");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  const char* level = std::getenv("CLOTSEG_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
  } else {
    clotseg::write_file(out, text);
    spdlog::info("wrote {}", out);
  }
}

struct CommonFlags {
  std::string params;
  std::string thresholds;
  std::string out;
  bool no_timings = false;
  std::size_t jobs = 1;

  void attach(CLI::App* cmd, bool with_jobs) {
    cmd->add_option("--params", params, "FilterParams overrides: JSON file or inline object");
    cmd->add_option("--thresholds", thresholds, "CriterionThresholds overrides: JSON file or inline object");
    cmd->add_option("--out", out, "Output path (report file, or directory for phantom/render)");
    cmd->add_flag("--no-timings", no_timings, "Omit timings so reports are byte-reproducible");
    if (with_jobs) cmd->add_option("--jobs", jobs, "Parallel workers")->check(CLI::PositiveNumber);
  }

  clotseg::RunOptions options() const {
    clotseg::RunOptions opt;
    if (!params.empty()) opt.params = clotseg::json_argument(params).get<clotseg::FilterParams>();
    if (!thresholds.empty()) opt.thresholds = clotseg::json_argument(thresholds).get<clotseg::CriterionThresholds>();
    opt.timings = !no_timings;
    opt.jobs = jobs;
    return opt;
  }
};

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"Clot versus flow-artifact classification for True-FISP slices"};
  app.require_subcommand(1);

  CommonFlags classify_flags;
  std::string classify_image, classify_roi;
  auto* classify_cmd = app.add_subcommand("classify", "Classify one slice with a lumen/clot ROI pair");
  classify_cmd->add_option("image", classify_image, "DICOM or PGM slice")->required();
  classify_cmd->add_option("roi", classify_roi, "ROI JSON (or phantom sidecar)")->required();
  classify_flags.attach(classify_cmd, false);

  CommonFlags batch_flags;
  std::string manifest;
  auto* batch_cmd = app.add_subcommand("batch", "Classify every case listed in a manifest");
  batch_cmd->add_option("manifest", manifest, "Manifest JSON")->required();
  batch_flags.attach(batch_cmd, true);

  std::string phantom_kind;
  std::size_t phantom_count = 1;
  std::uint64_t phantom_seed = 1;
  double phantom_noise = 0.02;
  std::string phantom_out = ".";
  auto* phantom_cmd = app.add_subcommand("phantom", "Write synthetic phantom slices with sidecar ROI and label");
  phantom_cmd->add_option("--kind", phantom_kind, "real_clot, turbulence, clean_lumen or all")
      ->required()
      ->check(CLI::IsMember({"real_clot", "turbulence", "clean_lumen", "all"}));
  phantom_cmd->add_option("--count", phantom_count, "Cases per kind")->check(CLI::PositiveNumber);
  phantom_cmd->add_option("--seed", phantom_seed, "Base seed");
  phantom_cmd->add_option("--noise", phantom_noise, "Gaussian noise sigma")->check(CLI::NonNegativeNumber);
  phantom_cmd->add_option("--out", phantom_out, "Output directory");

  CommonFlags render_flags;
  std::string render_image, render_roi;
  auto* render_cmd = app.add_subcommand("render", "Write the nine debug renderings of one case");
  render_cmd->add_option("image", render_image, "DICOM or PGM slice")->required();
  render_cmd->add_option("roi", render_roi, "ROI JSON (or phantom sidecar)")->required();
  render_flags.attach(render_cmd, false);

  std::string serve_studies, serve_bind = "127.0.0.1", serve_cors = "*";
  int serve_port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API over a study directory");
  serve_cmd->add_option("--studies", serve_studies, "Directory of .pgm/.dcm slices")->required();
  serve_cmd->add_option("--bind", serve_bind, "Bind address");
  serve_cmd->add_option("--port", serve_port, "Port")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--cors-origin", serve_cors, "Allowed CORS origin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*classify_cmd) {
      const auto report = clotseg::cmd_classify(classify_image, classify_roi, classify_flags.options());
      emit(clotseg::serialize(report), classify_flags.out);
      return kExitOk;
    }
    if (*batch_cmd) {
      const auto report = clotseg::cmd_batch(manifest, batch_flags.options());
      emit(clotseg::serialize(report), batch_flags.out);
      if (report.error_count > 0) {
        spdlog::warn("{} of {} cases failed", report.error_count, report.cases.size());
        return kExitCaseErrors;
      }
      return kExitOk;
    }
    if (*phantom_cmd) {
      std::vector<clotseg::PhantomKind> kinds;
      if (phantom_kind == "all") {
        kinds = {clotseg::PhantomKind::real_clot, clotseg::PhantomKind::turbulence, clotseg::PhantomKind::clean_lumen};
      } else {
        kinds = {clotseg::phantom_kind_from_string(phantom_kind)};
      }
      for (const auto kind : kinds) {
        for (const auto& p : clotseg::cmd_phantom(kind, phantom_count, phantom_seed, phantom_out, phantom_noise)) {
          std::cout << p.string() << "\n";
        }
      }
      return kExitOk;
    }
    if (*render_cmd) {
      const std::string out = render_flags.out.empty() ? "." : render_flags.out;
      for (const auto& p : clotseg::cmd_render(render_image, render_roi, out, render_flags.options())) {
        std::cout << p.string() << "\n";
      }
      return kExitOk;
    }
    if (*serve_cmd) {
      clotseg::ClassificationService service(clotseg::StudyCatalog::load(serve_studies));
      auto server = clotseg::make_http_server(service, serve_cors);
      server->set_logger([](const httplib::Request& req, const httplib::Response& res) {
        spdlog::info("{} {} -> {}", req.method, req.path, res.status);
      });
      spdlog::info("serving {} studies on {}:{}", service.catalog().entries().size(), serve_bind, serve_port);
      std::cerr << "listening on " << serve_bind << ":" << serve_port << std::endl;
      if (!server->listen(serve_bind, serve_port)) {
        spdlog::error("cannot bind {}:{}", serve_bind, serve_port);
        return kExitIo;
      }
      return kExitOk;
    }
  } catch (const clotseg::Error& e) {
    spdlog::error("{}", e.what());
    std::cout << nlohmann::json{{"error", clotseg::to_string(e.code())}, {"message", e.what()}}.dump() << "\n";
    return exit_code_for(e);
  } catch (const nlohmann::json::exception& e) {
    spdlog::error("{}", e.what());
    std::cout << nlohmann::json{{"error", "parse_error"}, {"message", e.what()}}.dump() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
