#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace clotseg {

enum class ErrorCode {
  // image_io
  missing_preamble,
  unsupported_transfer_syntax,
  missing_pixel_data,
  dimension_mismatch,
  malformed_dicom,
  unsupported_image,
  bad_magic,
  bad_header,
  truncated_pixel_data,
  // roi
  invalid_roi,
  empty_mask,
  clot_not_contained,
  lumen_equals_clot,
  // filters / segmentation
  invalid_params,
  tile_grid_too_fine,
  image_too_small,
  degenerate_histogram,
  // phantom
  inclusion_outside_lumen,
  invalid_phantom_spec,
  // plumbing
  duplicate_study_id,
  io_error,
  parse_error,
};

/// Broad class of an error, used to pick CLI exit codes and HTTP statuses.
enum class ErrorKind { validation, format, io };

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::missing_preamble: return "missing_preamble";
    case ErrorCode::unsupported_transfer_syntax: return "unsupported_transfer_syntax";
    case ErrorCode::missing_pixel_data: return "missing_pixel_data";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::malformed_dicom: return "malformed_dicom";
    case ErrorCode::unsupported_image: return "unsupported_image";
    case ErrorCode::bad_magic: return "bad_magic";
    case ErrorCode::bad_header: return "bad_header";
    case ErrorCode::truncated_pixel_data: return "truncated_pixel_data";
    case ErrorCode::invalid_roi: return "invalid_roi";
    case ErrorCode::empty_mask: return "empty_mask";
    case ErrorCode::clot_not_contained: return "clot_not_contained";
    case ErrorCode::lumen_equals_clot: return "lumen_equals_clot";
    case ErrorCode::invalid_params: return "invalid_params";
    case ErrorCode::tile_grid_too_fine: return "tile_grid_too_fine";
    case ErrorCode::image_too_small: return "image_too_small";
    case ErrorCode::degenerate_histogram: return "degenerate_histogram";
    case ErrorCode::inclusion_outside_lumen: return "inclusion_outside_lumen";
    case ErrorCode::invalid_phantom_spec: return "invalid_phantom_spec";
    case ErrorCode::duplicate_study_id: return "duplicate_study_id";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::parse_error: return "parse_error";
  }
  return "unknown";
}

constexpr ErrorKind kind_of(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::io_error:
      return ErrorKind::io;
    case ErrorCode::missing_preamble:
    case ErrorCode::unsupported_transfer_syntax:
    case ErrorCode::missing_pixel_data:
    case ErrorCode::malformed_dicom:
    case ErrorCode::unsupported_image:
    case ErrorCode::bad_magic:
    case ErrorCode::bad_header:
    case ErrorCode::truncated_pixel_data:
    case ErrorCode::parse_error:
      return ErrorKind::format;
    default:
      return ErrorKind::validation;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorKind kind() const noexcept { return kind_of(code_); }

 private:
  ErrorCode code_;
};

}  // namespace clotseg
