#pragma once

#include <stdexcept>
#include <string>

namespace segctl {

enum class errc {
  unreadable_file,
  malformed_header,
  unsupported_depth,
  truncated_payload,
  dimension_mismatch,
  invalid_argument,
  non_finite,
  empty_seed_set,
  unreached_voxel,
  out_of_bounds,
  unknown_label,
  label_coverage,
  impulse_inconsistent,
  malformed_log,
  config_mismatch,
};

inline const char* to_string(errc code) {
  switch (code) {
    case errc::unreadable_file: return "unreadable_file";
    case errc::malformed_header: return "malformed_header";
    case errc::unsupported_depth: return "unsupported_depth";
    case errc::truncated_payload: return "truncated_payload";
    case errc::dimension_mismatch: return "dimension_mismatch";
    case errc::invalid_argument: return "invalid_argument";
    case errc::non_finite: return "non_finite";
    case errc::empty_seed_set: return "empty_seed_set";
    case errc::unreached_voxel: return "unreached_voxel";
    case errc::out_of_bounds: return "out_of_bounds";
    case errc::unknown_label: return "unknown_label";
    case errc::label_coverage: return "label_coverage";
    case errc::impulse_inconsistent: return "impulse_inconsistent";
    case errc::malformed_log: return "malformed_log";
    case errc::config_mismatch: return "config_mismatch";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map them to exit statuses.
class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

}  // namespace segctl
