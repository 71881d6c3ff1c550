#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace predo {

enum class ErrorCode {
  invalid_config,
  numeric_degeneracy,
  length_mismatch,
  non_finite_fitness,
  parse_error,
  missing_file,
  no_common_subsumer,
  empty_pool,
  duplicate_rank,
  dimension_mismatch,
  empty_mesh,
  degenerate_extent,
  degenerate_baseline,
  insufficient_samples,
  transport_error,
  protocol_error,
  generation_failed,
  calibration_missing,
  missing_run,
  generation_aborted,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-checkable code; every module throws this.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace predo
