#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flowal {

enum class Errc {
  dimension_mismatch,
  non_finite_value,
  missing_column,
  malformed_row,
  unknown_label,
  unknown_record_id,
  insufficient_classes,
  empty_matrix,
  no_evaluation_labels,
  connection_lost,
  corrupt_checkpoint,
  io_error,
  config_error,
};

std::string_view to_string(Errc code);

/// Single exception type for the whole library; the code tells callers
/// which contract was violated.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace flowal
