#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pamlab {

/// Machine-readable failure tags. Each maps to a stable kebab-case name used
/// in CLI error records.
enum class Errc {
  invalid_grid,
  invalid_graph,
  invalid_word,
  missing_boundary,
  numerical_failure,
  invalid_time,
  invalid_field,
  invalid_order,
  insufficient_spectrum,
  invalid_step,
  insufficient_samples,
  blowup_abort,
  size_limit,
  invalid_window,
  invalid_configuration,
  unsupported_regime,
  invalid_region,
  recurrence_violated,
  invalid_config,
  compare_error,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }
  std::string_view tag() const noexcept { return to_string(code_); }

 private:
  Errc code_;
};

}  // namespace pamlab
