#include "pamlab/error.hpp"

namespace pamlab {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_grid: return "invalid-grid";
    case Errc::invalid_graph: return "invalid-graph";
    case Errc::invalid_word: return "invalid-word";
    case Errc::missing_boundary: return "missing-boundary";
    case Errc::numerical_failure: return "numerical-failure";
    case Errc::invalid_time: return "invalid-time";
    case Errc::invalid_field: return "invalid-field";
    case Errc::invalid_order: return "invalid-order";
    case Errc::insufficient_spectrum: return "insufficient-spectrum";
    case Errc::invalid_step: return "invalid-step";
    case Errc::insufficient_samples: return "insufficient-samples";
    case Errc::blowup_abort: return "blowup-abort";
    case Errc::size_limit: return "size-limit";
    case Errc::invalid_window: return "invalid-window";
    case Errc::invalid_configuration: return "invalid-configuration";
    case Errc::unsupported_regime: return "unsupported-regime";
    case Errc::invalid_region: return "invalid-region";
    case Errc::recurrence_violated: return "recurrence-violated";
    case Errc::invalid_config: return "invalid-config";
    case Errc::compare_error: return "compare-error";
  }
  return "unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace pamlab
