#include "homs/error.hpp"

namespace homs {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_discretization: return "invalid-discretization";
    case ErrorCode::invalid_periodicity: return "invalid-periodicity";
    case ErrorCode::unknown_marker: return "unknown-marker";
    case ErrorCode::unknown_phase: return "unknown-phase";
    case ErrorCode::non_elliptic_material: return "non-elliptic-material";
    case ErrorCode::non_elliptic_assembly: return "non-elliptic-assembly";
    case ErrorCode::non_convergence: return "non-convergence";
    case ErrorCode::singular_system: return "singular-system";
    case ErrorCode::incompatible_rhs: return "incompatible-rhs";
    case ErrorCode::dependency_order: return "dependency-order";
    case ErrorCode::provenance: return "provenance";
    case ErrorCode::invalid_tensor: return "invalid-tensor";
    case ErrorCode::invalid_table: return "invalid-table";
    case ErrorCode::stale_table: return "stale-table";
    case ErrorCode::corrupt_table: return "corrupt-table";
    case ErrorCode::interpolation: return "interpolation";
    case ErrorCode::geometry_mismatch: return "geometry-mismatch";
    case ErrorCode::undefined_relative_error: return "undefined-relative-error";
    case ErrorCode::step_failure: return "step-failure";
    case ErrorCode::picard_non_convergence: return "picard-non-convergence";
    case ErrorCode::invalid_config: return "invalid-config";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

}  // namespace homs
