#pragma once

#include <string>

namespace qedcoh {

/// Soft diagnostic: an approximation behind a formula is outside its
/// comfortable range. Results are still returned.
struct RegimeWarning
{
  /// Stable machine-readable identifier, e.g. "scale_ell_L1".
  std::string code;
  std::string message;
};

} // namespace qedcoh
