#pragma once

#include <optional>
#include <string>

#include "pqreg/calculus.hpp"

namespace pqreg {

enum class UpperKind { None, AnalyticBound, OracleExact };

// Two-sided certificate for a norm-like quantity. `lower` is always backed by
// an explicit witness whose re-evaluation reproduces it; `upper` is either an
// analytic bound (named), the value certified by an exhaustive oracle, or
// +infinity when nothing applies. Quantities maximized over two tuple slots
// carry the second slot in `dual_witness`.
struct NormEstimate {
  double lower = 0.0;
  std::optional<VectorTuple> lower_witness;
  std::optional<VectorTuple> dual_witness;
  double upper = std::numeric_limits<double>::infinity();
  UpperKind upper_kind = UpperKind::None;
  std::string upper_name;
  double tolerance = 1e-2;
};

}  // namespace pqreg
