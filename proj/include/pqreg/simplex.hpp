#pragma once

#include "pqreg/util.hpp"

namespace pqreg {

// Dense linear program max c^T x subject to A x <= b with x free. Every b_i
// must be nonnegative so that x = 0 is feasible; callers bound the feasible
// set themselves (box rows), so unboundedness signals a missing constraint.
struct LinearProgram {
  Vec c;
  std::vector<Vec> rows;
  Vec b;
};

struct LpResult {
  bool bounded = true;
  double value = 0.0;
  Vec x;
};

// Primal simplex with Bland's rule on the u - v split of the free variables;
// finite termination, no phase-1 needed thanks to the b >= 0 precondition.
LpResult solve_lp(const LinearProgram& lp);

}  // namespace pqreg
