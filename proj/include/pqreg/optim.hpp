#pragma once

#include "pqreg/calculus.hpp"

namespace pqreg {

// Closed-form duality maps used by every estimator. All of them return exact
// maximizers for weighted L_r spaces; ties concentrate on the
// lexicographically first coordinate so results are deterministic.

// (|c|_{l_q'}, u) with |u|_{l_q} <= 1 and <c,u> = |c|_{l_q'}.
std::pair<double, Vec> lq_dual_map(const Exponent& q, const Vec& c);

// a in the unit l_{p'} ball with sum_i a_i v_i = |v|_{l_p} (superdifferential
// of the pointwise l_p norm).
Vec lp_superdiff(const Exponent& p, const Vec& v);

struct BallMax {
  double value = 0.0;
  std::vector<Vec> members;
};

// max sum_{i,d} C[i][d] x_i[d] over |(sum_i |x_i|^q)^{1/q}|_X <= 1.
BallMax max_linear_over_lattice_ball(const FunctionSpace& X, const Exponent& q,
                                     const std::vector<Vec>& C);

// max sum_{i,d} C[i][d] x_i[d] over (sum_i |x_i|_X^q)^{1/q} <= 1.
BallMax max_linear_over_strong_ball(const FunctionSpace& X, const Exponent& q,
                                    const std::vector<Vec>& C);

struct MixedBallMax {
  double value = 0.0;
  std::vector<std::vector<Vec>> rows;
};

// max sum_{i,j,d} C[i][j][d] x_{i,j}[d] over the mixed lattice ball
// |(sum_i (sum_j |x_{i,j}|^q)^{r/q})^{1/r}|_X <= 1.
MixedBallMax max_linear_over_mixed_ball(
    const FunctionSpace& X, const Exponent& outer_r, const Exponent& inner_q,
    const std::vector<std::vector<Vec>>& C);

}  // namespace pqreg
