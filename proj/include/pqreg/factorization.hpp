#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pqreg/operators.hpp"
#include "pqreg/regular.hpp"

namespace pqreg {

// Diagonal factorization T = M_g inner M_f. `f` lives on the domain atoms
// and `g` on the codomain atoms, both nonnegative; `inner` is the divided-out
// operator between plain weighted L_r frames carrying the original atom
// weights. `constant` is the budget the weights were solved against and
// `residual` the largest entrywise defect of the recomposition.
struct FactorizationResult {
  Vec f;
  Vec g;
  OperatorMatrix inner;
  double constant;
  double residual;
};

// Outcome of re-checking a factorization against the operator it came from.
// `inner_norm_est` is a convergent lower estimate, so ok = false certifies a
// genuine violation while ok = true is a heuristic pass.
struct FactorizationCheck {
  double residual;
  double inner_norm_est;
  bool ok;
};

// One cell of a coincidence sweep over L_{r1} -> L_{r2} frames.
struct MZCell {
  Exponent p;
  Exponent q;
  Exponent r1;
  Exponent r2;
  bool coincidence_predicted;
  double observed_ratio;
};

// Grid point for mz_coincidence_sweep.
struct MZQuery {
  Exponent p;
  Exponent q;
  Exponent r1;
  Exponent r2;
};

// Maurey-Rosenthal weight solver. Requires 1 <= s <= p < infinity with
// 1/p + 1/s' <= 1, a weighted L_r domain with exponent >= p (p-convexity
// constant one) and codomain with exponent <= s (s-concavity constant one).
// Finds f_0 in the unit ball of (X_[p])' and g_0 in the unit ball of
// ((Y')_[s'])' with
//   int |Tx y'| dnu <= C (int |x|^p f_0 dmu)^{1/p} (int |y'|^{s'} g_0 dnu)^{1/s'}
// for every pair, by cutting planes: solve the concave weight problem on the
// cuts collected so far, then add the most violated pair found by alternating
// ascent. C is C_hint when positive, otherwise a certified (p,p)-regularity
// bound. Returns f = f_0^{1/p}, g = g_0^{1/s'} and the inner operator
// T / (g x f) between L_p(mu) and L_s(nu), whose norm is at most C.
// Throws when no feasible weights are found within max_cuts; the message
// carries the least violated pair seen. When violation_trace is given it
// receives the oracle's violation factor per round, nonincreasing up to the
// inner solver tolerance.
FactorizationResult maurey_rosenthal_factorize(const OperatorMatrix& T,
                                               const Exponent& p,
                                               const Exponent& s, double C_hint,
                                               std::size_t max_cuts,
                                               std::uint64_t seed,
                                               Vec* violation_trace = nullptr);

// Strong factorization through L_r. Requires 1 <= q <= p, 1 < r < infinity,
// a weighted L_r domain with exponent >= r and codomain with exponent <= r.
// Same cutting-plane machinery as maurey_rosenthal_factorize, with tuple
// cuts
//   sum_j |int T x_j y'_j| <= K (int (sum_j |x_j|^q)^{r/q} f_0)^{1/r}
//                               (int (sum_j |y'_j|^{p'})^{r'/p'} g_0)^{1/r'}
// and f = f_0^{1/r}, g = g_0^{1/r'}. K_hint <= 0 solves the matrix
// inequality constant first and adds one percent slack. The inner operator
// maps L_r(mu) to L_r(nu) with (p,q)-regularity constant at most K.
FactorizationResult strong_factorize_Lr(const OperatorMatrix& T,
                                        const Exponent& p, const Exponent& q,
                                        const Exponent& r, double K_hint,
                                        std::size_t max_cuts,
                                        std::uint64_t seed,
                                        Vec* violation_trace = nullptr);

// Recomposes M_g res.inner M_f entrywise against T and estimates the inner
// operator's norm, or its (p,q)-regularity constant when inner_regularity is
// given. ok = (residual <= 1e-8) and (estimate <= res.constant * 1.01).
FactorizationCheck verify_factorization(
    const FactorizationResult& res, const OperatorMatrix& T, std::uint64_t seed,
    const std::optional<RegularityParams>& inner_regularity = std::nullopt);

// Least K with |(sum_i (sum_j |Tx_ij|^p)^{r/p})^{1/r}|_Y <= K times the same
// expression in (q, r) on the domain side, estimated from below by minorant
// ascent over rows x cols matrices of domain vectors. One row recovers the
// (p,q)-regularity ascent and one column its (r,r) analogue. The upper bound
// is exact for diagonal operators on a shared frame and +infinity otherwise.
NormEstimate matrix_inequality_constant(const OperatorMatrix& T,
                                        const Exponent& p, const Exponent& q,
                                        const Exponent& r, std::size_t rows,
                                        std::size_t cols, std::uint64_t seed);

// The six sufficient conditions for (p,q)-regularity to coincide with
// boundedness on L_{r1} -> L_{r2}: equal exponents pinched between q and p,
// both ends at 1 or at infinity, both below 2 with [q,p] meeting (r1, 2],
// both above 2 with [q,p] meeting [2, r2), or r2 <= 2 <= r1 with
// q <= 2 <= p. Requires q <= p.
bool mz_coincidence_predicted(const Exponent& p, const Exponent& q,
                              const Exponent& r1, const Exponent& r2);

// Evaluates mz_coincidence_predicted on each grid cell and measures the
// worst regularity-to-norm ratio over `samples` Gaussian operators on
// n-atom frames. Requires 2 <= n <= 4 and 1 <= samples <= 256.
std::vector<MZCell> mz_coincidence_sweep(const std::vector<MZQuery>& grid,
                                         std::size_t n, std::size_t samples,
                                         std::uint64_t seed);

}  // namespace pqreg
