#pragma once

#include "pqreg/estimate.hpp"
#include "pqreg/operators.hpp"

namespace pqreg {

// Exponent pair for the square-function inequality
//   |(sum_i |Tx_i|^p)^{1/p}|_Y <= K |(sum_i |x_i|^q)^{1/q}|_X
// over finite tuples; the least such K is the (p,q)-regularity constant of T.
// Infinite exponents use the lattice supremum, never a large-p surrogate.
struct RegularityParams {
  Exponent p;
  Exponent q;
};

// Working upper bound for the real Grothendieck constant, used to convert an
// operator-norm bound into a (2,2)-regularity bound. A configuration value,
// not a sharpness claim.
inline constexpr double kGrothendieckUpper = 1.78221;

// Witness-backed lower bound for the (p,q)-regularity constant at a fixed
// tuple size, by alternating ascent: linearize the numerator through a
// norming functional of the codomain and pointwise l_p superdifferentials,
// then take the exact lattice-ball maximizer of the linearization. Each step
// is provably nondecreasing; iteration stops at relative change below 1e-10
// or 10^4 steps. Deterministic in (seed, restarts). The upper field carries
// the least applicable analytic bound: exact value for diagonal operators on
// a common lattice, the exact operator norm in the weighted-L_r regime
// q <= r <= t <= p, the modulus operator norm, or the Grothendieck multiple
// of an operator-norm bound when p >= 2 >= q.
// pre: 1 <= q <= p, tuple_size >= 1.
NormEstimate rho_lower_bound(const OperatorMatrix& T,
                             const RegularityParams& params,
                             std::size_t tuple_size, std::uint64_t seed,
                             int restarts = 32);

// Certified two-sided enclosure of the tuple-size-restricted regularity
// constant. Exact (width ~0) on the closed-form families: single-member
// tuples with an exact operator norm, diagonal operators on a common
// lattice, the weighted-L_r regime q <= r <= t <= p, and polyhedral
// constraint balls (q in {1,inf} with an L_1 or L_inf domain), where the
// convex objective is maximized over explicitly enumerated extreme points.
// Otherwise branch-and-bound with certified Lipschitz bounds refines an
// interval until its width reaches `grid` or the node budget runs out; the
// achieved width is reported honestly (upper - lower, also in tolerance).
// On the diagonal and weighted-L_r paths with q <= p the value also equals
// the unrestricted constant; elsewhere the enclosure is for the fixed size.
// pre: tuple_size >= 1, p, q >= 1, domain atoms * tuple_size <= 12.
NormEstimate rho_oracle(const OperatorMatrix& T, const RegularityParams& params,
                        std::size_t tuple_size, double grid);

// Value of the constant-tuple witness (x, ..., x) of length n when p < q:
//   n^{1/p - 1/q} |Tx|_Y / |x|_X,
// the growth certificate showing no nonzero operator is (p,q)-regular.
// pre: p < q, n >= 1, x != 0, Tx != 0.
double rho_growth_witness(const OperatorMatrix& T,
                          const RegularityParams& params, const Vec& x,
                          std::size_t n);

// Lower estimate of the (p,q)-concavity constant: the least K with
//   (sum_i |Tx_i|_Y^p)^{1/p} <= K |(sum_i |x_i|^q)^{1/q}|_X.
// Same ascent scheme with the numerator linearized through per-member
// norming functionals. Upper bound via regularity when the codomain is a
// weighted L_t with t <= p (then L_t is p-concave with constant one).
NormEstimate concavity_norm(const OperatorMatrix& T,
                            const RegularityParams& params,
                            std::size_t tuple_size, std::uint64_t seed,
                            int restarts = 32);

// Lower estimate of the (p,q)-convexity constant: the least K with
//   |(sum_i |Tx_i|^p)^{1/p}|_Y <= K (sum_i |x_i|_X^q)^{1/q}.
// Ascent over the strong q-ball. Upper bound via regularity when the domain
// is a weighted L_r with r <= q (then L_r is q-convex with constant one).
NormEstimate convexity_norm(const OperatorMatrix& T,
                            const RegularityParams& params,
                            std::size_t tuple_size, std::uint64_t seed,
                            int restarts = 32);

// Norm estimate for the bilinear form P_T(x, y') = Tx * y' (pointwise
// product in the codomain), measured as
//   int (sum_i |Tx_i y'_i|^r)^{1/r} dnu
// over the lattice q-ball of the domain and the lattice s-ball of the
// codomain dual. For 1/r = 1/p + 1/s this estimates the same quantity as
// the (p,q)-regularity constant; the elementary Holder direction makes
// every analytic (p,q) upper bound valid here, and those are attached.
// lower_witness holds the domain tuple, dual_witness the functional tuple.
// pre: r >= 1, 1/r >= 1/s, q >= 1, and the derived p satisfies q <= p.
NormEstimate bilinear_PT_norm(const OperatorMatrix& T, const Exponent& r,
                              const Exponent& q, const Exponent& s,
                              std::size_t tuple_size, std::uint64_t seed,
                              int restarts = 32);

}  // namespace pqreg
