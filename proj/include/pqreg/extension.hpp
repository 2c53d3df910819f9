#pragma once

#include "pqreg/estimate.hpp"
#include "pqreg/operators.hpp"
#include "pqreg/regular.hpp"

namespace pqreg {

// Closed subspace of a function space, presented by a linearly independent
// spanning list. Independence is verified at construction (Gram rank check),
// so dimension() always equals basis.size().
struct Subspace {
  FunctionSpace ambient;
  std::vector<Vec> basis;

  Subspace(FunctionSpace ambient_space, std::vector<Vec> basis_vectors);
  std::size_t dimension() const { return basis.size(); }
};

// Element of the slice l_{q'}^n (x) X written through its component list:
// the element sum_k e_k (x) f_k is stored as the f_k themselves. Components
// may vanish; they are dropped before any optimization.
struct ZElement {
  FunctionSpace X;
  std::vector<Vec> components;

  ZElement(FunctionSpace space, std::vector<Vec> comps);
  std::size_t n() const { return components.size(); }
};

// Dyadic block structure: 2^level blocks over an atomic interval, with the
// exponent the block operators act in.
struct DyadicLevel {
  int level;
  Exponent q;
};

// Representation norm inf |a|_{q'} * |(sum_k |f_k/a_k|^q)^{1/q}|_X over
// positive scalings a of the stored components. The objective is convex in
// log a; the upper bound is its coordinate-descent minimum (tolerance 1e-10)
// and is exact for single-component, zero, and q = 1 instances. The lower
// bound pairs v against test operators u : X -> l_q^n whose (inf,q)-regular
// constant is overestimated by a certified bound (q-sum of row dual norms,
// or the modulus operator norm), so it is a true lower bound of the dual
// quantity. The best test operator, normalized by its certificate, is stored
// row-by-row in lower_witness; re-evaluating the plain pairing
// sum_k <row_k, f_k> reproduces `lower`.
// pre: q >= 1. Lower-bound candidates require a weighted-L_r lattice; on a
// custom lattice only the largest component norm is claimed.
NormEstimate z_norm(const ZElement& v, const Exponent& q, std::uint64_t seed);

// The same quantity through the product-decomposition formula
// inf (sum_k c_k)^{1/q'} * |(sum_k |f_k|^q c_k^{-q/q'})^{1/q}|_X with
// constant first factors c_k > 0 and minimal pointwise second factors, the
// endpoint cases q = 1 and q = inf taken as the continuity limits of the
// parameterization (at q = 1 the value collapses to |sum|f_k||_X). Solved by
// ternary-search coordinate descent in log c, an independent scheme from
// z_norm, so agreement between the two is a meaningful cross-check.
// pre: q >= 1.
NormEstimate calderon_product_norm(const ZElement& v, const Exponent& q);

// Minimal-constant extension of T : span(basis) -> l_q^n to the whole
// ambient lattice, for the (inf,q)-regular constant. images[j] is T applied
// to basis[j]; the codomain is l_q^n with unit weights, n = images[0].size().
// Extensions are parameterized as T0 + D with T0 the Gram-projection
// interpolant and D ranging over matrices vanishing on the subspace; the
// constant is convex in D and is minimized by subgradient steps on witness
// tuples harvested from per-iterate certification, kept in a working bundle.
// Full-span subspaces short-circuit to exact interpolation and zero images
// to the zero operator. The result agrees with the data on the basis to
// machine precision (a final Gram correction re-imposes it).
// pre: ambient is weighted L_r with r >= q (q-convexity with constant one);
// images match the basis count and share one length.
OperatorMatrix hahn_banach_extend(const Subspace& domain,
                                  const std::vector<Vec>& images,
                                  const Exponent& q, std::uint64_t seed);

// Witness-backed lower bound of the (inf,q)-regular constant of an operator
// given only on a subspace: sup |max_i |T x_i||_cod over tuples x_i from
// span(basis) with |(sum_i |x_i|^q)^{1/q}|_X <= 1. Coordinate ascent over
// coefficient tuples with golden-section line searches and seeded restarts;
// exact (and certified in upper) for one-dimensional subspaces, where the
// value is |T b|_cod / |b|_X. lower_witness holds the ambient tuple,
// dual_witness the coefficient tuple over a unit-weight l_q frame.
// pre: tuple_size >= 1; images match the basis count and the codomain atoms.
NormEstimate rho_restricted_lower(const Subspace& domain,
                                  const std::vector<Vec>& images,
                                  const FunctionSpace& codomain,
                                  const Exponent& q, std::size_t tuple_size,
                                  std::uint64_t seed, int restarts = 16);

// Block-average operator from the uniform L_q frame on atom_count atoms onto
// l_q^{2^level} with unit weights: row i integrates block i and scales by
// 2^{level/q'}. Positive, and a contraction (norm exactly one).
// pre: level >= 0 and 2^level divides atom_count.
OperatorMatrix dyadic_Pn(const DyadicLevel& level, std::size_t atom_count);

// Block-indicator embedding l_q^{2^level} -> uniform L_q frame: e_i maps to
// 2^{level/q} times the indicator of block i. Positive, an exact isometry,
// and a right inverse of dyadic_Pn (P J = Id in exact arithmetic).
// pre: level >= 0 and 2^level divides atom_count.
OperatorMatrix dyadic_Jn(const DyadicLevel& level, std::size_t atom_count);

// Norm-preserving extension through the dyadic ladder: compresses the data
// with the block average P, extends the compressed operator from span(basis)
// to the whole domain with hahn_banach_extend, and re-embeds with J. The
// codomain atom count M is images[0].size(); when M = 2^level the ladder is
// a bijection, the result agrees with the data on the subspace exactly, and
// its (inf,q)-regular constant does not exceed the restriction's (up to the
// solver tolerance). For M > 2^level the result extends the block-averaged
// data instead.
// pre: ambient is a weighted L_q lattice; level.q equals the ambient
// exponent; 2^level divides M.
OperatorMatrix extend_operator_Lq(const Subspace& x0,
                                  const std::vector<Vec>& images,
                                  const DyadicLevel& level,
                                  std::uint64_t seed);

}  // namespace pqreg
