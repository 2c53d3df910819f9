#pragma once

#include <optional>
#include <string>

#include "pqreg/operators.hpp"
#include "pqreg/regular.hpp"

namespace pqreg {

// One rank-one summand x (tensor) y.
struct TensorTerm {
  Vec x;
  Vec y;
};

// Element of left_space (tensor) right_space held as a finite sum of rank-one
// terms. The represented element is the canonical matrix
//   z[a][b] = sum_i x_i(a) y_i(b);
// norm bounds depend on the element only, with the stored terms serving as
// the initial representation for upper-bound searches. When the right factor
// plays a dual role (trace duality), right_space is the explicit dual space.
struct Tensor {
  FunctionSpace left_space;
  FunctionSpace right_space;
  std::vector<TensorTerm> terms;

  // Requires a nonempty term list (zero pairs are fine) with every x over the
  // left atoms and every y over the right atoms.
  Tensor(FunctionSpace left, FunctionSpace right,
         std::vector<TensorTerm> terms);
};

// Representation-invariant form: rows indexed by left atoms.
std::vector<Vec> canonical_matrix(const Tensor& z);

// Two-sided bounds with re-evaluable certificates.
//
// lower_certificate is an operator from the left space into the dual
// coordinates of the right space, rescaled so that its dual-class norm is
// certified <= 1; trace_pairing(certificate, z) equals lower up to roundoff.
// upper_certificate is the representation whose objective evaluates to upper;
// the block norms (r, h, k) store the splitting in upper_blocks and keep the
// concatenation in upper_certificate.
struct TensorNormBounds {
  std::string norm_name;
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  std::optional<OperatorMatrix> lower_certificate;
  std::optional<Tensor> upper_certificate;
  std::vector<Tensor> upper_blocks;
  double tolerance = 0.0;
};

// <A, z> = sum_i <A x_i, y_i> through the right-space integral pairing, for A
// mapping the left space into functionals over the right atoms.
double trace_pairing(const OperatorMatrix& A, const Tensor& z);

// Objective evaluators on the terms as given, used to re-check certificates.
double pi_objective(const Tensor& z);
double phi_objective(const Tensor& z, const Exponent& p, const Exponent& q);
double delta_objective(const Tensor& z, const Exponent& p, const Exponent& q);
double iota_objective(const Tensor& z, const Exponent& p, const Exponent& q);

// Injective norm eps(z) = sup { (x* tensor y*)(z) } over the dual unit balls.
// Exact (tolerance 0) for rank-one elements, for a polyhedral side (L_1 or
// L_inf, enumerable dual-ball vertices), and whenever the induced operator
// X* -> right has an exact norm; otherwise certified lower/upper bounds.
TensorNormBounds eps_norm(const Tensor& z, std::uint64_t seed);

// Projective norm pi(z) = inf { sum |x_i||y_i| } over representations.
// Upper from a representation search (rotation mixes, merges, elementary and
// factored starts); lower from the dual ball { A : |A: left -> right*| <= 1 }
// by cutting planes, each cut a rank-one constraint from an operator-norm
// maximizer, with the final pairing rescaled by a certified operator norm.
TensorNormBounds pi_bounds(const Tensor& z, std::uint64_t seed,
                           int cut_iters = 40);

enum class LapresteNorm { Gp, Dp, Wp };

// Chevet-Saphar norms: minimized representation objectives
//   g_p: (sum |x_i|^p)^{1/p} * weak-p' factor of (y_i),
//   d_p: weak-p' factor of (x_i) * (sum |y_i|^p)^{1/p},
//   w_p: weak-p factor of (x_i) * weak-p' factor of (y_i),
// where the weak factor is the operator norm of the coefficient map on the
// dual ball (certified upper bounds are used for the searched objective, so
// upper is a true bound). Lower comes from the injective-norm certificate,
// which lies in every one of these dual balls.
TensorNormBounds laprete_bounds(const Tensor& z, LapresteNorm norm_name,
                                const Exponent& p, std::uint64_t seed);

// Objective of the terms as given, used to re-check upper certificates.
double laprete_objective(const Tensor& z, LapresteNorm norm_name,
                         const Exponent& p);

// phi_{p,q} upper bound: searched infimum of
//   |(sum |x_i|^q)^{1/q}|_left * |(sum |y_i|^{p'})^{1/p'}|_right
// over representations. Requires 1 <= q <= p <= inf.
double phi_pq_upper(const Tensor& z, const Exponent& p, const Exponent& q);

// r_{p,q}(z) = inf { sum_j phi_{p,q}(z_j) : z = sum_j z_j }. Upper from a
// block-splitting search (greedy bisection plus term reassignment, at most
// `blocks` blocks); lower from trace duality: cutting planes over operators
// with certified rho_{p,q} <= 1, rescaled by the certified regularity bound.
TensorNormBounds r_pq_bounds(const Tensor& z, const Exponent& p,
                             const Exponent& q, std::uint64_t seed,
                             int blocks = 4);

enum class LatticeBlockNorm { H, K };

// h_{p,q} and k_{p,q}: as r_pq_bounds with block objectives delta_{p,q}
// (strong q-sum left, lattice p'-sum right) and iota_{p,q} (lattice q-sum
// left, strong p'-sum right); lower bounds pair against the unit balls of the
// matching operator convexity/concavity constants.
TensorNormBounds hk_pq_bounds(const Tensor& z, LatticeBlockNorm which,
                              const Exponent& p, const Exponent& q,
                              std::uint64_t seed);

struct TraceDualityRecord {
  double rho_est = 0.0;
  double dual_sup = 0.0;
  double gap = 0.0;
};

// Compares the certified regularity constant of T with the trace-dual side
// sup { <T, z> : r_{p,q} upper of z <= 1 } built from a bilinear ascent
// witness normalized by its searched r_{p,q} upper. Requires q <= p and the
// oracle size guard; rank_budget caps the witness tuple length.
TraceDualityRecord trace_duality_check(const OperatorMatrix& T,
                                       const Exponent& p, const Exponent& q,
                                       std::size_t rank_budget,
                                       std::uint64_t seed);

}  // namespace pqreg
