#pragma once

#include <vector>

#include "pqreg/spaces.hpp"

namespace pqreg {

// Finite tuple (x_1, ..., x_n) of vectors over one space's atoms. Members may
// be the zero vector; the empty tuple is allowed and all p-sums of it vanish.
struct VectorTuple {
  FunctionSpace space;
  std::vector<Vec> members;

  VectorTuple(FunctionSpace s, std::vector<Vec> m);
  std::size_t size() const { return members.size(); }
};

// Rectangular tuple x_{i,j} used by the matrix-form regularity inequality.
struct VectorMatrix {
  FunctionSpace space;
  std::vector<std::vector<Vec>> rows;  // rows[i][j] is a vector over atoms

  VectorMatrix(FunctionSpace s, std::vector<std::vector<Vec>> r);
  std::size_t row_count() const { return rows.size(); }
  std::size_t col_count() const { return rows.empty() ? 0 : rows[0].size(); }
};

// Coordinatewise (sum_i |x_i|^p)^{1/p}; lattice sup at p = inf. Exponents in
// (0,1) are accepted (quasi-norm regime).
Vec p_sum(const VectorTuple& t, const Exponent& p);

// |(sum_i |x_i|^p)^{1/p}|_X.
double psum_norm(const VectorTuple& t, const Exponent& p);

// |(sum_i (sum_j |x_{i,j}|^q)^{r/q})^{1/r}|_X, computed coordinatewise with
// max replacing the sum at infinite exponents.
double mixed_matrix_norm(const VectorMatrix& m, const Exponent& outer_r,
                         const Exponent& inner_q);

// Memberwise pointwise products phi_i * psi_i; the result lives on the atoms
// of phi's space (the integrable-product role).
VectorTuple pointwise_product(const VectorTuple& phi, const VectorTuple& psi);

struct HolderCheck {
  double lhs;    // integral of the r-sum of the products
  double rhs;    // p-sum norm in X times s-sum dual norm
  double slack;  // rhs - lhs
  bool ok;       // slack >= -tolerance * max(rhs, 1)
  double tolerance;
};

// Checks the generalized Holder inequality
//   int (sum |phi_i psi_i|^r)^{1/r} dmu <= |(sum|phi_i|^p)^{1/p}|_X *
//                                          |(sum|psi_i|^s)^{1/s}|_{X'}
// for 1/r = 1/p + 1/s with r >= 1.
HolderCheck holder_check(const FunctionSpace& X, const VectorTuple& phi,
                         const VectorTuple& psi, const Exponent& r,
                         const Exponent& p, const Exponent& s);

struct DualWitness {
  VectorTuple witness;   // functionals x'_i over the same atoms
  Vec x_prime;           // norming functional of p_sum(t, p)
  double psum_value;     // |p_sum(t,p)|_X
  double pairing_value;  // int (sum |x_i x'_i|^r)^{1/r} dmu
  double dual_s_norm;    // |(sum |x'_i|^s)^{1/s}|_{X'}
};

// Explicit equality witness for the p-sum norm: functionals x'_i with
//   (sum_i |x'_i|^s)^{1/s} = x' on the support of the tuple, and
//   int (sum_i |x_i x'_i|^r)^{1/r} dmu = |p_sum(t,p)|_X,
// where 1/r = 1/p + 1/s and x' norms p_sum(t,p). Members vanishing on an
// atom give witness zeros there (0/0 = 0). At p = inf the witness
// concentrates on the lexicographically first pointwise maximizer.
DualWitness dual_witness(const FunctionSpace& X, const VectorTuple& t,
                         const Exponent& p, const Exponent& r,
                         const Exponent& s);

struct SupRepresentationCheck {
  Vec exact;       // p_sum(t, p)
  Vec grid_sup;    // coordinatewise sup of sum_i a_i x_i over grid directions
  double gap;      // max over atoms of exact - grid_sup (always >= 0)
  std::size_t directions;
};

// Compares the pointwise p-sum with its representation as a sup of linear
// combinations over (a grid of) the l_{p'} unit sphere.
SupRepresentationCheck sup_representation_check(const VectorTuple& t,
                                                const Exponent& p,
                                                std::size_t grid_size);

VectorTuple gaussian_tuple(const FunctionSpace& space, std::size_t n,
                           Rng& rng);

}  // namespace pqreg
