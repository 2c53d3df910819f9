#pragma once

#include <optional>

#include "pqreg/calculus.hpp"

namespace pqreg {

// Dense linear operator between two function spaces, stored row-major:
// (Tx)(w) = sum_d entry(w, d) x_d.
class OperatorMatrix {
 public:
  OperatorMatrix(FunctionSpace domain, FunctionSpace codomain,
                 std::vector<Vec> rows);

  static OperatorMatrix identity(const FunctionSpace& space);

  const FunctionSpace& domain() const { return domain_; }
  const FunctionSpace& codomain() const { return codomain_; }
  std::size_t rows() const { return rows_.size(); }
  std::size_t cols() const { return domain_.atoms(); }
  double entry(std::size_t r, std::size_t c) const { return rows_[r][c]; }
  double& entry(std::size_t r, std::size_t c) { return rows_[r][c]; }
  const std::vector<Vec>& row_data() const { return rows_; }

  Vec apply(const Vec& x) const;
  VectorTuple apply(const VectorTuple& t) const;
  Vec column(std::size_t d) const;

  bool entrywise_nonneg() const;
  bool is_diagonal() const;
  OperatorMatrix modulus() const;  // entrywise absolute value
  double max_abs_diagonal() const;

 private:
  FunctionSpace domain_;
  FunctionSpace codomain_;
  std::vector<Vec> rows_;
};

// Exact operator norm when a closed form applies: diagonal operators between
// identical lattices, L_1 domains (column maxima), L_inf codomains (row dual
// norms), L_2 -> L_2 (weighted largest singular value), small L_inf domains
// (sign-vector enumeration). Empty when no exact path applies.
std::optional<double> operator_norm_exact(const OperatorMatrix& T);

// Certified upper bound on the operator norm: the exact value when available,
// else a weighted singular-value bound composed with the embedding constants
// between the endpoint norms and weighted L_2.
double operator_norm_upper(const OperatorMatrix& T);

// Best single-vector ratio |Tx|_Y / |x|_X found by seeded ascent, merged with
// the exact value when one exists. Returns the value and a witness vector.
std::pair<double, Vec> operator_norm_estimate(const OperatorMatrix& T,
                                              std::uint64_t seed,
                                              int restarts = 16);

}  // namespace pqreg
