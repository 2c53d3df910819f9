#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "pqreg/exponent.hpp"
#include "pqreg/util.hpp"

namespace pqreg {

enum class NormKind { WeightedLr, Custom };

// User-supplied lattice norm. `evaluate` must be a lattice norm (positively
// homogeneous, triangle inequality, |x| <= |y| implies norm(x) <= norm(y));
// homogeneity and the triangle inequality are spot-checked at construction.
// `norming` optionally maps u to a functional x' with dual_norm(x') <= 1 and
// <x', u> = norm(u); when absent, dual quantities fall back to projected
// ascent.
struct CustomNorm {
  std::function<double(const Vec&)> evaluate;
  std::function<Vec(const Vec&)> norming;
};

// Finite measure space {1..atoms} with atom weights w_j > 0 plus a lattice
// norm on functions over it. Duality throughout uses the integral pairing
// <x', x> = sum_j w_j x'_j x_j.
class FunctionSpace {
 public:
  static FunctionSpace weighted_lr(Exponent r, Vec weights);
  static FunctionSpace custom(Vec weights, CustomNorm norm,
                              std::uint64_t check_seed = 7u);

  std::size_t atoms() const { return weights_.size(); }
  const Vec& weights() const { return weights_; }
  NormKind kind() const { return kind_; }
  const Exponent& lr_exponent() const;

  double norm(const Vec& x) const;

  // Dual norm sup{<x',x> : norm(x) <= 1}. Weighted L_r dualizes to weighted
  // L_r' with the same weights; Custom norms use projected ascent.
  double dual_norm(const Vec& xp) const;

  // x' with dual_norm(x') <= 1 attaining <x', u> = norm(u). Closed form for
  // weighted L_r (lexicographic-first tie break at r = inf); Custom norms use
  // their oracle or a finite-difference subgradient.
  Vec norming_functional(const Vec& u) const;

  // argmax{<xi, x> : norm(x) <= 1} for a dual direction xi.
  Vec dual_support_point(const Vec& xi) const;

  double integral(const Vec& f) const;
  double pairing(const Vec& xp, const Vec& x) const;

  FunctionSpace dual_space() const;  // weighted L_r only

  bool same_lattice(const FunctionSpace& o) const;

 private:
  FunctionSpace(Exponent r, Vec weights)
      : weights_(std::move(weights)), kind_(NormKind::WeightedLr), r_(r) {}
  FunctionSpace(Vec weights, CustomNorm norm)
      : weights_(std::move(weights)),
        kind_(NormKind::Custom),
        r_(Exponent(1.0)),
        custom_(std::make_shared<CustomNorm>(std::move(norm))) {}

  Vec weights_;
  NormKind kind_;
  Exponent r_;
  std::shared_ptr<CustomNorm> custom_;
};

// Norm of the p-th power space X_[p]: |u|_{X_[p]} = |u^{1/p}|_X^p for u >= 0.
// p must be finite; the result is a quasi-norm when p > r.
double power_space_norm(const FunctionSpace& space, const Exponent& p,
                        const Vec& u);

// AM-norm induced by a nonnegative x0 != 0:
//   |x| = |x0|_X * inf{lambda >= 0 : |x| <= lambda * x0 / |x0|_X},
// which is |x0|_X * max_{j in supp x0} |x_j| / x0_j, and +infinity when x is
// supported outside supp x0.
double am_norm_from_element(const FunctionSpace& space, const Vec& x0,
                            const Vec& x);

}  // namespace pqreg
