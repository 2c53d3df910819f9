#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pqreg/calculus.hpp"

using namespace pqreg;

namespace {

FunctionSpace lr(double r, Vec w) {
  return FunctionSpace::weighted_lr(Exponent(r), std::move(w));
}
FunctionSpace linf(Vec w) {
  return FunctionSpace::weighted_lr(Exponent::inf(), std::move(w));
}

// Scalar oracle for the mixed norm on a single atom.
double mixed_scalar(const std::vector<std::vector<double>>& vals, double r,
                    double q) {
  double acc = 0.0;
  for (const auto& row : vals) {
    double inner = 0.0;
    for (double v : row) inner += std::pow(std::abs(v), q);
    acc += std::pow(std::pow(inner, 1.0 / q), r);
  }
  return std::pow(acc, 1.0 / r);
}

}  // namespace

TEST_CASE("p_sum fixed values") {
  FunctionSpace X = lr(2.0, {1, 1});
  Vec s = p_sum(VectorTuple(X, {{3, 0}, {4, 0}}), Exponent(2.0));
  CHECK(s[0] == doctest::Approx(5.0));
  CHECK(s[1] == doctest::Approx(0.0));

  Vec m = p_sum(VectorTuple(X, {{1, -2}, {0, 3}}), Exponent::inf());
  CHECK(m[0] == doctest::Approx(1.0));
  CHECK(m[1] == doctest::Approx(3.0));
}

TEST_CASE("p_sum of n copies scales as n^{1/p}") {
  FunctionSpace X = lr(2.0, {1, 1, 1});
  Vec x{1.0, -2.0, 0.5};
  for (double p : {1.0, 1.5, 2.0, 5.0}) {
    for (std::size_t n : {1u, 2u, 7u}) {
      std::vector<Vec> mem(n, x);
      Vec s = p_sum(VectorTuple(X, mem), Exponent(p));
      double factor = std::pow(static_cast<double>(n), 1.0 / p);
      for (std::size_t d = 0; d < 3; ++d)
        CHECK(s[d] == doctest::Approx(factor * std::abs(x[d])).epsilon(1e-12));
    }
  }
}

TEST_CASE("p_sum accepts the quasi-norm range and empty tuples") {
  FunctionSpace X = lr(2.0, {1, 1});
  Vec s = p_sum(VectorTuple(X, {{1, 0}, {1, 0}}), Exponent(0.5));
  CHECK(s[0] == doctest::Approx(4.0));  // (1 + 1)^2
  Vec e = p_sum(VectorTuple(X, {}), Exponent(2.0));
  CHECK(e[0] == 0.0);
  CHECK(e[1] == 0.0);
}

TEST_CASE("psum_norm composes p_sum with the space norm") {
  FunctionSpace X = lr(1.0, {1, 1});
  CHECK(psum_norm(VectorTuple(X, {{3, 0}, {4, 0}}), Exponent(2.0)) ==
        doctest::Approx(5.0));
  CHECK(psum_norm(VectorTuple(X, {{1, -2}, {0, 3}}), Exponent::inf()) ==
        doctest::Approx(4.0));
}

TEST_CASE("mixed matrix norm against the scalar oracle") {
  FunctionSpace X1 = lr(1.0, {1.0});
  VectorMatrix ones(X1, {{{1.0}, {1.0}}, {{1.0}, {1.0}}});
  CHECK(mixed_matrix_norm(ones, Exponent(2.0), Exponent(2.0)) ==
        doctest::Approx(2.0));

  Rng rng(53u);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<std::vector<double>> vals(2, std::vector<double>(3));
    std::vector<std::vector<Vec>> rows(2, std::vector<Vec>(3));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 3; ++j) {
        vals[i][j] = rng.gaussian();
        rows[i][j] = Vec{vals[i][j]};
      }
    double r = 1.0 + 3.0 * rng.uniform();
    double q = 1.0 + 3.0 * rng.uniform();
    CHECK(mixed_matrix_norm(VectorMatrix(X1, rows), Exponent(r), Exponent(q)) ==
          doctest::Approx(mixed_scalar(vals, r, q)).epsilon(1e-12));
  }
}

TEST_CASE("mixed matrix norm single row and column reduce to p-sums") {
  FunctionSpace X = lr(2.0, {1.0, 0.5});
  std::vector<Vec> mem{{1, 2}, {-3, 1}, {0.5, 0}};
  VectorTuple t(X, mem);
  VectorMatrix row(X, {mem});
  std::vector<std::vector<Vec>> col_rows;
  for (const Vec& x : mem) col_rows.push_back({x});
  VectorMatrix col(X, col_rows);
  for (double q : {1.0, 2.0, 3.0}) {
    CHECK(mixed_matrix_norm(row, Exponent(7.0), Exponent(q)) ==
          doctest::Approx(psum_norm(t, Exponent(q))).epsilon(1e-12));
    CHECK(mixed_matrix_norm(col, Exponent(q), Exponent(7.0)) ==
          doctest::Approx(psum_norm(t, Exponent(q))).epsilon(1e-12));
  }
  CHECK(mixed_matrix_norm(row, Exponent(2.0), Exponent::inf()) ==
        doctest::Approx(psum_norm(t, Exponent::inf())).epsilon(1e-12));
}

TEST_CASE("pointwise product multiplies memberwise") {
  FunctionSpace X = lr(2.0, {1, 1});
  VectorTuple p = pointwise_product(VectorTuple(X, {{1, 2}, {3, -1}}),
                                    VectorTuple(X, {{2, 0.5}, {-1, 4}}));
  CHECK(p.members[0][0] == doctest::Approx(2.0));
  CHECK(p.members[0][1] == doctest::Approx(1.0));
  CHECK(p.members[1][0] == doctest::Approx(-3.0));
  CHECK(p.members[1][1] == doctest::Approx(-4.0));
  CHECK_THROWS_AS(pointwise_product(VectorTuple(X, {{1, 2}}),
                                    VectorTuple(X, {{1, 2}, {3, 4}})),
                  std::invalid_argument);
}

TEST_CASE("holder equality instance") {
  FunctionSpace X = lr(2.0, {1, 1});
  VectorTuple phi(X, {{1, 1}});
  VectorTuple psi(X, {{1, 1}});
  HolderCheck chk =
      holder_check(X, phi, psi, Exponent(1.0), Exponent(2.0), Exponent(2.0));
  CHECK(chk.lhs == doctest::Approx(2.0));
  CHECK(chk.rhs == doctest::Approx(2.0));
  CHECK(chk.ok);
}

TEST_CASE("holder inequality holds on random instances") {
  struct Triple {
    double r, p, s;  // 0 encodes inf
  };
  const Triple triples[] = {{1, 2, 2}, {1, 1, 0}, {2, 4, 4}, {1, 3, 1.5}};
  Rng rng(59u);
  for (const Triple& tr : triples) {
    for (int rep = 0; rep < 250; ++rep) {
      std::size_t atoms = 1 + rng.index(4);
      std::size_t n = 1 + rng.index(4);
      Vec w(atoms);
      for (double& v : w) v = 0.25 + 2.0 * rng.uniform();
      double rx = 1.0 + 3.0 * rng.uniform();
      FunctionSpace X = lr(rx, w);
      VectorTuple phi = gaussian_tuple(X, n, rng);
      VectorTuple psi = gaussian_tuple(X, n, rng);
      Exponent p = tr.p == 0 ? Exponent::inf() : Exponent(tr.p);
      Exponent s = tr.s == 0 ? Exponent::inf() : Exponent(tr.s);
      HolderCheck chk = holder_check(X, phi, psi, Exponent(tr.r), p, s);
      CHECK(chk.ok);
    }
  }
}

TEST_CASE("holder check rejects inconsistent exponents") {
  FunctionSpace X = lr(2.0, {1, 1});
  VectorTuple t(X, {{1, 1}});
  CHECK_THROWS_AS(
      holder_check(X, t, t, Exponent(1.0), Exponent(2.0), Exponent(3.0)),
      std::invalid_argument);
  CHECK_THROWS_AS(
      holder_check(X, t, t, Exponent::inf(), Exponent::inf(), Exponent::inf()),
      std::invalid_argument);
}

TEST_CASE("dual witness fixed instance") {
  FunctionSpace X = lr(1.0, {1, 1});
  VectorTuple t(X, {{1, 0}, {1, 0}});
  DualWitness dw =
      dual_witness(X, t, Exponent(2.0), Exponent(1.0), Exponent(2.0));
  const double inv_rt2 = 1.0 / std::sqrt(2.0);
  CHECK(dw.psum_value == doctest::Approx(std::sqrt(2.0)));
  CHECK(dw.witness.members[0][0] == doctest::Approx(inv_rt2));
  CHECK(dw.witness.members[1][0] == doctest::Approx(inv_rt2));
  CHECK(dw.witness.members[0][1] == doctest::Approx(0.0));
  CHECK(dw.pairing_value == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(dw.dual_s_norm == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dual witness attains the p-sum norm with unit dual s-norm") {
  struct Triple {
    double p, r, s;  // 0 encodes inf
  };
  Rng rng(61u);
  for (int rep = 0; rep < 200; ++rep) {
    std::size_t atoms = 1 + rng.index(4);
    std::size_t n = 1 + rng.index(4);
    Vec w(atoms);
    for (double& v : w) v = 0.25 + 2.0 * rng.uniform();
    double rx = 1.0 + 3.0 * rng.uniform();
    FunctionSpace X = lr(rx, w);
    VectorTuple t = gaussian_tuple(X, n, rng);
    double pv = 1.0 + 4.0 * rng.uniform();
    double pc = pv / (pv - 1.0);
    const Triple triples[] = {
        {2, 1, 2}, {pv, 1, pc}, {4, 2, 4}, {0, 2, 2}, {0, 1, 1}};
    for (const Triple& tr : triples) {
      Exponent p = tr.p == 0 ? Exponent::inf() : Exponent(tr.p);
      DualWitness dw = dual_witness(X, t, p, Exponent(tr.r), Exponent(tr.s));
      CHECK(dw.pairing_value ==
            doctest::Approx(dw.psum_value).epsilon(1e-9));
      CHECK(dw.dual_s_norm <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("sup representation gaps") {
  FunctionSpace X = lr(2.0, {1, 1, 1});
  Rng rng(67u);

  // Single member: the axis directions are exact.
  VectorTuple one = gaussian_tuple(X, 1, rng);
  CHECK(sup_representation_check(one, Exponent(2.0), 8).gap <= 1e-12);

  // p = 1: sign patterns are exact for any member count <= 16.
  VectorTuple t3 = gaussian_tuple(X, 3, rng);
  CHECK(sup_representation_check(t3, Exponent(1.0), 8).gap <= 1e-12);

  // p = 2, two members: a 360-point angle grid is dense enough for 1e-4.
  VectorTuple t2 = gaussian_tuple(X, 2, rng);
  SupRepresentationCheck chk = sup_representation_check(t2, Exponent(2.0), 360);
  CHECK(chk.gap >= 0.0);
  CHECK(chk.gap <= 1e-4 * vec_linf(chk.exact));
}

TEST_CASE("gaussian tuple has the requested shape and is seed-deterministic") {
  FunctionSpace X = lr(2.0, {1, 1});
  Rng a(5u), b(5u);
  VectorTuple ta = gaussian_tuple(X, 3, a);
  VectorTuple tb = gaussian_tuple(X, 3, b);
  CHECK(ta.size() == 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t d = 0; d < 2; ++d)
      CHECK(ta.members[i][d] == tb.members[i][d]);
}

TEST_CASE("vector matrix validates rectangular shape") {
  FunctionSpace X = lr(2.0, {1, 1});
  CHECK_THROWS_AS(VectorMatrix(X, {{{1, 2}, {1, 2}}, {{1, 2}}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(VectorMatrix(X, {{{1, 2, 3}}}), std::invalid_argument);
}
