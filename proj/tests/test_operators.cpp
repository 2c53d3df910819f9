#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pqreg/operators.hpp"
#include "pqreg/optim.hpp"

using namespace pqreg;

namespace {

FunctionSpace lr(double r, Vec w) {
  return FunctionSpace::weighted_lr(Exponent(r), std::move(w));
}
FunctionSpace linf(Vec w) {
  return FunctionSpace::weighted_lr(Exponent::inf(), std::move(w));
}

OperatorMatrix gaussian_op(const FunctionSpace& X, const FunctionSpace& Y,
                           Rng& rng) {
  std::vector<Vec> rows(Y.atoms(), Vec(X.atoms()));
  for (Vec& r : rows)
    for (double& v : r) v = rng.gaussian();
  return OperatorMatrix(X, Y, std::move(rows));
}

// Best ratio |Tx|_Y / |x|_X over axis vectors, sign vertices, and random
// probes: a sound lower oracle that is sharp for polyhedral domains.
double sampled_ratio(const OperatorMatrix& T, std::uint64_t seed, int trials) {
  const std::size_t n = T.cols();
  double best = 0.0;
  auto consider = [&](const Vec& x) {
    double nx = T.domain().norm(x);
    if (nx > 0.0)
      best = std::max(best, T.codomain().norm(T.apply(x)) / nx);
  };
  for (std::size_t j = 0; j < n; ++j) {
    Vec x(n, 0.0);
    x[j] = 1.0;
    consider(x);
  }
  for (std::size_t mask = 0; mask < (std::size_t(1) << n); ++mask) {
    Vec x(n);
    for (std::size_t j = 0; j < n; ++j) x[j] = (mask >> j) & 1 ? -1.0 : 1.0;
    consider(x);
  }
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    Vec x(n);
    for (double& v : x) v = rng.gaussian();
    consider(x);
  }
  return best;
}

}  // namespace

TEST_CASE("operator application and structure queries") {
  FunctionSpace X = lr(2.0, {1, 1});
  OperatorMatrix T(X, X, {{1, 2}, {3, 4}});
  Vec y = T.apply({1.0, 1.0});
  CHECK(y[0] == doctest::Approx(3.0));
  CHECK(y[1] == doctest::Approx(7.0));
  CHECK(T.column(0)[0] == 1.0);
  CHECK(T.column(0)[1] == 3.0);
  CHECK(!T.is_diagonal());
  CHECK(T.entrywise_nonneg());
  OperatorMatrix S(X, X, {{1, -2}, {0, 3}});
  CHECK(!S.entrywise_nonneg());
  CHECK(S.modulus().entry(0, 1) == 2.0);
  CHECK(OperatorMatrix::identity(X).is_diagonal());
  CHECK(OperatorMatrix::identity(X).max_abs_diagonal() == 1.0);
  CHECK_THROWS_AS(OperatorMatrix(X, X, {{1, 2}}), std::invalid_argument);
  CHECK_THROWS_AS(T.apply(Vec{1.0}), std::invalid_argument);
}

TEST_CASE("exact norm: diagonal operators between identical lattices") {
  FunctionSpace X = lr(2.0, {1, 2});
  OperatorMatrix D(X, X, {{2, 0}, {0, -3}});
  auto e = operator_norm_exact(D);
  REQUIRE(e.has_value());
  CHECK(*e == doctest::Approx(3.0));
}

TEST_CASE("exact norm: L_1 domain is the best rescaled column") {
  OperatorMatrix T(lr(1.0, {1, 1}), lr(2.0, {1, 1}), {{1, 2}, {3, 4}});
  auto e = operator_norm_exact(T);
  REQUIRE(e.has_value());
  CHECK(*e == doctest::Approx(std::sqrt(20.0)));

  OperatorMatrix Tw(lr(1.0, {2, 1}), lr(2.0, {1, 1}), {{1, 2}, {3, 4}});
  auto ew = operator_norm_exact(Tw);
  REQUIRE(ew.has_value());
  CHECK(*ew == doctest::Approx(std::sqrt(20.0)));
}

TEST_CASE("exact norm: L_inf codomain is the best row dual norm") {
  OperatorMatrix T(lr(2.0, {1, 1}), linf({1, 1}), {{1, 2}, {3, 4}});
  auto e = operator_norm_exact(T);
  REQUIRE(e.has_value());
  CHECK(*e == doctest::Approx(5.0));
}

TEST_CASE("exact norm: L_2 to L_2 is the weighted largest singular value") {
  OperatorMatrix T(lr(2.0, {1, 1}), lr(2.0, {1, 1}), {{3, 0}, {4, 5}});
  auto e = operator_norm_exact(T);
  REQUIRE(e.has_value());
  CHECK(*e == doctest::Approx(std::sqrt(45.0)));
}

TEST_CASE("exact norm: small L_inf domain by sign enumeration") {
  OperatorMatrix H(linf({1, 1}), lr(1.0, {1, 1}), {{1, 1}, {1, -1}});
  auto e = operator_norm_exact(H);
  REQUIRE(e.has_value());
  CHECK(*e == doctest::Approx(2.0));
}

TEST_CASE("exact norm declines when no closed form applies") {
  OperatorMatrix T(lr(3.0, {1, 1}), lr(4.0, {1, 1}), {{1, 2}, {3, 4}});
  CHECK(!operator_norm_exact(T).has_value());
}

TEST_CASE("exact norms dominate sampled ratios and are attained") {
  Rng rng(71u);
  struct Case {
    FunctionSpace X, Y;
  };
  std::vector<Case> cases;
  cases.push_back({lr(1.0, {1.5, 0.5, 1.0}), lr(2.5, {1, 1, 2})});
  cases.push_back({lr(2.0, {1, 2}), linf({0.5, 1})});
  cases.push_back({lr(2.0, {1, 0.5, 2}), lr(2.0, {2, 1, 1})});
  cases.push_back({linf({1, 1, 1}), lr(1.5, {1, 2, 0.5})});
  for (auto& c : cases) {
    for (int rep = 0; rep < 5; ++rep) {
      OperatorMatrix T = gaussian_op(c.X, c.Y, rng);
      auto e = operator_norm_exact(T);
      REQUIRE(e.has_value());
      double lo = sampled_ratio(T, 100 + rep, 4000);
      CHECK(lo <= *e * (1.0 + 1e-9));
      CHECK(lo >= *e * 0.90);
    }
  }
}

TEST_CASE("upper bound is sound on spaces without a closed form") {
  Rng rng(73u);
  FunctionSpace X = lr(4.0, {1, 0.5, 2});
  FunctionSpace Y = lr(3.0, {1, 1, 1});
  for (int rep = 0; rep < 10; ++rep) {
    OperatorMatrix T = gaussian_op(X, Y, rng);
    double up = operator_norm_upper(T);
    CHECK(std::isfinite(up));
    CHECK(sampled_ratio(T, 200 + rep, 4000) <= up * (1.0 + 1e-9));
  }
}

TEST_CASE("estimate merges with exact values") {
  Rng rng(79u);
  FunctionSpace X = lr(2.0, {1, 1, 1});
  for (int rep = 0; rep < 5; ++rep) {
    OperatorMatrix T = gaussian_op(X, X, rng);
    auto [est, wit] = operator_norm_estimate(T, 17u + rep);
    auto e = operator_norm_exact(T);
    REQUIRE(e.has_value());
    CHECK(est == doctest::Approx(*e).epsilon(1e-9));
    double nx = X.norm(wit);
    if (nx > 0.0) CHECK(X.norm(T.apply(wit)) / nx <= est * (1.0 + 1e-9));
  }
}

TEST_CASE("estimate beats sampling and respects the upper bound") {
  Rng rng(83u);
  FunctionSpace X = lr(4.0, {1, 1});
  FunctionSpace Y = lr(3.0, {0.5, 2});
  for (int rep = 0; rep < 5; ++rep) {
    OperatorMatrix T = gaussian_op(X, Y, rng);
    auto [est, wit] = operator_norm_estimate(T, 31u + rep);
    CHECK(sampled_ratio(T, 300 + rep, 4000) <= est * (1.0 + 1e-6));
    CHECK(est <= operator_norm_upper(T) * (1.0 + 1e-9));
  }
}

TEST_CASE("estimate is scale equivariant") {
  Rng rng(89u);
  FunctionSpace X = lr(3.0, {1, 1});
  OperatorMatrix T = gaussian_op(X, X, rng);
  OperatorMatrix cT = T;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) cT.entry(i, j) *= 2.5;
  double a = operator_norm_estimate(T, 7u).first;
  double b = operator_norm_estimate(cT, 7u).first;
  CHECK(b == doctest::Approx(2.5 * a).epsilon(1e-12));
}

TEST_CASE("lq dual map fixed values and tie break") {
  auto [v2, u2] = lq_dual_map(Exponent(2.0), {3, 4});
  CHECK(v2 == doctest::Approx(5.0));
  CHECK(u2[0] == doctest::Approx(0.6));
  CHECK(u2[1] == doctest::Approx(0.8));

  auto [v1, u1] = lq_dual_map(Exponent(1.0), {3, -4});
  CHECK(v1 == doctest::Approx(4.0));
  CHECK(u1[0] == 0.0);
  CHECK(u1[1] == -1.0);

  auto [vi, ui] = lq_dual_map(Exponent::inf(), {1, -2});
  CHECK(vi == doctest::Approx(3.0));
  CHECK(ui[0] == 1.0);
  CHECK(ui[1] == -1.0);

  auto [vt, ut] = lq_dual_map(Exponent(1.0), {2, 2});
  CHECK(vt == doctest::Approx(2.0));
  CHECK(ut[0] == 1.0);  // lexicographic tie break
  CHECK(ut[1] == 0.0);
}

TEST_CASE("lq dual map attains the conjugate norm on the unit ball") {
  Rng rng(97u);
  const double qs[] = {1.0, 1.5, 2.0, 3.0, 0.0};
  for (double qv : qs) {
    Exponent q = qv == 0.0 ? Exponent::inf() : Exponent(qv);
    for (int rep = 0; rep < 20; ++rep) {
      std::size_t n = 1 + rng.index(5);
      Vec c(n);
      for (double& v : c) v = rng.gaussian();
      auto [val, u] = lq_dual_map(q, c);
      // |u|_q <= 1.
      double nu = 0.0;
      if (q.is_inf()) {
        nu = vec_linf(u);
      } else {
        for (double x : u) nu += std::pow(std::abs(x), q.value());
        nu = std::pow(nu, q.inverse());
      }
      CHECK(nu <= 1.0 + 1e-12);
      CHECK(dot(c, u) == doctest::Approx(val).epsilon(1e-12));
      // val is the conjugate norm: it dominates <c, x>/|x|_q on samples.
      for (int t = 0; t < 50; ++t) {
        Vec x(n);
        for (double& v : x) v = rng.gaussian();
        double nx = 0.0;
        if (q.is_inf()) {
          nx = vec_linf(x);
        } else {
          for (double xv : x) nx += std::pow(std::abs(xv), q.value());
          nx = std::pow(nx, q.inverse());
        }
        if (nx > 0.0) CHECK(std::abs(dot(c, x)) / nx <= val * (1 + 1e-9));
      }
    }
  }
}

TEST_CASE("lp superdifferential pairs to the l_p norm") {
  Rng rng(101u);
  const double ps[] = {1.0, 2.0, 2.5, 0.0};
  for (double pv : ps) {
    Exponent p = pv == 0.0 ? Exponent::inf() : Exponent(pv);
    Exponent pc = conjugate_exponent(p);
    for (int rep = 0; rep < 20; ++rep) {
      std::size_t n = 1 + rng.index(5);
      Vec v(n);
      for (double& x : v) x = rng.gaussian();
      Vec a = lp_superdiff(p, v);
      double nv = 0.0;
      if (p.is_inf()) {
        nv = vec_linf(v);
      } else {
        for (double x : v) nv += std::pow(std::abs(x), p.value());
        nv = std::pow(nv, p.inverse());
      }
      CHECK(dot(a, v) == doctest::Approx(nv).epsilon(1e-12));
      double na = 0.0;
      if (pc.is_inf()) {
        na = vec_linf(a);
      } else {
        for (double x : a) na += std::pow(std::abs(x), pc.value());
        na = std::pow(na, pc.inverse());
      }
      CHECK(na <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("lattice ball maximizer fixed value") {
  FunctionSpace X = lr(2.0, {1, 1});
  BallMax bm = max_linear_over_lattice_ball(X, Exponent(2.0),
                                            {{1, 0}, {0, 1}});
  CHECK(bm.value == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("ball maximizers are feasible, attained, and dominate samples") {
  Rng rng(103u);
  const double rs[] = {1.0, 1.7, 2.0, 3.0, 0.0};
  const double qs[] = {1.0, 2.0, 2.5, 0.0};
  for (double rv : rs) {
    for (double qv : qs) {
      Exponent q = qv == 0.0 ? Exponent::inf() : Exponent(qv);
      std::size_t atoms = 1 + rng.index(3);
      std::size_t n = 1 + rng.index(3);
      Vec w(atoms);
      for (double& v : w) v = 0.25 + 2.0 * rng.uniform();
      FunctionSpace X = rv == 0.0 ? linf(w) : lr(rv, w);
      std::vector<Vec> C(n, Vec(atoms));
      for (Vec& c : C)
        for (double& v : c) v = rng.gaussian();

      auto objective = [&](const std::vector<Vec>& xs) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += dot(C[i], xs[i]);
        return s;
      };

      BallMax lat = max_linear_over_lattice_ball(X, q, C);
      CHECK(psum_norm(VectorTuple(X, lat.members), q) <= 1.0 + 1e-9);
      CHECK(objective(lat.members) ==
            doctest::Approx(lat.value).epsilon(1e-9));
      BallMax str = max_linear_over_strong_ball(X, q, C);
      Vec norms(n);
      for (std::size_t i = 0; i < n; ++i) norms[i] = X.norm(str.members[i]);
      double strong_norm = 0.0;
      if (q.is_inf()) {
        strong_norm = vec_linf(norms);
      } else {
        for (double v : norms) strong_norm += std::pow(v, q.value());
        strong_norm = std::pow(strong_norm, q.inverse());
      }
      CHECK(strong_norm <= 1.0 + 1e-9);
      CHECK(objective(str.members) ==
            doctest::Approx(str.value).epsilon(1e-9));

      // Random feasible tuples never beat either maximizer.
      for (int t = 0; t < 200; ++t) {
        std::vector<Vec> xs(n, Vec(atoms));
        for (Vec& x : xs)
          for (double& v : x) v = rng.gaussian();
        double ln = psum_norm(VectorTuple(X, xs), q);
        if (ln > 0.0) {
          double val = objective(xs) / ln;
          CHECK(val <= lat.value * (1.0 + 1e-9) + 1e-12);
        }
        Vec xnorms(n);
        for (std::size_t i = 0; i < n; ++i) xnorms[i] = X.norm(xs[i]);
        double sn = 0.0;
        if (q.is_inf()) {
          sn = vec_linf(xnorms);
        } else {
          for (double v : xnorms) sn += std::pow(v, q.value());
          sn = std::pow(sn, q.inverse());
        }
        if (sn > 0.0) {
          double val = objective(xs) / sn;
          CHECK(val <= str.value * (1.0 + 1e-9) + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("strong ball maximizer fixed values") {
  FunctionSpace X = lr(2.0, {1, 1});
  std::vector<Vec> C{{1, 0}, {0, 1}};
  CHECK(max_linear_over_strong_ball(X, Exponent(1.0), C).value ==
        doctest::Approx(1.0));
  CHECK(max_linear_over_strong_ball(X, Exponent(2.0), C).value ==
        doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("mixed ball maximizer reduces to the lattice ball on thin shapes") {
  Rng rng(107u);
  FunctionSpace X = lr(2.0, {1.0, 0.5});
  for (int rep = 0; rep < 10; ++rep) {
    std::size_t n = 1 + rng.index(3);
    std::vector<Vec> C(n, Vec(2));
    for (Vec& c : C)
      for (double& v : c) v = rng.gaussian();
    Exponent q(1.0 + 2.0 * rng.uniform());
    Exponent r(1.0 + 2.0 * rng.uniform());

    MixedBallMax one_row = max_linear_over_mixed_ball(X, r, q, {C});
    CHECK(one_row.value ==
          doctest::Approx(max_linear_over_lattice_ball(X, q, C).value)
              .epsilon(1e-9));

    std::vector<std::vector<Vec>> col;
    for (const Vec& c : C) col.push_back({c});
    MixedBallMax one_col = max_linear_over_mixed_ball(X, r, q, col);
    CHECK(one_col.value ==
          doctest::Approx(max_linear_over_lattice_ball(X, r, C).value)
              .epsilon(1e-9));
  }
}

TEST_CASE("mixed ball maximizer is feasible and dominates samples") {
  Rng rng(109u);
  FunctionSpace X = lr(3.0, {1.0, 2.0});
  Exponent r(2.0), q(1.5);
  std::vector<std::vector<Vec>> C(2, std::vector<Vec>(2, Vec(2)));
  for (auto& row : C)
    for (Vec& c : row)
      for (double& v : c) v = rng.gaussian();
  MixedBallMax mb = max_linear_over_mixed_ball(X, r, q, C);
  CHECK(mixed_matrix_norm(VectorMatrix(X, mb.rows), r, q) <= 1.0 + 1e-9);
  double attained = 0.0;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      attained += dot(C[i][j], mb.rows[i][j]);
  CHECK(attained == doctest::Approx(mb.value).epsilon(1e-9));
  for (int t = 0; t < 300; ++t) {
    std::vector<std::vector<Vec>> xs(2, std::vector<Vec>(2, Vec(2)));
    for (auto& row : xs)
      for (Vec& x : row)
        for (double& v : x) v = rng.gaussian();
    double nm = mixed_matrix_norm(VectorMatrix(X, xs), r, q);
    if (nm == 0.0) continue;
    double val = 0.0;
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) val += dot(C[i][j], xs[i][j]);
    CHECK(val / nm <= mb.value * (1.0 + 1e-9) + 1e-12);
  }
}
