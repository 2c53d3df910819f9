#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pqreg/tensor.hpp"
#include "pqreg/util.hpp"

using namespace pqreg;

namespace {

FunctionSpace lr(double r, std::size_t n) {
  return FunctionSpace::weighted_lr(Exponent(r), Vec(n, 1.0));
}
FunctionSpace linf(std::size_t n) {
  return FunctionSpace::weighted_lr(Exponent::inf(), Vec(n, 1.0));
}

Tensor random_tensor(const FunctionSpace& L, const FunctionSpace& R,
                     std::size_t terms, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TensorTerm> ts;
  for (std::size_t i = 0; i < terms; ++i) {
    Vec x(L.atoms()), y(R.atoms());
    for (double& v : x) v = rng.gaussian();
    for (double& v : y) v = rng.gaussian();
    ts.push_back(TensorTerm{std::move(x), std::move(y)});
  }
  return Tensor(L, R, std::move(ts));
}

// Order-unit norm space built from a strictly positive base element; the
// inclusion into the base space has norm one.
FunctionSpace am_space(const FunctionSpace& base, Vec x0) {
  CustomNorm cn;
  cn.evaluate = [base, x0](const Vec& u) {
    return am_norm_from_element(base, x0, u);
  };
  cn.norming = [base, x0](const Vec& u) {
    double best = 0.0;
    std::size_t a = 0;
    for (std::size_t j = 0; j < u.size(); ++j) {
      double r = std::abs(u[j]) / x0[j];
      if (r > best) {
        best = r;
        a = j;
      }
    }
    Vec f(u.size(), 0.0);
    f[a] = (u[a] >= 0.0 ? 1.0 : -1.0) * base.norm(x0) /
           (base.weights()[a] * x0[a]);
    return f;
  };
  return FunctionSpace::custom(base.weights(), cn);
}

void check_interval(const TensorNormBounds& b) {
  CHECK(b.lower <= b.upper + b.tolerance + 1e-12 * (1.0 + b.upper));
  CHECK(b.lower >= 0.0);
}

}  // namespace

TEST_CASE("canonical matrix: elementary, cancellation, bilinearity") {
  FunctionSpace L = lr(1, 2), R = lr(2, 3);
  Tensor elem(L, R, {TensorTerm{{0.0, 1.0}, {1.0, 0.0, 0.0}}});
  auto M = canonical_matrix(elem);
  CHECK(M[0][0] == 0.0);
  CHECK(M[1][0] == 1.0);
  CHECK(M[1][2] == 0.0);

  Tensor cancel(L, R,
                {TensorTerm{{1.0, -2.0}, {0.5, 1.0, 3.0}},
                 TensorTerm{{-1.0, 2.0}, {0.5, 1.0, 3.0}}});
  for (const Vec& row : canonical_matrix(cancel))
    for (double v : row) CHECK(v == 0.0);

  Tensor joint(L, R, {TensorTerm{{1.0, 1.0}, {1.0, 0.0, 0.0}}});
  Tensor split(L, R,
               {TensorTerm{{1.0, 0.0}, {1.0, 0.0, 0.0}},
                TensorTerm{{0.0, 1.0}, {1.0, 0.0, 0.0}}});
  auto A = canonical_matrix(joint);
  auto B = canonical_matrix(split);
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 3; ++b) CHECK(A[a][b] == B[a][b]);
}

TEST_CASE("injective norm: elementary, zero, sign-vertex oracle") {
  FunctionSpace L = lr(2, 3), R = lr(1.5, 2);
  Vec x{1.0, -2.0, 0.5}, y{0.75, 1.25};
  Tensor elem(L, R, {TensorTerm{x, y}});
  TensorNormBounds e = eps_norm(elem, 7);
  double xy = L.norm(x) * R.norm(y);
  CHECK(e.lower == doctest::Approx(xy).epsilon(1e-12));
  CHECK(e.upper == doctest::Approx(xy).epsilon(1e-12));
  CHECK(e.tolerance == 0.0);
  REQUIRE(e.lower_certificate.has_value());
  CHECK(trace_pairing(*e.lower_certificate, elem) ==
        doctest::Approx(e.lower).epsilon(1e-12));

  Tensor zero(L, R,
              {TensorTerm{x, y}, TensorTerm{x, {-0.75, -1.25}}});
  TensorNormBounds z = eps_norm(zero, 7);
  CHECK(z.lower == 0.0);
  CHECK(z.upper == 0.0);

  // identity on l_1^2 (x) l_1^2: both dual balls are sign cubes, so the
  // brute-force maximum over the 16 sign pairs is the exact value.
  FunctionSpace l1 = lr(1, 2);
  Tensor id(l1, l1,
            {TensorTerm{{1.0, 0.0}, {1.0, 0.0}},
             TensorTerm{{0.0, 1.0}, {0.0, 1.0}}});
  auto M = canonical_matrix(id);
  double brute = 0.0;
  for (int sx : {-1, 1})
    for (int tx : {-1, 1})
      for (int sy : {-1, 1})
        for (int ty : {-1, 1}) {
          double v = sx * (sy * M[0][0] + ty * M[0][1]) +
                     tx * (sy * M[1][0] + ty * M[1][1]);
          brute = std::max(brute, std::abs(v));
        }
  CHECK(brute == 2.0);
  TensorNormBounds ei = eps_norm(id, 7);
  CHECK(ei.lower == doctest::Approx(brute).epsilon(1e-12));
  CHECK(ei.upper == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("projective bounds: elementary exactness and duality ordering") {
  FunctionSpace L = lr(2, 3), R = lr(1.5, 2);
  Vec x{1.0, -2.0, 0.5}, y{0.75, 1.25};
  Tensor elem(L, R, {TensorTerm{x, y}});
  TensorNormBounds pi = pi_bounds(elem, 11);
  double xy = L.norm(x) * R.norm(y);
  CHECK(pi.lower == doctest::Approx(xy).epsilon(1e-9));
  CHECK(pi.upper == doctest::Approx(xy).epsilon(1e-9));
  REQUIRE(pi.upper_certificate.has_value());
  CHECK(pi_objective(*pi.upper_certificate) ==
        doctest::Approx(pi.upper).epsilon(1e-12));

  for (std::uint64_t s = 1; s <= 6; ++s) {
    FunctionSpace Ls = (s % 2) ? lr(2, 3) : linf(2);
    FunctionSpace Rs = (s % 3) ? lr(2, 2) : lr(1, 3);
    Tensor z = random_tensor(Ls, Rs, 3, 40 + s);
    TensorNormBounds e = eps_norm(z, s);
    TensorNormBounds p = pi_bounds(z, s);
    check_interval(e);
    check_interval(p);
    CHECK(e.lower <= p.upper * (1.0 + 1e-9));
    REQUIRE(p.lower_certificate.has_value());
    CHECK(trace_pairing(*p.lower_certificate, z) ==
          doctest::Approx(p.lower).epsilon(1e-9));
    REQUIRE(p.upper_certificate.has_value());
    CHECK(pi_objective(*p.upper_certificate) ==
          doctest::Approx(p.upper).epsilon(1e-9));
  }
}

TEST_CASE("two-term sup-normed tensors obey the Grothendieck bound") {
  for (std::uint64_t s = 1; s <= 12; ++s) {
    Tensor z = random_tensor(linf(2), linf(2), 2, 100 + s);
    TensorNormBounds pi = pi_bounds(z, s);
    double given = phi_objective(z, Exponent(2), Exponent(2));
    double searched = phi_pq_upper(z, Exponent(2), Exponent(2));
    CHECK(searched <= given * (1.0 + 1e-9));
    CHECK(pi.upper <= kGrothendieckUpper * given * (1.0 + 1e-9));
    CHECK(pi.upper <= kGrothendieckUpper * searched * (1.0 + 1e-9));
  }
}

TEST_CASE("Chevet-Saphar norms: elementary exactness and weak domination") {
  FunctionSpace L = lr(2, 3), R = lr(1.5, 2);
  Vec x{1.0, -2.0, 0.5}, y{0.75, 1.25};
  Tensor elem(L, R, {TensorTerm{x, y}});
  double xy = L.norm(x) * R.norm(y);
  for (LapresteNorm kind :
       {LapresteNorm::Gp, LapresteNorm::Dp, LapresteNorm::Wp}) {
    TensorNormBounds b = laprete_bounds(elem, kind, Exponent(2), 5);
    CHECK(b.lower == doctest::Approx(xy).epsilon(1e-9));
    CHECK(b.upper == doctest::Approx(xy).epsilon(1e-9));
  }

  for (std::uint64_t s = 1; s <= 8; ++s) {
    FunctionSpace Ls = (s % 2) ? lr(2, 3) : linf(2);
    FunctionSpace Rs = (s % 3) ? lr(2, 2) : lr(1, 3);
    Tensor z = random_tensor(Ls, Rs, 3, 1100 + s);
    TensorNormBounds gp = laprete_bounds(z, LapresteNorm::Gp, Exponent(2), s);
    TensorNormBounds dp = laprete_bounds(z, LapresteNorm::Dp, Exponent(2), s);
    TensorNormBounds wp = laprete_bounds(z, LapresteNorm::Wp, Exponent(2), s);
    check_interval(gp);
    check_interval(dp);
    check_interval(wp);
    // Term-by-term domination of the objectives on the shared certificate.
    REQUIRE(gp.upper_certificate.has_value());
    REQUIRE(dp.upper_certificate.has_value());
    CHECK(laprete_objective(*gp.upper_certificate, LapresteNorm::Wp,
                            Exponent(2)) <=
          laprete_objective(*gp.upper_certificate, LapresteNorm::Gp,
                            Exponent(2)) *
              (1.0 + 1e-12));
    CHECK(laprete_objective(*dp.upper_certificate, LapresteNorm::Wp,
                            Exponent(2)) <=
          laprete_objective(*dp.upper_certificate, LapresteNorm::Dp,
                            Exponent(2)) *
              (1.0 + 1e-12));
    // Estimator-level comparison carries search slack.
    CHECK(wp.upper <= gp.upper * 1.02);
    CHECK(wp.upper <= dp.upper * 1.02);
  }
}

TEST_CASE("Chevet-Persson-Saphar agreement on l_p squares") {
  for (double p : {1.5, 2.0, 3.0}) {
    for (std::uint64_t s = 1; s <= 6; ++s) {
      Tensor z = random_tensor(lr(p, 3), lr(p, 3), 3, 200 + s);
      TensorNormBounds gp = laprete_bounds(z, LapresteNorm::Gp, Exponent(p), s);
      TensorNormBounds dp = laprete_bounds(z, LapresteNorm::Dp, Exponent(p), s);
      double rel =
          std::abs(gp.upper - dp.upper) / std::max(gp.upper, dp.upper);
      CHECK(rel <= 0.02);
      CHECK(gp.lower <= dp.upper * (1.0 + 1e-9));
      CHECK(dp.lower <= gp.upper * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("lattice norm quasi-triangle via concatenated representations") {
  // q-convexity and p'-convexity constants are 1 on L_2, so the combination
  // constant is 2^{1-t} with 1/t = 1/q + 1/p'.
  Exponent p(2), q(1);
  double t = 1.0 / (1.0 / 1.0 + 1.0 / 2.0);
  double c = std::pow(2.0, 1.0 - t);
  for (std::uint64_t s = 1; s <= 8; ++s) {
    Tensor z1 = random_tensor(lr(2, 2), lr(2, 2), 2, 300 + s);
    Tensor z2 = random_tensor(lr(2, 2), lr(2, 2), 2, 400 + s);
    double u1 = phi_pq_upper(z1, p, q);
    double u2 = phi_pq_upper(z2, p, q);
    std::vector<TensorTerm> cat = z1.terms;
    cat.insert(cat.end(), z2.terms.begin(), z2.terms.end());
    double u12 = phi_pq_upper(Tensor(z1.left_space, z1.right_space, cat), p, q);
    CHECK(u12 <= c * (u1 + u2) * (1.0 + 1e-9));
  }
}

TEST_CASE("block norms: elementary squeeze and interval ordering") {
  FunctionSpace L = lr(2, 3), R = lr(1.5, 2);
  Vec x{1.0, -2.0, 0.5}, y{0.75, 1.25};
  Tensor elem(L, R, {TensorTerm{x, y}});
  double xy = L.norm(x) * R.norm(y);
  Exponent p(2), q(1.5);
  TensorNormBounds r = r_pq_bounds(elem, p, q, 3);
  TensorNormBounds h = hk_pq_bounds(elem, LatticeBlockNorm::H, p, q, 3);
  TensorNormBounds k = hk_pq_bounds(elem, LatticeBlockNorm::K, p, q, 3);
  for (const TensorNormBounds* b : {&r, &h, &k}) {
    CHECK(b->lower == doctest::Approx(xy).epsilon(1e-9));
    CHECK(b->upper == doctest::Approx(xy).epsilon(1e-9));
    REQUIRE(!b->upper_blocks.empty());
  }

  for (std::uint64_t s = 1; s <= 6; ++s) {
    FunctionSpace Ls = (s % 2) ? lr(2, 3) : linf(2);
    FunctionSpace Rs = (s % 2) ? lr(2, 2) : lr(1, 2);
    Tensor z = random_tensor(Ls, Rs, 3, 500 + s);
    TensorNormBounds e = eps_norm(z, s);
    TensorNormBounds pi = pi_bounds(z, s);
    TensorNormBounds rb = r_pq_bounds(z, p, q, s);
    TensorNormBounds hb = hk_pq_bounds(z, LatticeBlockNorm::H, p, q, s);
    TensorNormBounds kb = hk_pq_bounds(z, LatticeBlockNorm::K, p, q, s);
    for (const TensorNormBounds* b : {&rb, &hb, &kb}) {
      check_interval(*b);
      CHECK(e.lower <= b->upper * (1.0 + 1e-9));
      CHECK(b->lower <= pi.upper * (1.0 + 1e-9));
      // block values re-evaluate to the reported upper
      double total = 0.0;
      for (const Tensor& block : b->upper_blocks)
        total += b == &rb ? phi_objective(block, p, q)
                          : (b == &hb ? delta_objective(block, p, q)
                                      : iota_objective(block, p, q));
      CHECK(total == doctest::Approx(b->upper).epsilon(1e-9));
    }
    // g_p <= h_{p,p} and d_p <= k_{p',p'} consistency at certified level
    TensorNormBounds hpp = hk_pq_bounds(z, LatticeBlockNorm::H, p, p, s);
    TensorNormBounds kpp = hk_pq_bounds(z, LatticeBlockNorm::K,
                                        conjugate_exponent(p),
                                        conjugate_exponent(p), s);
    TensorNormBounds gp = laprete_bounds(z, LapresteNorm::Gp, p, s);
    TensorNormBounds dp = laprete_bounds(z, LapresteNorm::Dp, p, s);
    CHECK(gp.lower <= hpp.upper * (1.0 + 1e-9));
    CHECK(dp.lower <= kpp.upper * (1.0 + 1e-9));
  }
}

TEST_CASE("projective vs block norm on dual frames stays within Grothendieck") {
  for (std::uint64_t s = 1; s <= 8; ++s) {
    Tensor z = random_tensor(linf(2), lr(1, 2), 2, 500 + s);
    TensorNormBounds pi = pi_bounds(z, s);
    TensorNormBounds r = r_pq_bounds(z, Exponent(2), Exponent(2), s);
    CHECK(r.lower <= pi.upper * (1.0 + 1e-9));
    CHECK(pi.upper <= kGrothendieckUpper * r.upper * (1.0 + 1e-9));
    CHECK(pi.upper <= kGrothendieckUpper * r.lower * (1.0 + 1e-6));
  }
}

TEST_CASE("bounds are representation invariant") {
  for (std::uint64_t s = 1; s <= 4; ++s) {
    Rng rng(800 + s);
    FunctionSpace L = lr(2, 3), R = lr(2, 2);
    std::vector<TensorTerm> ts;
    for (int i = 0; i < 2; ++i) {
      Vec x(3), y(2);
      for (double& v : x) v = rng.gaussian();
      for (double& v : y) v = rng.gaussian();
      ts.push_back(TensorTerm{x, y});
    }
    Tensor z(L, R, ts);
    // same element: term 0 split in two, plus a term with zero y factor
    std::vector<TensorTerm> alt;
    Vec xa = ts[0].x, xb = ts[0].x;
    for (double& v : xa) v *= 0.6;
    for (double& v : xb) v *= 0.4;
    alt.push_back(TensorTerm{xa, ts[0].y});
    alt.push_back(TensorTerm{xb, ts[0].y});
    alt.push_back(ts[1]);
    Vec junk(3);
    for (double& v : junk) v = rng.gaussian();
    alt.push_back(TensorTerm{junk, Vec(2, 0.0)});
    Tensor z2(L, R, alt);

    auto Ma = canonical_matrix(z), Mb = canonical_matrix(z2);
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = 0; b < 2; ++b)
        CHECK(Ma[a][b] == doctest::Approx(Mb[a][b]).epsilon(1e-12));

    TensorNormBounds e1 = eps_norm(z, 5), e2 = eps_norm(z2, 11);
    CHECK(e1.upper == doctest::Approx(e2.upper).epsilon(1e-9));
    TensorNormBounds p1 = pi_bounds(z, 5), p2 = pi_bounds(z2, 11);
    CHECK(p1.upper == doctest::Approx(p2.upper).epsilon(1e-6));
    TensorNormBounds r1 = r_pq_bounds(z, Exponent(2), Exponent(1.5), 5);
    TensorNormBounds r2 = r_pq_bounds(z2, Exponent(2), Exponent(1.5), 11);
    CHECK(std::abs(r1.upper - r2.upper) <=
          0.05 * std::max(r1.upper, r2.upper));
    CHECK(std::abs(r1.lower - r2.lower) <=
          1e-3 * std::max(r1.lower, r2.lower));
  }
}

TEST_CASE("order-unit embedding never shrinks the projective upper") {
  for (std::uint64_t s = 1; s <= 4; ++s) {
    FunctionSpace L = lr(2, 3), R = lr(2, 2);
    FunctionSpace A = am_space(L, {1.0, 0.5, 1.5});
    Tensor z = random_tensor(L, R, 2, 900 + s);
    Tensor za(A, R, z.terms);
    TensorNormBounds base = pi_bounds(z, s);
    TensorNormBounds am = pi_bounds(za, s);
    check_interval(am);
    CHECK(base.upper <= am.upper * (1.0 + 1e-9));
    CHECK(base.lower <= am.upper * (1.0 + 1e-9));
  }
}

TEST_CASE("trace duality: zero, identity, random and sandwich exponents") {
  FunctionSpace L2 = lr(2, 2);
  OperatorMatrix zero(L2, L2, {{0.0, 0.0}, {0.0, 0.0}});
  TraceDualityRecord rz =
      trace_duality_check(zero, Exponent(2), Exponent(2), 4, 1);
  CHECK(rz.rho_est == 0.0);
  CHECK(rz.dual_sup == 0.0);
  CHECK(rz.gap == 0.0);

  OperatorMatrix id(L2, L2, {{1.0, 0.0}, {0.0, 1.0}});
  TraceDualityRecord ri =
      trace_duality_check(id, Exponent(2), Exponent(2), 4, 1);
  CHECK(ri.rho_est == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(ri.dual_sup == doctest::Approx(1.0).epsilon(1e-9));

  for (std::uint64_t s = 1; s <= 6; ++s) {
    Rng rng(700 + s);
    std::vector<Vec> rows(2, Vec(2));
    for (Vec& row : rows)
      for (double& v : row) v = rng.gaussian();
    OperatorMatrix T(L2, L2, rows);
    TraceDualityRecord rec =
        trace_duality_check(T, Exponent(2), Exponent(2), 4, s);
    CHECK(rec.gap <= 1e-6 * std::max(1.0, rec.rho_est));
  }
  for (std::uint64_t s = 1; s <= 2; ++s) {
    Rng rng(1200 + s);
    std::vector<Vec> rows(2, Vec(2));
    for (Vec& row : rows)
      for (double& v : row) v = rng.gaussian();
    OperatorMatrix T(L2, L2, rows);
    TraceDualityRecord rec =
        trace_duality_check(T, Exponent(3), Exponent(1.5), 4, s);
    CHECK(rec.gap <= 1e-6 * std::max(1.0, rec.rho_est));
  }
}

TEST_CASE("lower certificates pair below every projective upper") {
  Tensor z = random_tensor(lr(2, 2), lr(2, 2), 3, 1000);
  TensorNormBounds pi = pi_bounds(z, 9);
  std::vector<TensorNormBounds> all;
  all.push_back(eps_norm(z, 9));
  all.push_back(pi);
  all.push_back(r_pq_bounds(z, Exponent(2), Exponent(2), 9));
  all.push_back(hk_pq_bounds(z, LatticeBlockNorm::H, Exponent(2), Exponent(2), 9));
  all.push_back(hk_pq_bounds(z, LatticeBlockNorm::K, Exponent(2), Exponent(2), 9));
  for (const TensorNormBounds& b : all) {
    REQUIRE(b.lower_certificate.has_value());
    double paired = trace_pairing(*b.lower_certificate, z);
    CHECK(paired == doctest::Approx(b.lower).epsilon(1e-9));
    CHECK(paired <= pi.upper * (1.0 + 1e-9));
  }
}

TEST_CASE("malformed tensor requests throw") {
  FunctionSpace L = lr(2, 2), R = lr(2, 2);
  Tensor z = random_tensor(L, R, 2, 1);
  CHECK_THROWS(Tensor(L, R, {}));
  CHECK_THROWS(Tensor(L, R, {TensorTerm{{1.0, 0.0, 0.0}, {1.0, 0.0}}}));
  CHECK_THROWS(phi_pq_upper(z, Exponent(1.5), Exponent(2)));
  CHECK_THROWS(r_pq_bounds(z, Exponent(2), Exponent(3), 1));
  CHECK_THROWS(r_pq_bounds(z, Exponent(2), Exponent(2), 1, 0));
  CHECK_THROWS(hk_pq_bounds(z, LatticeBlockNorm::H, Exponent(1), Exponent(2), 1));
  CHECK_THROWS(phi_pq_upper(z, Exponent(0.5), Exponent(0.5)));
  CHECK_THROWS(laprete_bounds(z, LapresteNorm::Gp, Exponent(0.5), 1));
  OperatorMatrix id(L, L, {{1.0, 0.0}, {0.0, 1.0}});
  CHECK_THROWS(trace_duality_check(id, Exponent(1.5), Exponent(2), 4, 1));
  CHECK_THROWS(trace_duality_check(id, Exponent(2), Exponent(2), 0, 1));
  FunctionSpace big = lr(2, 7);
  OperatorMatrix wide(big, big,
                      std::vector<Vec>(7, Vec(7, 0.1)));
  CHECK_THROWS(trace_duality_check(wide, Exponent(2), Exponent(2), 4, 1));
}
