#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "pqreg/simplex.hpp"

using namespace pqreg;

namespace {

// Brute-force oracle: the optimum of a bounded feasible LP sits at a vertex,
// i.e. at the intersection of n active constraints.
double lp_vertex_oracle(const LinearProgram& lp) {
  const std::size_t n = lp.c.size();
  const std::size_t m = lp.rows.size();
  double best = 0.0;  // x = 0 is feasible since b >= 0
  std::vector<std::size_t> pick(n, 0);

  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start,
                                                          std::size_t k) {
    if (k == n) {
      Eigen::MatrixXd A(n, n);
      Eigen::VectorXd b(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
          A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
              lp.rows[pick[i]][j];
        b(static_cast<Eigen::Index>(i)) = lp.b[pick[i]];
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
      if (!lu.isInvertible()) return;
      Eigen::VectorXd x = lu.solve(b);
      for (std::size_t r = 0; r < m; ++r) {
        double lhs = 0.0;
        for (std::size_t j = 0; j < n; ++j)
          lhs += lp.rows[r][j] * x(static_cast<Eigen::Index>(j));
        if (lhs > lp.b[r] + 1e-7) return;
      }
      double val = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        val += lp.c[j] * x(static_cast<Eigen::Index>(j));
      best = std::max(best, val);
      return;
    }
    for (std::size_t i = start; i < m; ++i) {
      pick[k] = i;
      rec(i + 1, k + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace

TEST_CASE("simplex solves a fixed 2-variable program") {
  // max x + y subject to x <= 2, y <= 3, x + y <= 4.
  LinearProgram lp;
  lp.c = {1, 1};
  lp.rows = {{1, 0}, {0, 1}, {1, 1}};
  lp.b = {2, 3, 4};
  LpResult r = solve_lp(lp);
  CHECK(r.bounded);
  CHECK(r.value == doctest::Approx(4.0));
}

TEST_CASE("simplex handles negative optima of shifted boxes") {
  // max -x subject to -x <= 2, x <= 5: optimum at x = -2.
  LinearProgram lp;
  lp.c = {-1};
  lp.rows = {{-1}, {1}};
  lp.b = {2, 5};
  LpResult r = solve_lp(lp);
  CHECK(r.bounded);
  CHECK(r.value == doctest::Approx(2.0));
  CHECK(r.x[0] == doctest::Approx(-2.0));
}

TEST_CASE("simplex detects unbounded programs") {
  LinearProgram lp;
  lp.c = {1};
  lp.rows = {{-1}};
  lp.b = {1};
  CHECK(!solve_lp(lp).bounded);
}

TEST_CASE("simplex rejects negative right-hand sides") {
  LinearProgram lp;
  lp.c = {1};
  lp.rows = {{1}};
  lp.b = {-1};
  CHECK_THROWS_AS(solve_lp(lp), std::invalid_argument);
}

TEST_CASE("simplex matches vertex enumeration on random programs") {
  Rng rng(113u);
  for (int rep = 0; rep < 120; ++rep) {
    std::size_t n = 2 + rng.index(2);
    std::size_t extra = 2 + rng.index(4);
    LinearProgram lp;
    lp.c.resize(n);
    for (double& v : lp.c) v = rng.gaussian();
    // Box rows keep the program bounded; random rows with nonnegative rhs
    // keep the origin feasible.
    for (std::size_t j = 0; j < n; ++j) {
      Vec row(n, 0.0);
      row[j] = 1.0;
      lp.rows.push_back(row);
      lp.b.push_back(1.0 + 2.0 * rng.uniform());
      row[j] = -1.0;
      lp.rows.push_back(row);
      lp.b.push_back(1.0 + 2.0 * rng.uniform());
    }
    for (std::size_t k = 0; k < extra; ++k) {
      Vec row(n);
      for (double& v : row) v = rng.gaussian();
      lp.rows.push_back(row);
      lp.b.push_back(0.5 + rng.uniform());
    }
    LpResult r = solve_lp(lp);
    REQUIRE(r.bounded);
    double oracle = lp_vertex_oracle(lp);
    CHECK(r.value == doctest::Approx(oracle).epsilon(1e-7));
    // The returned point is feasible.
    for (std::size_t i = 0; i < lp.rows.size(); ++i)
      CHECK(dot(lp.rows[i], r.x) <= lp.b[i] + 1e-8);
  }
}
