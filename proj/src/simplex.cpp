#include "pqreg/simplex.hpp"

namespace pqreg {

LpResult solve_lp(const LinearProgram& lp) {
  const std::size_t n = lp.c.size();
  const std::size_t m = lp.rows.size();
  require(lp.b.size() == m, "constraint count mismatch");
  for (const Vec& r : lp.rows)
    require(r.size() == n, "constraint width mismatch");
  for (double bi : lp.b) require(bi >= 0.0, "rhs must be nonnegative");

  // Split x = u - v, add one slack per row. Column order: u, v, slacks.
  const std::size_t cols = 2 * n + m;
  std::vector<Vec> tab(m, Vec(cols + 1, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      tab[i][j] = lp.rows[i][j];
      tab[i][n + j] = -lp.rows[i][j];
    }
    tab[i][2 * n + i] = 1.0;
    tab[i][cols] = lp.b[i];
  }
  Vec obj(cols + 1, 0.0);  // reduced costs for maximization
  for (std::size_t j = 0; j < n; ++j) {
    obj[j] = lp.c[j];
    obj[n + j] = -lp.c[j];
  }

  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) basis[i] = 2 * n + i;

  const double tol = 1e-9;
  const int max_iters = 200000;
  for (int iter = 0; iter < max_iters; ++iter) {
    // Bland: entering column is the lowest index with positive reduced cost.
    std::size_t enter = cols;
    for (std::size_t j = 0; j < cols; ++j) {
      if (obj[j] > tol) {
        enter = j;
        break;
      }
    }
    if (enter == cols) break;  // optimal

    // Ratio test; Bland tie-break on the smallest basis variable index.
    std::size_t leave = m;
    double best_ratio = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (tab[i][enter] <= tol) continue;
      double ratio = tab[i][cols] / tab[i][enter];
      if (leave == m || ratio < best_ratio - tol ||
          (std::abs(ratio - best_ratio) <= tol &&
           basis[i] < basis[leave])) {
        leave = i;
        best_ratio = ratio;
      }
    }
    if (leave == m) {
      LpResult out;
      out.bounded = false;
      return out;
    }

    // Pivot.
    double piv = tab[leave][enter];
    for (double& v : tab[leave]) v /= piv;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == leave) continue;
      double f = tab[i][enter];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= cols; ++j) tab[i][j] -= f * tab[leave][j];
    }
    double f = obj[enter];
    for (std::size_t j = 0; j <= cols; ++j) obj[j] -= f * tab[leave][j];
    basis[leave] = enter;
  }

  LpResult out;
  out.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < n)
      out.x[basis[i]] += tab[i][cols];
    else if (basis[i] < 2 * n)
      out.x[basis[i] - n] -= tab[i][cols];
  }
  out.value = dot(lp.c, out.x);
  return out;
}

}  // namespace pqreg
