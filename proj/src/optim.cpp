#include "pqreg/optim.hpp"

namespace pqreg {

std::pair<double, Vec> lq_dual_map(const Exponent& q, const Vec& c) {
  const std::size_t n = c.size();
  Vec u(n, 0.0);
  if (q.is_inf()) {
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      v += std::abs(c[i]);
      u[i] = sgn(c[i]);
    }
    return {v, u};
  }
  const double qv = q.value();
  require(qv >= 1.0, "dual map needs q >= 1");
  if (qv == 1.0) {
    std::size_t best = n;
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(c[i]) > m) {
        m = std::abs(c[i]);
        best = i;
      }
    }
    if (best < n) u[best] = sgn(c[best]);
    return {m, u};
  }
  const double qc = qv / (qv - 1.0);
  double v = 0.0;
  for (double ci : c) v += std::pow(std::abs(ci), qc);
  v = std::pow(v, 1.0 / qc);
  if (v == 0.0) return {0.0, u};
  for (std::size_t i = 0; i < n; ++i)
    u[i] = sgn(c[i]) * std::pow(std::abs(c[i]) / v, qc - 1.0);
  return {v, u};
}

Vec lp_superdiff(const Exponent& p, const Vec& v) {
  const std::size_t n = v.size();
  Vec a(n, 0.0);
  if (p.is_inf()) {
    std::size_t best = n;
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(v[i]) > m) {
        m = std::abs(v[i]);
        best = i;
      }
    }
    if (best < n) a[best] = sgn(v[best]);
    return a;
  }
  const double pv = p.value();
  require(pv >= 1.0, "superdifferential needs p >= 1");
  if (pv == 1.0) {
    for (std::size_t i = 0; i < n; ++i) a[i] = sgn(v[i]);
    return a;
  }
  double nrm = 0.0;
  for (double vi : v) nrm += std::pow(std::abs(vi), pv);
  nrm = std::pow(nrm, 1.0 / pv);
  if (nrm == 0.0) return a;
  for (std::size_t i = 0; i < n; ++i)
    a[i] = sgn(v[i]) * std::pow(std::abs(v[i]) / nrm, pv - 1.0);
  return a;
}

BallMax max_linear_over_lattice_ball(const FunctionSpace& X, const Exponent& q,
                                     const std::vector<Vec>& C) {
  const std::size_t n = C.size();
  const std::size_t atoms = X.atoms();
  BallMax out;
  out.members.assign(n, Vec(atoms, 0.0));
  if (n == 0) return out;

  // Per atom: dual l_q' value g(d) and the unit l_q maximizer across members.
  Vec g(atoms, 0.0);
  std::vector<Vec> unit(atoms);
  for (std::size_t d = 0; d < atoms; ++d) {
    Vec col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = C[i][d];
    auto [val, u] = lq_dual_map(q, col);
    g[d] = val;
    unit[d] = std::move(u);
  }

  // Outer: max sum g(d) s(d) over |s|_X <= 1 through the weighted pairing.
  Vec xi(atoms);
  for (std::size_t d = 0; d < atoms; ++d) xi[d] = g[d] / X.weights()[d];
  Vec s = X.dual_support_point(xi);
  for (double& v : s) v = std::abs(v);
  double value = 0.0;
  for (std::size_t d = 0; d < atoms; ++d) value += g[d] * s[d];

  for (std::size_t d = 0; d < atoms; ++d)
    for (std::size_t i = 0; i < n; ++i)
      out.members[i][d] = s[d] * unit[d][i];
  out.value = value;
  return out;
}

BallMax max_linear_over_strong_ball(const FunctionSpace& X, const Exponent& q,
                                    const std::vector<Vec>& C) {
  const std::size_t n = C.size();
  const std::size_t atoms = X.atoms();
  BallMax out;
  out.members.assign(n, Vec(atoms, 0.0));
  if (n == 0) return out;

  Vec vals(n, 0.0);
  std::vector<Vec> points(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec xi(atoms);
    for (std::size_t d = 0; d < atoms; ++d) xi[d] = C[i][d] / X.weights()[d];
    points[i] = X.dual_support_point(xi);
    for (std::size_t d = 0; d < atoms; ++d) vals[i] += C[i][d] * points[i][d];
  }
  auto [value, tau] = lq_dual_map(q, vals);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d = 0; d < atoms; ++d)
      out.members[i][d] = tau[i] * points[i][d];
  out.value = value;
  return out;
}

MixedBallMax max_linear_over_mixed_ball(
    const FunctionSpace& X, const Exponent& outer_r, const Exponent& inner_q,
    const std::vector<std::vector<Vec>>& C) {
  const std::size_t rows = C.size();
  const std::size_t cols = rows == 0 ? 0 : C[0].size();
  const std::size_t atoms = X.atoms();
  MixedBallMax out;
  out.rows.assign(rows, std::vector<Vec>(cols, Vec(atoms, 0.0)));
  if (rows == 0 || cols == 0) return out;

  // Per atom: nested dual map in l_{r'}(l_{q'}).
  Vec g(atoms, 0.0);
  std::vector<std::vector<Vec>> unit(atoms);
  for (std::size_t d = 0; d < atoms; ++d) {
    Vec inner_vals(rows);
    std::vector<Vec> inner_units(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      Vec col(cols);
      for (std::size_t j = 0; j < cols; ++j) col[j] = C[i][j][d];
      auto [v, u] = lq_dual_map(inner_q, col);
      inner_vals[i] = v;
      inner_units[i] = std::move(u);
    }
    auto [v, tau] = lq_dual_map(outer_r, inner_vals);
    g[d] = v;
    unit[d].assign(rows, Vec(cols, 0.0));
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j)
        unit[d][i][j] = tau[i] * inner_units[i][j];
  }

  Vec xi(atoms);
  for (std::size_t d = 0; d < atoms; ++d) xi[d] = g[d] / X.weights()[d];
  Vec s = X.dual_support_point(xi);
  for (double& v : s) v = std::abs(v);
  double value = 0.0;
  for (std::size_t d = 0; d < atoms; ++d) value += g[d] * s[d];

  for (std::size_t d = 0; d < atoms; ++d)
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j)
        out.rows[i][j][d] = s[d] * unit[d][i][j];
  out.value = value;
  return out;
}

}  // namespace pqreg
