#include "pqreg/extension.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "pqreg/calculus.hpp"

namespace pqreg {
namespace {

double lp(const Vec& v, const Exponent& p) {
  if (p.is_inf()) return vec_linf(v);
  double s = 0.0;
  for (double x : v) s += std::pow(std::abs(x), p.value());
  return std::pow(s, 1.0 / p.value());
}

double golden_min(const std::function<double(double)>& f, double lo, double hi,
                  double tol) {
  const double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? c : d;
}

double ternary_min(const std::function<double(double)>& f, double lo,
                   double hi, double tol) {
  while (hi - lo > tol) {
    double m1 = lo + (hi - lo) / 3.0;
    double m2 = hi - (hi - lo) / 3.0;
    if (f(m1) <= f(m2))
      hi = m2;
    else
      lo = m1;
  }
  return 0.5 * (lo + hi);
}

// Coordinate descent in shift-invariant log coordinates. The pairwise pass
// handles sup-coupled corners where single-coordinate moves stall.
double coordinate_descent(const std::function<double(const Vec&)>& F, Vec& t,
                          int max_pass, double tol) {
  std::size_t n = t.size();
  double best = F(t);
  for (int pass = 0; pass < max_pass; ++pass) {
    double moved = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto slice = [&](double v) {
        Vec tt = t;
        tt[i] = v;
        return F(tt);
      };
      double lo = t[i] - 1.0, hi = t[i] + 1.0;
      for (int e = 0; e < 12 && slice(lo) < best; ++e) lo -= (t[i] - lo);
      for (int e = 0; e < 12 && slice(hi) < best; ++e) hi += (hi - t[i]);
      double v = golden_min(slice, lo, hi, 1e-12);
      double fv = slice(v);
      if (fv < best) {
        moved = std::max(moved, std::abs(v - t[i]));
        t[i] = v;
        best = fv;
      }
    }
    double mean = 0.0;
    for (double v : t) mean += v;
    mean /= static_cast<double>(n);
    for (double& v : t) v -= mean;
    if (moved < tol) break;
  }
  for (int rep = 0; rep < 3 && n >= 2; ++rep)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        auto slice = [&](double d) {
          Vec tt = t;
          tt[i] += d;
          tt[j] -= d;
          return F(tt);
        };
        double d = golden_min(slice, -1.0, 1.0, 1e-12);
        double fv = slice(d);
        if (fv < best) {
          t[i] += d;
          t[j] -= d;
          best = fv;
        }
      }
  return best;
}

// Subgradient of the log of the scaling objective at t. Valid at lattice
// kinks because the norming functional is a subgradient of the norm and the
// first-wins argmax selects one member of the sup differential.
Vec z_subgrad_log(const FunctionSpace& X, const std::vector<const Vec*>& comps,
                  const Exponent& q, const Vec& t) {
  std::size_t m = comps.size();
  std::size_t atoms = X.atoms();
  double qpv = q.is_inf() ? 1.0 : q.value() / (q.value() - 1.0);
  Vec g(m, 0.0);
  double bsum = 0.0;
  Vec be(m);
  for (std::size_t i = 0; i < m; ++i) {
    be[i] = std::exp(qpv * t[i]);
    bsum += be[i];
  }
  for (std::size_t i = 0; i < m; ++i) g[i] = be[i] / bsum;

  Vec prof(atoms, 0.0);
  std::vector<std::size_t> win(atoms, 0);
  if (q.is_inf()) {
    for (std::size_t d = 0; d < atoms; ++d)
      for (std::size_t i = 0; i < m; ++i) {
        double c = std::abs((*comps[i])[d]) * std::exp(-t[i]);
        if (c > prof[d]) {
          prof[d] = c;
          win[d] = i;
        }
      }
  } else {
    double qv = q.value();
    for (std::size_t d = 0; d < atoms; ++d) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i)
        s += std::pow(std::abs((*comps[i])[d]), qv) * std::exp(-qv * t[i]);
      prof[d] = std::pow(s, 1.0 / qv);
    }
  }
  double nrm = X.norm(prof);
  if (nrm <= 0.0) return g;
  Vec psi = X.norming_functional(prof);
  const Vec& w = X.weights();
  if (q.is_inf()) {
    for (std::size_t d = 0; d < atoms; ++d) {
      if (prof[d] <= 0.0) continue;
      g[win[d]] -= w[d] * psi[d] * prof[d] / nrm;
    }
  } else {
    double qv = q.value();
    for (std::size_t d = 0; d < atoms; ++d) {
      if (prof[d] <= 0.0) continue;
      double base = w[d] * psi[d] * std::pow(prof[d], 1.0 - qv) / nrm;
      for (std::size_t i = 0; i < m; ++i)
        g[i] -= base * std::pow(std::abs((*comps[i])[d]), qv) *
                std::exp(-qv * t[i]);
    }
  }
  return g;
}

// Ellipsoid refinement of a convex shift-invariant objective, restricted to
// the zero-sum hyperplane through the start. Coordinate descent can stall on
// sup-norm ridges; the ellipsoid method converges geometrically regardless
// of kinks, so the two independent solvers land on one value.
Vec ellipsoid_refine(const std::function<double(const Vec&)>& F,
                     const std::function<Vec(const Vec&)>& G, const Vec& start,
                     double radius, int iters) {
  std::size_t m = start.size();
  if (m < 2) return start;
  std::size_t nn = m - 1;
  // Helmert basis of the zero-sum hyperplane
  std::vector<Vec> Q;
  for (std::size_t k = 1; k < m; ++k) {
    Vec v(m, 0.0);
    double s = 1.0 / std::sqrt(static_cast<double>(k * (k + 1)));
    for (std::size_t j = 0; j < k; ++j) v[j] = s;
    v[k] = -std::sqrt(static_cast<double>(k) / static_cast<double>(k + 1));
    Q.push_back(v);
  }
  Vec origin = start;
  auto lift = [&](const Vec& y) {
    Vec t = origin;
    for (std::size_t k = 0; k < nn; ++k)
      for (std::size_t j = 0; j < m; ++j) t[j] += y[k] * Q[k][j];
    return t;
  };
  Vec best_t = start;
  double best = F(start);
  if (nn == 1) {
    auto slice = [&](double y) { return F(lift(Vec{y})); };
    double y = golden_min(slice, -radius, radius, 1e-13);
    double fv = slice(y);
    if (fv < best) best_t = lift(Vec{y});
    return best_t;
  }
  double f1 = static_cast<double>(nn * nn) /
              (static_cast<double>(nn * nn) - 1.0);
  double f2 = 2.0 / (static_cast<double>(nn) + 1.0);
  // restart rounds: each run collapses at floating-point resolution of the
  // shape matrix, so re-center on the incumbent with a shrunken radius
  double R = radius;
  for (int round = 0; round < 3; ++round) {
    origin = best_t;
    Vec c(nn, 0.0);
    std::vector<Vec> A(nn, Vec(nn, 0.0));
    for (std::size_t i = 0; i < nn; ++i) A[i][i] = R * R;
    for (int it = 0; it < iters; ++it) {
      Vec cur = lift(c);
      double fv = F(cur);
      if (fv < best) {
        best = fv;
        best_t = cur;
      }
      Vec gt = G(cur);
      Vec g(nn, 0.0);
      for (std::size_t k = 0; k < nn; ++k)
        for (std::size_t j = 0; j < m; ++j) g[k] += Q[k][j] * gt[j];
      Vec Ag(nn, 0.0);
      double gag = 0.0;
      for (std::size_t i = 0; i < nn; ++i) {
        for (std::size_t j = 0; j < nn; ++j) Ag[i] += A[i][j] * g[j];
        gag += g[i] * Ag[i];
      }
      if (!(gag > 1e-28) || !std::isfinite(gag)) break;
      double sg = std::sqrt(gag);
      for (std::size_t i = 0; i < nn; ++i)
        c[i] -= Ag[i] / ((static_cast<double>(nn) + 1.0) * sg);
      for (std::size_t i = 0; i < nn; ++i)
        for (std::size_t j = 0; j < nn; ++j)
          A[i][j] = f1 * (A[i][j] - f2 * Ag[i] * Ag[j] / gag);
    }
    R = std::max(R / 256.0, 1e-5);
  }
  return best_t;
}

struct ZActive {
  std::vector<std::size_t> index;   // positions of nonzero components
  std::vector<const Vec*> comps;
};

ZActive active_components(const ZElement& v) {
  ZActive a;
  for (std::size_t k = 0; k < v.components.size(); ++k)
    if (vec_linf(v.components[k]) > 0.0) {
      a.index.push_back(k);
      a.comps.push_back(&v.components[k]);
    }
  return a;
}

// |a|_{q'} * |(sum_k |f_k / a_k|^q)^{1/q}|_X at a = exp(t).
double z_objective_log(const FunctionSpace& X,
                       const std::vector<const Vec*>& comps, const Exponent& q,
                       const Exponent& qp, const Vec& t) {
  std::size_t n = comps.size();
  Vec a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = std::exp(t[i]);
  std::size_t atoms = X.atoms();
  Vec s(atoms, 0.0);
  if (q.is_inf()) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < atoms; ++d)
        s[d] = std::max(s[d], std::abs((*comps[i])[d]) / a[i]);
  } else {
    double qv = q.value();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < atoms; ++d)
        s[d] += std::pow(std::abs((*comps[i])[d]) / a[i], qv);
    for (std::size_t d = 0; d < atoms; ++d) s[d] = std::pow(s[d], 1.0 / qv);
  }
  return lp(a, qp) * X.norm(s);
}

// Same value through the product-decomposition parameterization in log c,
// the q = 1 and q = inf endpoints taken as continuity limits.
double product_objective_log(const FunctionSpace& X,
                             const std::vector<const Vec*>& comps,
                             const Exponent& q, const Vec& u) {
  std::size_t n = comps.size();
  std::size_t atoms = X.atoms();
  if (q.is_inf()) {
    double f1 = 0.0;
    for (double v : u) f1 += std::exp(v);
    Vec s(atoms, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < atoms; ++d)
        s[d] = std::max(s[d], std::abs((*comps[i])[d]) * std::exp(-u[i]));
    return f1 * X.norm(s);
  }
  double qv = q.value();
  double qpv = qv / (qv - 1.0);
  double f1 = 0.0;
  for (double v : u) f1 += std::exp(v);
  f1 = std::pow(f1, 1.0 / qpv);
  Vec s(atoms, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double scale = std::exp(-u[i] * (qv / qpv));
    for (std::size_t d = 0; d < atoms; ++d)
      s[d] += std::pow(std::abs((*comps[i])[d]), qv) * scale;
  }
  for (std::size_t d = 0; d < atoms; ++d) s[d] = std::pow(s[d], 1.0 / qv);
  return f1 * X.norm(s);
}

// Pairing lower bound: test operators u : X -> l_q^n with a certified
// overestimate of their (inf,q)-regular constant. Valid because
// <u, v> <= rho(u) |v|_Z and rho(u) <= min(q-sum of row dual norms,
// modulus operator norm).
struct PairLower {
  double value = 0.0;
  std::vector<Vec> rows;  // normalized by the certificate
};

PairLower pair_lower_bound(const ZElement& v, const Exponent& q,
                           const ZActive& act, const Vec& opt_scaling,
                           std::uint64_t seed) {
  PairLower out;
  std::size_t n = v.n();
  std::size_t atoms = v.X.atoms();
  out.rows.assign(n, Vec(atoms, 0.0));
  if (act.comps.empty() || v.X.kind() != NormKind::WeightedLr) {
    // largest component norm: valid on any lattice, witnessed by the
    // rank-one row of its norming functional
    double best = 0.0;
    std::size_t bk = 0;
    for (std::size_t k = 0; k < n; ++k) {
      double c = v.X.norm(v.components[k]);
      if (c > best) {
        best = c;
        bk = k;
      }
    }
    if (best > 0.0) {
      Vec psi = v.X.norming_functional(v.components[bk]);
      for (std::size_t d = 0; d < atoms; ++d)
        out.rows[bk][d] = v.X.weights()[d] * psi[d];
    }
    out.value = best;
    return out;
  }
  FunctionSpace cod = FunctionSpace::weighted_lr(q, Vec(n, 1.0));
  const Vec& w = v.X.weights();
  auto pairing = [&](const std::vector<Vec>& rows) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t d = 0; d < atoms; ++d)
        s += rows[k][d] * v.components[k][d];
    return s;
  };
  auto certificate = [&](const std::vector<Vec>& rows) {
    Vec dn(n);
    for (std::size_t k = 0; k < n; ++k) {
      Vec psi(atoms);
      for (std::size_t d = 0; d < atoms; ++d) psi[d] = rows[k][d] / w[d];
      dn[k] = v.X.dual_norm(psi);
    }
    double b1 = lp(dn, q);
    OperatorMatrix U(v.X, cod, rows);
    double b2 = operator_norm_upper(U.modulus());
    double bound = std::min(b1, b2);
    // domain exponent r = q puts u in the exact regime where the regular
    // constant collapses to the operator norm
    if (v.X.lr_exponent() == q)
      bound = std::min(bound, operator_norm_upper(U));
    return bound;
  };
  auto consider = [&](const std::vector<Vec>& rows) {
    double c = certificate(rows);
    if (c <= 1e-14) return;
    double val = pairing(rows) / c;
    if (val > out.value) {
      out.value = val;
      out.rows = rows;
      for (auto& r : out.rows)
        for (double& x : r) x /= c;
    }
  };

  // rank-one rows per component
  std::vector<Vec> base(n, Vec(atoms, 0.0));
  for (std::size_t k = 0; k < n; ++k) {
    if (vec_linf(v.components[k]) == 0.0) continue;
    std::vector<Vec> rows(n, Vec(atoms, 0.0));
    Vec psi = v.X.norming_functional(v.components[k]);
    for (std::size_t d = 0; d < atoms; ++d) rows[k][d] = w[d] * psi[d];
    base[k] = rows[k];
    consider(rows);
  }
  consider(base);

  // direction rows from the descent-optimal scaling: the norming functional
  // of the pooled profile S split by the pointwise q-sum shares, with the
  // per-row coefficients re-optimized below
  std::size_t m = act.comps.size();
  std::vector<Vec> dir(n, Vec(atoms, 0.0));
  {
    Vec S(atoms, 0.0);
    std::vector<Vec> x(m, Vec(atoms, 0.0));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t d = 0; d < atoms; ++d)
        x[i][d] = (*act.comps[i])[d] / opt_scaling[i];
    if (q.is_inf()) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t d = 0; d < atoms; ++d)
          S[d] = std::max(S[d], std::abs(x[i][d]));
    } else {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t d = 0; d < atoms; ++d)
          S[d] += std::pow(std::abs(x[i][d]), q.value());
      for (std::size_t d = 0; d < atoms; ++d)
        S[d] = std::pow(S[d], 1.0 / q.value());
    }
    Vec psi = v.X.norming_functional(S);
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t k = act.index[i];
      for (std::size_t d = 0; d < atoms; ++d) {
        if (S[d] <= 0.0) continue;
        double share;
        if (q.is_inf()) {
          // select the pointwise maximizer (first wins ties)
          share = 0.0;
          std::size_t best_i = 0;
          double best_v = -1.0;
          for (std::size_t j = 0; j < m; ++j)
            if (std::abs(x[j][d]) > best_v) {
              best_v = std::abs(x[j][d]);
              best_i = j;
            }
          if (best_i == i) share = 1.0;
        } else if (q.value() == 1.0) {
          share = 1.0;
        } else {
          share = std::pow(std::abs(x[i][d]) / S[d], q.value() - 1.0);
        }
        dir[k][d] = w[d] * psi[d] * share * sgn(x[i][d]);
      }
    }
    consider(dir);
  }

  // golden-section ascent over per-row log scalings of the direction rows
  auto row_scaled = [&](const std::vector<Vec>& rows, const Vec& logc) {
    std::vector<Vec> rr = rows;
    for (std::size_t i = 0; i < m; ++i) {
      double c = std::exp(logc[i]);
      for (double& x : rr[act.index[i]]) x *= c;
    }
    return rr;
  };
  for (const std::vector<Vec>* fam : {&dir, &base}) {
    Vec logc(m, 0.0);
    auto value_at = [&](const Vec& lc) {
      std::vector<Vec> rr = row_scaled(*fam, lc);
      double c = certificate(rr);
      if (c <= 1e-14) return 0.0;
      return pairing(rr) / c;
    };
    double cur = value_at(logc);
    for (int pass = 0; pass < 12; ++pass) {
      double prev = cur;
      for (std::size_t i = 0; i < m; ++i) {
        auto slice = [&](double t) {
          Vec lc = logc;
          lc[i] = t;
          return -value_at(lc);
        };
        double t = golden_min(slice, logc[i] - 1.5, logc[i] + 1.5, 1e-10);
        double fv = -slice(t);
        if (fv > cur) {
          logc[i] = t;
          cur = fv;
        }
      }
      if (cur <= prev * (1.0 + 1e-11)) break;
    }
    consider(row_scaled(*fam, logc));
  }

  // free-entry coordinate ascent from the best candidate so far; the
  // certificate stays cheap, so this is the workhorse phase
  {
    const double inv_phi = 0.6180339887498949;
    std::vector<Vec> rows = out.rows;
    auto obj = [&](const std::vector<Vec>& rr) {
      double c = certificate(rr);
      if (c <= 1e-14) return 0.0;
      return pairing(rr) / c;
    };
    double cur = obj(rows);
    for (int pass = 0; pass < 40; ++pass) {
      double prev = cur;
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t d = 0; d < atoms; ++d) {
          auto slice = [&](double t) {
            std::vector<Vec> rr = rows;
            rr[k][d] = t;
            return obj(rr);
          };
          double span = 0.5 + 0.5 * std::abs(rows[k][d]);
          double a = rows[k][d] - span, b = rows[k][d] + span;
          double c1 = b - inv_phi * (b - a), d1 = a + inv_phi * (b - a);
          double f1 = slice(c1), f2 = slice(d1);
          while (b - a > 1e-9) {
            if (f1 > f2) {
              b = d1; d1 = c1; f2 = f1; c1 = b - inv_phi * (b - a);
              f1 = slice(c1);
            } else {
              a = c1; c1 = d1; f1 = f2; d1 = a + inv_phi * (b - a);
              f2 = slice(d1);
            }
          }
          double t = f1 > f2 ? c1 : d1;
          double fv = slice(t);
          if (fv > cur) { rows[k][d] = t; cur = fv; }
        }
      if (cur <= prev * (1.0 + 1e-10)) break;
    }
    consider(rows);
  }

  // seeded multiplicative perturbations of the norming-diagonal rows
  Rng rng(seed);
  for (int restart = 0; restart < 4; ++restart) {
    std::vector<Vec> rows = base;
    for (auto& r : rows)
      for (double& x : r) x *= std::exp(0.3 * rng.gaussian());
    double c = certificate(rows);
    if (c <= 1e-14) continue;
    double cur = pairing(rows) / c;
    for (int it = 0; it < 25; ++it) {
      bool improved = false;
      for (std::size_t k = 0; k < n; ++k) {
        for (double f : {1.25, 0.8}) {
          std::vector<Vec> trial = rows;
          for (double& x : trial[k]) x *= f;
          double tc = certificate(trial);
          if (tc <= 1e-14) continue;
          double tv = pairing(trial) / tc;
          if (tv > cur * (1.0 + 1e-12)) {
            rows = trial;
            cur = tv;
            improved = true;
          }
        }
      }
      if (!improved) break;
    }
    if (cur > out.value) {
      out.value = cur;
      double c2 = certificate(rows);
      out.rows = rows;
      for (auto& r : out.rows)
        for (double& x : r) x /= c2;
    }
  }
  return out;
}

VectorTuple rows_as_tuple(const FunctionSpace& X,
                          const std::vector<Vec>& rows) {
  return VectorTuple(X, rows);
}

std::vector<Vec> mat_mul(const std::vector<Vec>& A, const std::vector<Vec>& B) {
  std::size_t r = A.size(), m = B.size(), c = B[0].size();
  std::vector<Vec> out(r, Vec(c, 0.0));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t k = 0; k < m; ++k) {
      double a = A[i][k];
      if (a == 0.0) continue;
      for (std::size_t j = 0; j < c; ++j) out[i][j] += a * B[k][j];
    }
  return out;
}

// Gaussian elimination with partial pivoting; the callers solve only
// rank-checked Gram systems and full-rank basis systems.
Vec solve_lin(std::vector<Vec> G, Vec b) {
  std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(G[r][col]) > std::abs(G[piv][col])) piv = r;
    std::swap(G[piv], G[col]);
    std::swap(b[piv], b[col]);
    require(std::abs(G[col][col]) > 1e-14,
            "linear system is numerically singular");
    for (std::size_t r = col + 1; r < n; ++r) {
      double f = G[r][col] / G[col][col];
      for (std::size_t c2 = col; c2 < n; ++c2) G[r][c2] -= f * G[col][c2];
      b[r] -= f * b[col];
    }
  }
  Vec x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= G[i][j] * x[j];
    x[i] = s / G[i][i];
  }
  return x;
}

// |max_i |T x_i||_cod for a stored budget-one witness tuple; convex in the
// matrix, so these provide the cutting-plane surrogate of the constant.
double tuple_value(const FunctionSpace& cod, const std::vector<Vec>& rows,
                   const VectorTuple& t) {
  std::size_t n = cod.atoms();
  Vec z(n, 0.0);
  for (const Vec& x : t.members)
    for (std::size_t k = 0; k < n; ++k) {
      double s = 0.0;
      for (std::size_t d = 0; d < x.size(); ++d) s += rows[k][d] * x[d];
      z[k] = std::max(z[k], std::abs(s));
    }
  return cod.norm(z);
}

std::vector<Vec> tuple_subgradient(const FunctionSpace& cod, const Exponent& q,
                                   const std::vector<Vec>& rows,
                                   const VectorTuple& t) {
  std::size_t n = cod.atoms();
  std::size_t N = rows[0].size();
  Vec z(n, 0.0);
  std::vector<std::size_t> arg(n, 0);
  Vec sign(n, 0.0);
  for (std::size_t i = 0; i < t.members.size(); ++i) {
    const Vec& x = t.members[i];
    for (std::size_t k = 0; k < n; ++k) {
      double s = 0.0;
      for (std::size_t d = 0; d < N; ++d) s += rows[k][d] * x[d];
      if (std::abs(s) > z[k]) {
        z[k] = std::abs(s);
        arg[k] = i;
        sign[k] = s >= 0.0 ? 1.0 : -1.0;
      }
    }
  }
  std::vector<Vec> G(n, Vec(N, 0.0));
  double nrm = cod.norm(z);
  if (nrm <= 0.0) return G;
  if (q.is_inf()) {
    std::size_t ks = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (z[k] > z[ks]) ks = k;
    for (std::size_t d = 0; d < N; ++d)
      G[ks][d] = sign[ks] * t.members[arg[ks]][d];
    return G;
  }
  const Vec& nu = cod.weights();
  double qv = q.value();
  for (std::size_t k = 0; k < n; ++k) {
    if (z[k] <= 0.0) continue;
    double coef = nu[k] * std::pow(z[k] / nrm, qv - 1.0) * sign[k];
    for (std::size_t d = 0; d < N; ++d)
      G[k][d] = coef * t.members[arg[k]][d];
  }
  return G;
}

}  // namespace

Subspace::Subspace(FunctionSpace ambient_space, std::vector<Vec> basis_vectors)
    : ambient(std::move(ambient_space)), basis(std::move(basis_vectors)) {
  require(!basis.empty(), "subspace basis must be nonempty");
  std::size_t N = ambient.atoms();
  require(basis.size() <= N, "subspace basis exceeds the ambient dimension");
  for (const Vec& b : basis)
    require(b.size() == N, "basis vector length must match the ambient atoms");
  // modified Gram-Schmidt rank check
  std::vector<Vec> ortho;
  for (const Vec& b : basis) {
    Vec r = b;
    for (const Vec& o : ortho) {
      double c = 0.0;
      for (std::size_t d = 0; d < N; ++d) c += r[d] * o[d];
      for (std::size_t d = 0; d < N; ++d) r[d] -= c * o[d];
    }
    double nrm = vec_l2(r);
    require(nrm > 1e-10 * std::max(1.0, vec_l2(b)),
            "subspace basis has a rank defect");
    for (double& x : r) x /= nrm;
    ortho.push_back(r);
  }
}

ZElement::ZElement(FunctionSpace space, std::vector<Vec> comps)
    : X(std::move(space)), components(std::move(comps)) {
  require(!components.empty(), "element needs at least one component");
  for (const Vec& f : components)
    require(f.size() == X.atoms(),
            "component length must match the lattice atoms");
}

NormEstimate z_norm(const ZElement& v, const Exponent& q, std::uint64_t seed) {
  require(q >= Exponent(1.0), "q must be at least 1");
  NormEstimate est;
  ZActive act = active_components(v);
  if (act.comps.empty()) {
    est.upper = 0.0;
    est.upper_kind = UpperKind::OracleExact;
    est.upper_name = "zero element";
    est.lower_witness = rows_as_tuple(
        v.X, std::vector<Vec>(v.n(), Vec(v.X.atoms(), 0.0)));
    return est;
  }
  std::size_t m = act.comps.size();
  Vec opt(m, 1.0);
  if (m == 1) {
    est.upper = v.X.norm(*act.comps[0]);
    est.upper_kind = UpperKind::OracleExact;
    est.upper_name = "single component";
  } else if (q == Exponent(1.0)) {
    // all scalings equal is optimal: the first factor is max a_i and the
    // second is monotone in each 1/a_i
    Vec s(v.X.atoms(), 0.0);
    for (const Vec* f : act.comps)
      for (std::size_t d = 0; d < s.size(); ++d) s[d] += std::abs((*f)[d]);
    est.upper = v.X.norm(s);
    est.upper_kind = UpperKind::OracleExact;
    est.upper_name = "q = 1 collapse";
  } else {
    Exponent qp = conjugate_exponent(q);
    auto F = [&](const Vec& t) {
      return z_objective_log(v.X, act.comps, q, qp, t);
    };
    std::vector<Vec> starts;
    starts.push_back(Vec(m, 0.0));
    Vec prof(m);
    for (std::size_t i = 0; i < m; ++i)
      prof[i] = std::log(std::max(v.X.norm(*act.comps[i]), 1e-8));
    starts.push_back(prof);
    Rng rng(seed);
    for (int s = 0; s < 2; ++s) {
      Vec t(m);
      for (double& x : t) x = 0.5 * rng.gaussian();
      starts.push_back(t);
    }
    double best = std::numeric_limits<double>::infinity();
    Vec best_t(m, 0.0);
    for (Vec& t0 : starts) {
      Vec t = t0;
      double val = coordinate_descent(F, t, 300, 1e-10);
      if (val < best) {
        best = val;
        best_t = t;
      }
    }
    auto G = [&](const Vec& t) {
      return z_subgrad_log(v.X, act.comps, q, t);
    };
    Vec t = ellipsoid_refine(F, G, best_t, 4.0,
                             600 + 400 * static_cast<int>(m - 1));
    double val = coordinate_descent(F, t, 60, 1e-12);
    if (val < best) {
      best = val;
      best_t = t;
    }
    for (std::size_t i = 0; i < m; ++i) opt[i] = std::exp(best_t[i]);
    est.upper = best;
    est.upper_kind = UpperKind::AnalyticBound;
    est.upper_name = "scaling representation";
  }
  PairLower pl = pair_lower_bound(v, q, act, opt, seed ^ 0x5eedbeefULL);
  est.lower = std::min(pl.value, est.upper);
  est.lower_witness = rows_as_tuple(v.X, pl.rows);
  return est;
}

NormEstimate calderon_product_norm(const ZElement& v, const Exponent& q) {
  require(q >= Exponent(1.0), "q must be at least 1");
  NormEstimate est;
  ZActive act = active_components(v);
  if (act.comps.empty()) {
    est.upper = 0.0;
    est.upper_kind = UpperKind::OracleExact;
    est.upper_name = "zero element";
    est.lower_witness = rows_as_tuple(
        v.X, std::vector<Vec>(v.n(), Vec(v.X.atoms(), 0.0)));
    return est;
  }
  std::size_t m = act.comps.size();
  Vec opt(m, 1.0);
  if (m == 1) {
    est.upper = v.X.norm(*act.comps[0]);
    est.upper_kind = UpperKind::OracleExact;
    est.upper_name = "single component";
  } else if (q == Exponent(1.0)) {
    Vec s(v.X.atoms(), 0.0);
    for (const Vec* f : act.comps)
      for (std::size_t d = 0; d < s.size(); ++d) s[d] += std::abs((*f)[d]);
    est.upper = v.X.norm(s);
    est.upper_kind = UpperKind::OracleExact;
    est.upper_name = "q = 1 collapse";
  } else {
    auto F = [&](const Vec& u) {
      return product_objective_log(v.X, act.comps, q, u);
    };
    double qpv = q.is_inf() ? 1.0 : q.value() / (q.value() - 1.0);
    std::vector<Vec> starts;
    starts.push_back(Vec(m, 0.0));
    Vec prof(m);
    for (std::size_t i = 0; i < m; ++i)
      prof[i] = qpv * std::log(std::max(v.X.norm(*act.comps[i]), 1e-8));
    starts.push_back(prof);
    Rng srng(0x0cedULL);
    for (int s = 0; s < 2; ++s) {
      Vec u(m);
      for (double& x : u) x = qpv * 0.5 * srng.gaussian();
      starts.push_back(u);
    }
    double best = std::numeric_limits<double>::infinity();
    Vec best_u(m, 0.0);
    for (Vec& u0 : starts) {
      Vec u = u0;
      double cur = F(u);
      for (int pass = 0; pass < 400; ++pass) {
        double moved = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          auto slice = [&](double x) {
            Vec uu = u;
            uu[i] = x;
            return F(uu);
          };
          double lo = u[i] - 2.0, hi = u[i] + 2.0;
          for (int e = 0; e < 10 && slice(lo) < cur; ++e) lo -= (u[i] - lo);
          for (int e = 0; e < 10 && slice(hi) < cur; ++e) hi += (hi - u[i]);
          double x = ternary_min(slice, lo, hi, 1e-11);
          double fv = slice(x);
          if (fv < cur) {
            moved = std::max(moved, std::abs(x - u[i]));
            u[i] = x;
            cur = fv;
          }
        }
        double mean = 0.0;
        for (double x : u) mean += x;
        mean /= static_cast<double>(m);
        for (double& x : u) x -= mean;
        if (moved < 1e-11) break;
      }
      for (int rep = 0; rep < 3 && m >= 2; ++rep)
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = i + 1; j < m; ++j) {
            auto slice = [&](double d) {
              Vec uu = u;
              uu[i] += d;
              uu[j] -= d;
              return F(uu);
            };
            double d = ternary_min(slice, -1.0, 1.0, 1e-11);
            double fv = slice(d);
            if (fv < cur) {
              u[i] += d;
              u[j] -= d;
              cur = fv;
            }
          }
      if (cur < best) {
        best = cur;
        best_u = u;
      }
    }
    auto G = [&](const Vec& u) {
      Vec tt(m);
      for (std::size_t i = 0; i < m; ++i) tt[i] = u[i] / qpv;
      Vec g = z_subgrad_log(v.X, act.comps, q, tt);
      for (double& x : g) x /= qpv;
      return g;
    };
    Vec u = ellipsoid_refine(F, G, best_u, 4.0 * qpv,
                             600 + 400 * static_cast<int>(m - 1));
    double uv = F(u);
    if (uv < best) {
      best = uv;
      best_u = u;
    }
    est.upper = best;
    est.upper_kind = UpperKind::AnalyticBound;
    est.upper_name = "product decomposition";
    // the scaling representation uses a = c^{1/q'}
    for (std::size_t i = 0; i < m; ++i) opt[i] = std::exp(best_u[i] / qpv);
  }
  PairLower pl = pair_lower_bound(v, q, act, opt, 0x5eedULL);
  est.lower = std::min(pl.value, est.upper);
  est.lower_witness = rows_as_tuple(v.X, pl.rows);
  return est;
}

NormEstimate rho_restricted_lower(const Subspace& domain,
                                  const std::vector<Vec>& images,
                                  const FunctionSpace& codomain,
                                  const Exponent& q, std::size_t tuple_size,
                                  std::uint64_t seed, int restarts) {
  require(q >= Exponent(1.0), "q must be at least 1");
  require(tuple_size >= 1, "tuple size must be positive");
  require(restarts >= 1, "restarts must be positive");
  std::size_t k = domain.basis.size();
  std::size_t N = domain.ambient.atoms();
  std::size_t n = codomain.atoms();
  require(images.size() == k, "one image per basis vector required");
  for (const Vec& y : images)
    require(y.size() == n, "image length must match the codomain atoms");
  NormEstimate est;
  if (k == 1) {
    double den = domain.ambient.norm(domain.basis[0]);
    double val = codomain.norm(images[0]) / den;
    est.lower = val;
    est.upper = val;
    est.upper_kind = UpperKind::OracleExact;
    est.upper_name = "one-dimensional restriction";
    Vec x = domain.basis[0];
    for (double& t : x) t /= den;
    est.lower_witness = VectorTuple(domain.ambient, {x});
    est.dual_witness = VectorTuple(
        FunctionSpace::weighted_lr(q, Vec(1, 1.0)), {Vec(1, 1.0 / den)});
    return est;
  }
  auto ratio = [&](const std::vector<Vec>& c) {
    Vec z(n, 0.0);
    Vec s(N, 0.0);
    for (const Vec& ci : c) {
      Vec y(n, 0.0);
      Vec x(N, 0.0);
      for (std::size_t j = 0; j < k; ++j) {
        if (ci[j] == 0.0) continue;
        for (std::size_t kk = 0; kk < n; ++kk) y[kk] += ci[j] * images[j][kk];
        for (std::size_t d = 0; d < N; ++d) x[d] += ci[j] * domain.basis[j][d];
      }
      for (std::size_t kk = 0; kk < n; ++kk)
        z[kk] = std::max(z[kk], std::abs(y[kk]));
      if (q.is_inf()) {
        for (std::size_t d = 0; d < N; ++d)
          s[d] = std::max(s[d], std::abs(x[d]));
      } else {
        for (std::size_t d = 0; d < N; ++d)
          s[d] += std::pow(std::abs(x[d]), q.value());
      }
    }
    if (!q.is_inf())
      for (std::size_t d = 0; d < N; ++d) s[d] = std::pow(s[d], 1.0 / q.value());
    double den = domain.ambient.norm(s);
    if (den < 1e-14) return 0.0;
    return codomain.norm(z) / den;
  };
  Rng rng(seed);
  double best = 0.0;
  std::vector<Vec> best_c(tuple_size, Vec(k, 0.0));
  int structured = static_cast<int>(k);
  for (int r = 0; r < restarts + structured; ++r) {
    std::vector<Vec> c(tuple_size, Vec(k, 0.0));
    if (r < structured) {
      for (std::size_t i = 0; i < tuple_size; ++i)
        c[i][(static_cast<std::size_t>(r) + i) % k] = 1.0;
    } else {
      for (Vec& ci : c)
        for (double& x : ci) x = rng.gaussian();
    }
    double cur = ratio(c);
    for (int pass = 0; pass < 40; ++pass) {
      double prev = cur;
      for (std::size_t i = 0; i < tuple_size; ++i)
        for (std::size_t j = 0; j < k; ++j) {
          auto slice = [&](double x) {
            std::vector<Vec> cc = c;
            cc[i][j] = x;
            return -ratio(cc);
          };
          double span = 1.0 + std::abs(c[i][j]);
          double x =
              golden_min(slice, c[i][j] - span, c[i][j] + span, 1e-11);
          double fv = -slice(x);
          if (fv > cur) {
            c[i][j] = x;
            cur = fv;
          }
        }
      if (cur <= prev * (1.0 + 1e-11)) break;
    }
    if (cur > best) {
      best = cur;
      best_c = c;
    }
  }
  est.lower = best;
  // budget-normalize the ambient witness tuple
  {
    std::vector<Vec> xs(tuple_size, Vec(N, 0.0));
    for (std::size_t i = 0; i < tuple_size; ++i)
      for (std::size_t j = 0; j < k; ++j)
        for (std::size_t d = 0; d < N; ++d)
          xs[i][d] += best_c[i][j] * domain.basis[j][d];
    VectorTuple t(domain.ambient, xs);
    double budget = psum_norm(t, q);
    if (budget > 1e-14) {
      for (Vec& x : t.members)
        for (double& xx : x) xx /= budget;
      for (Vec& ci : best_c)
        for (double& xx : ci) xx /= budget;
    }
    est.lower_witness = t;
    est.dual_witness =
        VectorTuple(FunctionSpace::weighted_lr(q, Vec(k, 1.0)), best_c);
  }
  return est;
}

OperatorMatrix hahn_banach_extend(const Subspace& domain,
                                  const std::vector<Vec>& images,
                                  const Exponent& q, std::uint64_t seed) {
  require(q >= Exponent(1.0), "q must be at least 1");
  require(domain.ambient.kind() == NormKind::WeightedLr,
          "ambient lattice must be a weighted L_r space");
  require(domain.ambient.lr_exponent() >= q,
          "ambient exponent must be at least q (q-convexity)");
  std::size_t k = domain.basis.size();
  std::size_t N = domain.ambient.atoms();
  require(images.size() == k, "one image per basis vector required");
  require(!images[0].empty(), "images must be nonempty");
  std::size_t n = images[0].size();
  for (const Vec& y : images)
    require(y.size() == n, "images must share one length");
  FunctionSpace cod = FunctionSpace::weighted_lr(q, Vec(n, 1.0));

  bool zero = true;
  for (const Vec& y : images)
    if (vec_linf(y) > 0.0) zero = false;
  if (zero)
    return OperatorMatrix(domain.ambient, cod,
                          std::vector<Vec>(n, Vec(N, 0.0)));

  // image matrix U (n x k) and Gram data
  std::vector<Vec> U(n, Vec(k, 0.0));
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t kk = 0; kk < n; ++kk) U[kk][j] = images[j][kk];
  std::vector<Vec> G(k, Vec(k, 0.0));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t d = 0; d < N; ++d)
        s += domain.basis[i][d] * domain.basis[j][d];
      G[i][j] = s;
    }
  std::vector<Vec> GinvBt(k, Vec(N, 0.0));
  for (std::size_t d = 0; d < N; ++d) {
    Vec b(k);
    for (std::size_t j = 0; j < k; ++j) b[j] = domain.basis[j][d];
    Vec x = solve_lin(G, b);
    for (std::size_t j = 0; j < k; ++j) GinvBt[j][d] = x[j];
  }
  std::vector<Vec> rows = mat_mul(U, GinvBt);
  if (k == N) {
    // full span: the interpolant is the unique (hence exact) extension
    return OperatorMatrix(domain.ambient, cod, rows);
  }

  // step directions are projected onto the matrices vanishing on the span
  auto project = [&](std::vector<Vec>& D) {
    for (std::size_t kk = 0; kk < n; ++kk) {
      Vec coeff(k, 0.0);
      for (std::size_t j = 0; j < k; ++j) {
        double s = 0.0;
        for (std::size_t d = 0; d < N; ++d)
          s += D[kk][d] * domain.basis[j][d];
        coeff[j] = s;
      }
      for (std::size_t j = 0; j < k; ++j)
        for (std::size_t d = 0; d < N; ++d)
          D[kk][d] -= coeff[j] * GinvBt[j][d];
    }
  };

  std::vector<VectorTuple> bundle;
  auto bundle_max = [&](const std::vector<Vec>& rr) {
    double mx = 0.0;
    for (const VectorTuple& t : bundle)
      mx = std::max(mx, tuple_value(cod, rr, t));
    return mx;
  };
  std::size_t ts = std::min<std::size_t>(n, 4);
  auto certify = [&](const std::vector<Vec>& rr, std::uint64_t s) {
    OperatorMatrix T(domain.ambient, cod, rr);
    NormEstimate e =
        rho_lower_bound(T, RegularityParams{Exponent::inf(), q}, ts, s, 4);
    if (e.lower_witness) {
      VectorTuple t = *e.lower_witness;
      double budget = psum_norm(t, q);
      if (budget > 1e-14) {
        for (Vec& x : t.members)
          for (double& xx : x) xx /= budget;
        bundle.push_back(t);
      }
    }
    return e.lower;
  };

  double cur = std::max(certify(rows, seed), bundle_max(rows));
  std::vector<Vec> best_rows = rows;
  double best = cur;
  double step = 0.5;
  for (int it = 0; it < 250; ++it) {
    double fresh = certify(rows, seed + 17u * static_cast<std::uint64_t>(it + 1));
    double here = std::max(fresh, bundle_max(rows));
    if (here < best) {
      best = here;
      best_rows = rows;
    }
    double worst = -1.0;
    const VectorTuple* wt = nullptr;
    for (const VectorTuple& t : bundle) {
      double val = tuple_value(cod, rows, t);
      if (val > worst) {
        worst = val;
        wt = &t;
      }
    }
    if (!wt) break;
    std::vector<Vec> D = tuple_subgradient(cod, q, rows, *wt);
    project(D);
    double gn = 0.0;
    for (const Vec& r : D)
      for (double x : r) gn += x * x;
    gn = std::sqrt(gn);
    if (gn < 1e-14) break;
    bool accepted = false;
    for (int h = 0; h < 20 && !accepted; ++h) {
      std::vector<Vec> trial = rows;
      for (std::size_t kk = 0; kk < n; ++kk)
        for (std::size_t d = 0; d < N; ++d)
          trial[kk][d] -= step / gn * D[kk][d];
      double tv = bundle_max(trial);
      if (tv < worst - 1e-14) {
        rows = trial;
        accepted = true;
        step *= 1.3;
      } else {
        step *= 0.5;
      }
    }
    if (!accepted && step < 1e-12) break;
    if (bundle.size() > 60) bundle.erase(bundle.begin());
  }

  // re-impose agreement on the basis exactly (Gram correction)
  {
    std::vector<Vec> R(n, Vec(k, 0.0));
    for (std::size_t kk = 0; kk < n; ++kk)
      for (std::size_t j = 0; j < k; ++j) {
        double s = 0.0;
        for (std::size_t d = 0; d < N; ++d)
          s += best_rows[kk][d] * domain.basis[j][d];
        R[kk][j] = s - U[kk][j];
      }
    std::vector<Vec> corr = mat_mul(R, GinvBt);
    for (std::size_t kk = 0; kk < n; ++kk)
      for (std::size_t d = 0; d < N; ++d) best_rows[kk][d] -= corr[kk][d];
  }
  return OperatorMatrix(domain.ambient, cod, best_rows);
}

OperatorMatrix dyadic_Pn(const DyadicLevel& level, std::size_t atom_count) {
  require(level.level >= 0, "level must be nonnegative");
  require(level.level < 31, "level is limited to 30");
  std::size_t blocks = static_cast<std::size_t>(1) << level.level;
  require(atom_count >= 1, "atom count must be positive");
  require(atom_count % blocks == 0,
          "block count 2^level must divide the atom count");
  std::size_t bs = atom_count / blocks;
  double inv_qp = 1.0 - level.q.inverse();  // 1/q', zero at q = 1
  double pscale = std::pow(2.0, static_cast<double>(level.level) * inv_qp);
  FunctionSpace dom = FunctionSpace::weighted_lr(
      level.q, Vec(atom_count, 1.0 / static_cast<double>(atom_count)));
  FunctionSpace cod = FunctionSpace::weighted_lr(level.q, Vec(blocks, 1.0));
  std::vector<Vec> rows(blocks, Vec(atom_count, 0.0));
  for (std::size_t i = 0; i < blocks; ++i)
    for (std::size_t d = i * bs; d < (i + 1) * bs; ++d)
      rows[i][d] = pscale / static_cast<double>(atom_count);
  return OperatorMatrix(dom, cod, rows);
}

OperatorMatrix dyadic_Jn(const DyadicLevel& level, std::size_t atom_count) {
  require(level.level >= 0, "level must be nonnegative");
  require(level.level < 31, "level is limited to 30");
  std::size_t blocks = static_cast<std::size_t>(1) << level.level;
  require(atom_count >= 1, "atom count must be positive");
  require(atom_count % blocks == 0,
          "block count 2^level must divide the atom count");
  std::size_t bs = atom_count / blocks;
  double jscale =
      std::pow(2.0, static_cast<double>(level.level) * level.q.inverse());
  FunctionSpace dom = FunctionSpace::weighted_lr(level.q, Vec(blocks, 1.0));
  FunctionSpace cod = FunctionSpace::weighted_lr(
      level.q, Vec(atom_count, 1.0 / static_cast<double>(atom_count)));
  std::vector<Vec> rows(atom_count, Vec(blocks, 0.0));
  for (std::size_t d = 0; d < atom_count; ++d) rows[d][d / bs] = jscale;
  return OperatorMatrix(dom, cod, rows);
}

OperatorMatrix extend_operator_Lq(const Subspace& x0,
                                  const std::vector<Vec>& images,
                                  const DyadicLevel& level,
                                  std::uint64_t seed) {
  require(x0.ambient.kind() == NormKind::WeightedLr,
          "ambient lattice must be a weighted L_q space");
  require(x0.ambient.lr_exponent() == level.q,
          "level exponent must match the ambient exponent");
  require(images.size() == x0.basis.size(),
          "one image per basis vector required");
  require(!images[0].empty(), "images must be nonempty");
  std::size_t M = images[0].size();
  for (const Vec& y : images)
    require(y.size() == M, "images must share one length");
  OperatorMatrix P = dyadic_Pn(level, M);
  OperatorMatrix J = dyadic_Jn(level, M);
  std::vector<Vec> compressed;
  compressed.reserve(images.size());
  for (const Vec& y : images) compressed.push_back(P.apply(y));
  OperatorMatrix tilde = hahn_banach_extend(x0, compressed, level.q, seed);
  // J has one nonzero per row, so the composition reads off block rows
  std::size_t blocks = static_cast<std::size_t>(1) << level.level;
  std::size_t bs = M / blocks;
  double jscale =
      std::pow(2.0, static_cast<double>(level.level) * level.q.inverse());
  std::size_t N = x0.ambient.atoms();
  std::vector<Vec> rows(M, Vec(N, 0.0));
  for (std::size_t d = 0; d < M; ++d)
    for (std::size_t c = 0; c < N; ++c)
      rows[d][c] = jscale * tilde.entry(d / bs, c);
  return OperatorMatrix(x0.ambient, J.codomain(), rows);
}

}  // namespace pqreg
