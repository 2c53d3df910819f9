#include "pqreg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "pqreg/calculus.hpp"
#include "pqreg/optim.hpp"
#include "pqreg/simplex.hpp"

namespace pqreg {
namespace {

using Rep = std::vector<TensorTerm>;

Exponent one_e() { return Exponent(1.0); }

void check_tensor_exponents(const Exponent& p, const Exponent& q) {
  require(one_e() <= q && q <= p, "tensor norms need 1 <= q <= p");
}

VectorTuple side_tuple(const FunctionSpace& S, const Rep& rep, bool x_side) {
  std::vector<Vec> members;
  members.reserve(rep.size());
  for (const TensorTerm& t : rep) members.push_back(x_side ? t.x : t.y);
  return VectorTuple(S, std::move(members));
}

double strong_sum_norm(const FunctionSpace& S, const Rep& rep, bool x_side,
                       const Exponent& e) {
  if (e.is_inf()) {
    double m = 0.0;
    for (const TensorTerm& t : rep) m = std::max(m, S.norm(x_side ? t.x : t.y));
    return m;
  }
  double s = 0.0;
  for (const TensorTerm& t : rep)
    s += std::pow(S.norm(x_side ? t.x : t.y), e.value());
  return std::pow(s, 1.0 / e.value());
}

double lattice_sum_norm(const FunctionSpace& S, const Rep& rep, bool x_side,
                        const Exponent& e) {
  return psum_norm(side_tuple(S, rep, x_side), e);
}

// sup over the dual ball of S of the l_e norm of the pairings <v_i, s*>.
// Realized as the norm of the coefficient operator S* -> l_e^n, exact when
// the operator-norm closed forms apply and a certified upper otherwise;
// Custom spaces fall back to the dominating strong sum.
double weak_sum_upper(const FunctionSpace& S, const Rep& rep, bool x_side,
                      const Exponent& e) {
  // A single term's weak factor is the norm itself by the bidual identity.
  if (rep.size() == 1) return S.norm(x_side ? rep[0].x : rep[0].y);
  if (S.kind() != NormKind::WeightedLr)
    return strong_sum_norm(S, rep, x_side, e);
  std::vector<Vec> rows;
  rows.reserve(rep.size());
  for (const TensorTerm& t : rep) {
    const Vec& v = x_side ? t.x : t.y;
    Vec row(S.atoms());
    for (std::size_t b = 0; b < S.atoms(); ++b) row[b] = S.weights()[b] * v[b];
    rows.push_back(std::move(row));
  }
  OperatorMatrix coeff(S.dual_space(),
                       FunctionSpace::weighted_lr(e, Vec(rep.size(), 1.0)),
                       std::move(rows));
  return operator_norm_upper(coeff);
}

double rep_pi(const FunctionSpace& L, const FunctionSpace& R, const Rep& rep) {
  double s = 0.0;
  for (const TensorTerm& t : rep) s += L.norm(t.x) * R.norm(t.y);
  return s;
}

double rep_phi(const FunctionSpace& L, const FunctionSpace& R, const Rep& rep,
               const Exponent& p, const Exponent& q) {
  return lattice_sum_norm(L, rep, true, q) *
         lattice_sum_norm(R, rep, false, conjugate_exponent(p));
}

double rep_delta(const FunctionSpace& L, const FunctionSpace& R, const Rep& rep,
                 const Exponent& p, const Exponent& q) {
  return strong_sum_norm(L, rep, true, q) *
         lattice_sum_norm(R, rep, false, conjugate_exponent(p));
}

double rep_iota(const FunctionSpace& L, const FunctionSpace& R, const Rep& rep,
                const Exponent& p, const Exponent& q) {
  return lattice_sum_norm(L, rep, true, q) *
         strong_sum_norm(R, rep, false, conjugate_exponent(p));
}

double rep_laprete(const FunctionSpace& L, const FunctionSpace& R,
                   const Rep& rep, LapresteNorm kind, const Exponent& p) {
  Exponent pc = conjugate_exponent(p);
  switch (kind) {
    case LapresteNorm::Gp:
      return strong_sum_norm(L, rep, true, p) *
             weak_sum_upper(R, rep, false, pc);
    case LapresteNorm::Dp:
      return weak_sum_upper(L, rep, true, pc) *
             strong_sum_norm(R, rep, false, p);
    case LapresteNorm::Wp:
    default:
      return weak_sum_upper(L, rep, true, p) *
             weak_sum_upper(R, rep, false, pc);
  }
}

// --- representation search ----------------------------------------------------
//
// Upper bounds minimize a representation objective over term lists describing
// the same element. Moves preserve the element: rotation mixes of a term pair,
// per-term scale transfer (t x_i, y_i / t), merges of parallel factors, and
// removal of exactly-zero terms.

using RepObjective = std::function<double(const Rep&)>;

struct SearchedRep {
  Rep rep;
  double value = 0.0;
};

double golden_min(const std::function<double(double)>& f, double lo, double hi,
                  int iters) {
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - ratio * (b - a), x2 = a + ratio * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int k = 0; k < iters; ++k) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - ratio * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + ratio * (b - a);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? x1 : x2;
}

Rep rotated_pair(const Rep& rep, std::size_t i, std::size_t j, double theta) {
  Rep out = rep;
  double c = std::cos(theta), s = std::sin(theta);
  for (std::size_t a = 0; a < rep[i].x.size(); ++a) {
    out[i].x[a] = c * rep[i].x[a] + s * rep[j].x[a];
    out[j].x[a] = -s * rep[i].x[a] + c * rep[j].x[a];
  }
  for (std::size_t b = 0; b < rep[i].y.size(); ++b) {
    out[i].y[b] = c * rep[i].y[b] + s * rep[j].y[b];
    out[j].y[b] = -s * rep[i].y[b] + c * rep[j].y[b];
  }
  return out;
}

Rep scaled_term(const Rep& rep, std::size_t i, double t) {
  Rep out = rep;
  for (double& v : out[i].x) v *= t;
  for (double& v : out[i].y) v /= t;
  return out;
}

void drop_zero_terms(const FunctionSpace& L, const FunctionSpace& R, Rep& rep) {
  Rep kept;
  for (const TensorTerm& t : rep)
    if (L.norm(t.x) > 0.0 && R.norm(t.y) > 0.0) kept.push_back(t);
  if (kept.empty())
    kept.push_back(TensorTerm{Vec(L.atoms(), 0.0), Vec(R.atoms(), 0.0)});
  rep = std::move(kept);
}

SearchedRep polish_rep(const FunctionSpace& L, const FunctionSpace& R, Rep rep,
                       const RepObjective& obj, bool scaling_moves) {
  drop_zero_terms(L, R, rep);
  double value = obj(rep);
  const double kPi = 3.14159265358979323846;

  for (int sweep = 0; sweep < 40; ++sweep) {
    bool improved = false;

    for (std::size_t i = 0; i + 1 < rep.size(); ++i) {
      for (std::size_t j = i + 1; j < rep.size(); ++j) {
        auto at = [&](double th) { return obj(rotated_pair(rep, i, j, th)); };
        double best_th = 0.0, best_val = value;
        for (int g = 1; g < 16; ++g) {
          double th = kPi * g / 16.0;
          double v = at(th);
          if (v < best_val) {
            best_val = v;
            best_th = th;
          }
        }
        if (best_val < value * (1.0 - 1e-12)) {
          double th = golden_min(at, best_th - kPi / 16.0,
                                 best_th + kPi / 16.0, 40);
          double v = at(th);
          if (v < best_val) {
            best_val = v;
            best_th = th;
          }
          rep = rotated_pair(rep, i, j, best_th);
          value = best_val;
          improved = true;
        }
      }
    }

    if (scaling_moves) {
      for (std::size_t i = 0; i < rep.size(); ++i) {
        if (L.norm(rep[i].x) == 0.0 || R.norm(rep[i].y) == 0.0) continue;
        auto at = [&](double logt) {
          return obj(scaled_term(rep, i, std::exp(logt)));
        };
        double best_l = 0.0, best_val = value;
        for (int g = -6; g <= 6; ++g) {
          if (g == 0) continue;
          double v = at(0.5 * g);
          if (v < best_val) {
            best_val = v;
            best_l = 0.5 * g;
          }
        }
        if (best_val < value * (1.0 - 1e-12)) {
          double l = golden_min(at, best_l - 0.5, best_l + 0.5, 40);
          double v = at(l);
          if (v < best_val) {
            best_val = v;
            best_l = l;
          }
          rep = scaled_term(rep, i, std::exp(best_l));
          value = best_val;
          improved = true;
        }
      }
    }

    // Merge a term whose x (or y) factor is parallel to another's.
    for (std::size_t i = 0; i + 1 < rep.size() && !rep.empty(); ++i) {
      for (std::size_t j = i + 1; j < rep.size(); ++j) {
        auto parallel = [](const Vec& u, const Vec& v, double& lambda) {
          double dot = 0.0, nn = 0.0, vscale = 0.0;
          for (std::size_t a = 0; a < u.size(); ++a) {
            dot += u[a] * v[a];
            nn += u[a] * u[a];
            vscale = std::max(vscale, std::abs(v[a]));
          }
          if (nn == 0.0) return false;
          lambda = dot / nn;
          double resid = 0.0;
          for (std::size_t a = 0; a < u.size(); ++a) {
            double r = v[a] - lambda * u[a];
            resid = std::max(resid, std::abs(r));
          }
          return resid <= 1e-13 * std::max(vscale, 1e-300);
        };
        double lambda = 0.0;
        Rep merged;
        if (parallel(rep[i].x, rep[j].x, lambda)) {
          merged = rep;
          for (std::size_t b = 0; b < merged[i].y.size(); ++b)
            merged[i].y[b] += lambda * merged[j].y[b];
          merged.erase(merged.begin() + j);
        } else if (parallel(rep[i].y, rep[j].y, lambda)) {
          merged = rep;
          for (std::size_t a = 0; a < merged[i].x.size(); ++a)
            merged[i].x[a] += lambda * merged[j].x[a];
          merged.erase(merged.begin() + j);
        } else {
          continue;
        }
        double v = obj(merged);
        if (v < value * (1.0 + 1e-12)) {
          rep = std::move(merged);
          value = std::min(value, v);
          improved = true;
          break;
        }
      }
    }

    if (!improved) break;
  }
  return SearchedRep{std::move(rep), value};
}

std::vector<Rep> candidate_starts(const Tensor& z,
                                  const std::vector<Vec>& M) {
  const FunctionSpace& L = z.left_space;
  const FunctionSpace& R = z.right_space;
  std::vector<Rep> starts;
  starts.push_back(z.terms);

  Rep rows;
  for (std::size_t a = 0; a < L.atoms(); ++a) {
    double scale = 0.0;
    for (double v : M[a]) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) continue;
    Vec e(L.atoms(), 0.0);
    e[a] = 1.0;
    rows.push_back(TensorTerm{std::move(e), M[a]});
  }
  if (!rows.empty()) starts.push_back(std::move(rows));

  Rep cols;
  for (std::size_t b = 0; b < R.atoms(); ++b) {
    Vec col(L.atoms());
    double scale = 0.0;
    for (std::size_t a = 0; a < L.atoms(); ++a) {
      col[a] = M[a][b];
      scale = std::max(scale, std::abs(col[a]));
    }
    if (scale == 0.0) continue;
    Vec e(R.atoms(), 0.0);
    e[b] = 1.0;
    cols.push_back(TensorTerm{std::move(col), std::move(e)});
  }
  if (!cols.empty()) starts.push_back(std::move(cols));
  return starts;
}

SearchedRep upper_search(const Tensor& z, const RepObjective& obj,
                         bool scaling_moves) {
  std::vector<Vec> M = canonical_matrix(z);
  SearchedRep best;
  best.value = std::numeric_limits<double>::infinity();
  for (Rep& start : candidate_starts(z, M)) {
    SearchedRep cand =
        polish_rep(z.left_space, z.right_space, std::move(start), obj,
                   scaling_moves);
    if (cand.value < best.value) best = std::move(cand);
  }
  return best;
}

// --- block splitting ----------------------------------------------------------

struct BlockSplit {
  std::vector<Rep> blocks;
  double value = 0.0;
};

BlockSplit polish_blocks(const FunctionSpace& L, const FunctionSpace& R,
                         const std::vector<Rep>& blocks,
                         const RepObjective& obj, bool scaling_moves) {
  BlockSplit out;
  for (const Rep& block : blocks) {
    if (block.empty()) continue;
    SearchedRep polished = polish_rep(L, R, block, obj, scaling_moves);
    out.value += polished.value;
    out.blocks.push_back(std::move(polished.rep));
  }
  return out;
}

// Assign terms of a fixed representation to at most max_blocks groups,
// greedily reassigning single terms while the raw objective sum improves.
BlockSplit block_search(const FunctionSpace& L, const FunctionSpace& R,
                        const Rep& rep, const RepObjective& obj,
                        int max_blocks, std::uint64_t seed,
                        bool scaling_moves) {
  const std::size_t n = rep.size();
  max_blocks = std::max(1, max_blocks);
  auto split_value = [&](const std::vector<int>& assign, int blocks) {
    double total = 0.0;
    for (int jb = 0; jb < blocks; ++jb) {
      Rep block;
      for (std::size_t i = 0; i < n; ++i)
        if (assign[i] == jb) block.push_back(rep[i]);
      if (!block.empty()) total += obj(block);
    }
    return total;
  };
  auto to_blocks = [&](const std::vector<int>& assign, int blocks) {
    std::vector<Rep> out(blocks);
    for (std::size_t i = 0; i < n; ++i) out[assign[i]].push_back(rep[i]);
    return out;
  };

  std::vector<std::vector<int>> seeds;
  seeds.emplace_back(n, 0);
  if (n > 1) {
    std::vector<int> halves(n, 0);
    for (std::size_t i = n / 2; i < n; ++i) halves[i] = 1;
    seeds.push_back(std::move(halves));
    std::vector<int> singles(n);
    for (std::size_t i = 0; i < n; ++i)
      singles[i] = static_cast<int>(i % static_cast<std::size_t>(max_blocks));
    seeds.push_back(std::move(singles));
    Rng rng(seed);
    std::vector<int> random(n);
    for (std::size_t i = 0; i < n; ++i)
      random[i] = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(max_blocks));
    seeds.push_back(std::move(random));
  }

  std::vector<int> best_assign = seeds[0];
  double best_raw = split_value(best_assign, max_blocks);
  for (std::vector<int>& assign : seeds) {
    double raw = split_value(assign, max_blocks);
    for (int pass = 0; pass < 25; ++pass) {
      bool improved = false;
      for (std::size_t i = 0; i < n; ++i) {
        int original = assign[i];
        for (int jb = 0; jb < max_blocks; ++jb) {
          if (jb == original) continue;
          assign[i] = jb;
          double v = split_value(assign, max_blocks);
          if (v < raw * (1.0 - 1e-12)) {
            raw = v;
            original = jb;
            improved = true;
          } else {
            assign[i] = original;
          }
        }
        assign[i] = original;
      }
      if (!improved) break;
    }
    if (raw < best_raw) {
      best_raw = raw;
      best_assign = assign;
    }
  }
  return polish_blocks(L, R, to_blocks(best_assign, max_blocks), obj,
                       scaling_moves);
}

// --- cutting-plane lower bounds -------------------------------------------------
//
// Lower bounds solve sup { <T, z> : class-norm(T) <= 1 } over operators from
// the left space into Ycod under the trace pairing. Cuts are the linear
// constraints sum_i <T xs_i, ys_i> <= 1 generated from class-normalized
// witness tuples; the final pairing is divided by a certified upper bound of
// the class norm so the reported lower bound is always sound.

struct ViolationCut {
  double value = 0.0;
  VectorTuple xs;
  VectorTuple ys;
  double certified = std::numeric_limits<double>::infinity();
};

struct DualLower {
  double lower = 0.0;
  std::optional<OperatorMatrix> certificate;
};

OperatorMatrix unflatten(const FunctionSpace& dom, const FunctionSpace& cod,
                         const Vec& entries) {
  std::vector<Vec> rows(cod.atoms(), Vec(dom.atoms()));
  for (std::size_t b = 0; b < cod.atoms(); ++b)
    for (std::size_t a = 0; a < dom.atoms(); ++a)
      rows[b][a] = entries[b * dom.atoms() + a];
  return OperatorMatrix(dom, cod, std::move(rows));
}

Vec cut_row(const FunctionSpace& dom, const FunctionSpace& cod,
            const VectorTuple& xs, const VectorTuple& ys) {
  Vec row(cod.atoms() * dom.atoms(), 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t b = 0; b < cod.atoms(); ++b) {
      double scale = cod.weights()[b] * ys.members[i][b];
      if (scale == 0.0) continue;
      for (std::size_t a = 0; a < dom.atoms(); ++a)
        row[b * dom.atoms() + a] += scale * xs.members[i][a];
    }
  return row;
}

DualLower cutting_plane_lower(
    const FunctionSpace& X, const FunctionSpace& Ycod, const Vec& objective,
    const std::function<std::optional<ViolationCut>(const OperatorMatrix&)>&
        finder,
    int iters) {
  LinearProgram lp;
  lp.c = objective;

  // Singleton probes bound every entry, keeping the program bounded; each is
  // a valid member of every dual class handled here because all the class
  // norms dominate the pairing of unit-norm singletons.
  for (std::size_t a = 0; a < X.atoms(); ++a) {
    Vec e(X.atoms(), 0.0);
    e[a] = 1.0;
    double xn = X.norm(e);
    for (double& v : e) v /= xn;
    VectorTuple xs(X, {e});
    for (std::size_t b = 0; b < Ycod.atoms(); ++b) {
      Vec f(Ycod.atoms(), 0.0);
      f[b] = 1.0;
      double fn = Ycod.dual_norm(f);
      for (double sign : {1.0, -1.0}) {
        Vec g(Ycod.atoms(), 0.0);
        g[b] = sign / fn;
        VectorTuple ys(Ycod, {g});
        lp.rows.push_back(cut_row(X, Ycod, xs, ys));
        lp.b.push_back(1.0);
      }
    }
  }

  DualLower best;
  for (int k = 0; k < iters; ++k) {
    LpResult res = solve_lp(lp);
    if (!res.bounded) break;
    OperatorMatrix T = unflatten(X, Ycod, res.x);
    std::optional<ViolationCut> cut = finder(T);
    if (!cut) break;
    if (std::isfinite(cut->certified)) {
      double scale = std::max(1.0, cut->certified);
      double cand = res.value / scale;
      if (cand > best.lower) {
        best.lower = cand;
        std::vector<Vec> rows(Ycod.atoms(), Vec(X.atoms()));
        for (std::size_t b = 0; b < Ycod.atoms(); ++b)
          for (std::size_t a = 0; a < X.atoms(); ++a)
            rows[b][a] = T.entry(b, a) / scale;
        best.certificate = OperatorMatrix(X, Ycod, std::move(rows));
      }
    }
    if (cut->value <= 1.0 + 1e-9) break;
    lp.rows.push_back(cut_row(X, Ycod, cut->xs, cut->ys));
    lp.b.push_back(1.0);
  }
  return best;
}

Vec trace_objective(const Tensor& z, const std::vector<Vec>& M,
                    const FunctionSpace& Ycod) {
  const std::size_t nd = z.left_space.atoms();
  Vec c(Ycod.atoms() * nd);
  for (std::size_t b = 0; b < Ycod.atoms(); ++b)
    for (std::size_t a = 0; a < nd; ++a)
      c[b * nd + a] = Ycod.weights()[b] * M[a][b];
  return c;
}

// Sign-align functional magnitudes with the image tuple so the linear pairing
// reproduces the modulus integral, then renormalize defensively.
VectorTuple aligned_functionals(const FunctionSpace& dual_host,
                                const VectorTuple& image,
                                const std::vector<Vec>& magnitudes) {
  std::vector<Vec> ys(magnitudes.size(), Vec(dual_host.atoms(), 0.0));
  for (std::size_t i = 0; i < magnitudes.size(); ++i)
    for (std::size_t b = 0; b < dual_host.atoms(); ++b) {
      double s = image.members[i][b] >= 0.0 ? 1.0 : -1.0;
      ys[i][b] = std::abs(magnitudes[i][b]) * s;
    }
  return VectorTuple(dual_host, std::move(ys));
}

double tuple_pairing(const FunctionSpace& cod, const VectorTuple& image,
                     const VectorTuple& ys) {
  double s = 0.0;
  for (std::size_t i = 0; i < image.size(); ++i)
    s += cod.pairing(ys.members[i], image.members[i]);
  return s;
}

// Certified regularity upper bound for cut rescaling: the analytic bound from
// the estimator, sharpened by a coarse oracle run at guarded sizes (closed
// forms return exactly, branch-and-bound stops early at the wide gap).
double certified_rho_upper(const OperatorMatrix& T,
                           const RegularityParams& params, double analytic) {
  double up = analytic;
  if (T.domain().atoms() <= 3 && T.domain().atoms() * 2 <= 12) {
    NormEstimate oracle = rho_oracle(T, params, 2, 0.45);
    up = std::min(up, oracle.upper);
  }
  return up;
}

TensorNormBounds zero_bounds(const Tensor& z, std::string name) {
  TensorNormBounds out;
  out.norm_name = std::move(name);
  out.lower = 0.0;
  out.upper = 0.0;
  out.upper_certificate =
      Tensor(z.left_space, z.right_space,
             {TensorTerm{Vec(z.left_space.atoms(), 0.0),
                         Vec(z.right_space.atoms(), 0.0)}});
  return out;
}

double matrix_scale(const std::vector<Vec>& M) {
  double s = 0.0;
  for (const Vec& row : M)
    for (double v : row) s = std::max(s, std::abs(v));
  return s;
}

bool is_zero_matrix(const std::vector<Vec>& M) { return matrix_scale(M) == 0.0; }

// Rank-one extraction: if every 2x2 minor vanishes at floating-point scale,
// the element is x0 (tensor) y0 with x0 the pivot column and y0 the pivot row
// rescaled.
bool rank_one_factors(const std::vector<Vec>& M, Vec& x0, Vec& y0) {
  std::size_t pa = 0, pb = 0;
  double pivot = 0.0;
  for (std::size_t a = 0; a < M.size(); ++a)
    for (std::size_t b = 0; b < M[a].size(); ++b)
      if (std::abs(M[a][b]) > std::abs(pivot)) {
        pivot = M[a][b];
        pa = a;
        pb = b;
      }
  if (pivot == 0.0) return false;
  for (std::size_t a = 0; a < M.size(); ++a)
    for (std::size_t b = 0; b < M[a].size(); ++b) {
      double minor = M[a][b] * pivot - M[a][pb] * M[pa][b];
      if (std::abs(minor) > 1e-13 * pivot * pivot) return false;
    }
  x0.assign(M.size(), 0.0);
  for (std::size_t a = 0; a < M.size(); ++a) x0[a] = M[a][pb];
  y0.assign(M[0].size(), 0.0);
  for (std::size_t b = 0; b < M[0].size(); ++b) y0[b] = M[pa][b] / pivot;
  return true;
}

std::optional<OperatorMatrix> rank_one_certificate(const FunctionSpace& L,
                                                   const FunctionSpace& R,
                                                   const Vec& xs,
                                                   const Vec& ys) {
  if (R.kind() != NormKind::WeightedLr) return std::nullopt;
  FunctionSpace cod = R.dual_space();
  std::vector<Vec> rows(cod.atoms(), Vec(L.atoms()));
  for (std::size_t b = 0; b < cod.atoms(); ++b)
    for (std::size_t a = 0; a < L.atoms(); ++a)
      rows[b][a] = L.weights()[a] * xs[a] * ys[b];
  return OperatorMatrix(L, cod, std::move(rows));
}

struct EpsVertexSide {
  bool eligible = false;
  std::size_t count = 0;
  bool left = true;
};

EpsVertexSide polyhedral_side(const FunctionSpace& S, bool left) {
  EpsVertexSide side;
  side.left = left;
  if (S.kind() != NormKind::WeightedLr) return side;
  if (S.lr_exponent() == one_e() && S.atoms() <= 12) {
    side.eligible = true;
    side.count = std::size_t{1} << S.atoms();
  } else if (S.lr_exponent().is_inf()) {
    side.eligible = true;
    side.count = 2 * S.atoms();
  }
  return side;
}

// Dual-ball vertices of a polyhedral weighted L_r: the dual of L_1(w) is the
// sup-norm cube (sign vectors), the dual of L_inf is the weighted
// cross-polytope (axis functionals e_a / w_a).
std::vector<Vec> dual_ball_vertices(const FunctionSpace& S) {
  std::vector<Vec> vertices;
  if (S.lr_exponent() == one_e()) {
    for (std::size_t mask = 0; mask < (std::size_t{1} << S.atoms()); ++mask) {
      Vec v(S.atoms());
      for (std::size_t a = 0; a < S.atoms(); ++a)
        v[a] = (mask >> a) & 1u ? -1.0 : 1.0;
      vertices.push_back(std::move(v));
    }
  } else {
    for (std::size_t a = 0; a < S.atoms(); ++a)
      for (double sign : {1.0, -1.0}) {
        Vec v(S.atoms(), 0.0);
        v[a] = sign / S.weights()[a];
        vertices.push_back(std::move(v));
      }
  }
  return vertices;
}

}  // namespace

Tensor::Tensor(FunctionSpace left, FunctionSpace right,
               std::vector<TensorTerm> given)
    : left_space(std::move(left)),
      right_space(std::move(right)),
      terms(std::move(given)) {
  require(!terms.empty(), "tensor needs at least one term");
  for (const TensorTerm& t : terms) {
    require(t.x.size() == left_space.atoms(),
            "tensor term x must live over the left atoms");
    require(t.y.size() == right_space.atoms(),
            "tensor term y must live over the right atoms");
  }
}

std::vector<Vec> canonical_matrix(const Tensor& z) {
  std::vector<Vec> M(z.left_space.atoms(), Vec(z.right_space.atoms(), 0.0));
  for (const TensorTerm& t : z.terms)
    for (std::size_t a = 0; a < t.x.size(); ++a) {
      if (t.x[a] == 0.0) continue;
      for (std::size_t b = 0; b < t.y.size(); ++b)
        M[a][b] += t.x[a] * t.y[b];
    }
  return M;
}

double trace_pairing(const OperatorMatrix& A, const Tensor& z) {
  require(A.cols() == z.left_space.atoms() &&
              A.rows() == z.right_space.atoms(),
          "pairing operator shape must match the tensor");
  double s = 0.0;
  for (const TensorTerm& t : z.terms)
    s += z.right_space.pairing(A.apply(t.x), t.y);
  return s;
}

double pi_objective(const Tensor& z) {
  return rep_pi(z.left_space, z.right_space, z.terms);
}

double phi_objective(const Tensor& z, const Exponent& p, const Exponent& q) {
  check_tensor_exponents(p, q);
  return rep_phi(z.left_space, z.right_space, z.terms, p, q);
}

double delta_objective(const Tensor& z, const Exponent& p, const Exponent& q) {
  check_tensor_exponents(p, q);
  return rep_delta(z.left_space, z.right_space, z.terms, p, q);
}

double iota_objective(const Tensor& z, const Exponent& p, const Exponent& q) {
  check_tensor_exponents(p, q);
  return rep_iota(z.left_space, z.right_space, z.terms, p, q);
}

double laprete_objective(const Tensor& z, LapresteNorm norm_name,
                         const Exponent& p) {
  require(one_e() <= p, "Chevet-Saphar norms need p >= 1");
  return rep_laprete(z.left_space, z.right_space, z.terms, norm_name, p);
}

TensorNormBounds eps_norm(const Tensor& z, std::uint64_t seed) {
  const FunctionSpace& L = z.left_space;
  const FunctionSpace& R = z.right_space;
  std::vector<Vec> M = canonical_matrix(z);
  if (is_zero_matrix(M)) return zero_bounds(z, "eps");

  TensorNormBounds out;
  out.norm_name = "eps";

  Vec x0, y0;
  if (rank_one_factors(M, x0, y0)) {
    double value = L.norm(x0) * R.norm(y0);
    out.lower = value;
    out.upper = value;
    out.lower_certificate = rank_one_certificate(
        L, R, L.norming_functional(x0), R.norming_functional(y0));
    out.upper_certificate = Tensor(L, R, {TensorTerm{x0, y0}});
    return out;
  }

  EpsVertexSide left = polyhedral_side(L, true);
  EpsVertexSide right = polyhedral_side(R, false);
  EpsVertexSide side;
  if (left.eligible && (!right.eligible || left.count <= right.count))
    side = left;
  else if (right.eligible)
    side = right;

  if (side.eligible) {
    // sup over one polyhedral dual ball; the other side collapses to a norm.
    const FunctionSpace& E = side.left ? L : R;
    const FunctionSpace& Other = side.left ? R : L;
    double best = 0.0;
    Vec best_vertex, best_image;
    for (Vec& vertex : dual_ball_vertices(E)) {
      Vec g(Other.atoms(), 0.0);
      for (std::size_t a = 0; a < E.atoms(); ++a) {
        double scale = E.weights()[a] * vertex[a];
        if (scale == 0.0) continue;
        for (std::size_t b = 0; b < Other.atoms(); ++b)
          g[b] += scale * (side.left ? M[a][b] : M[b][a]);
      }
      double v = Other.norm(g);
      if (v > best) {
        best = v;
        best_vertex = std::move(vertex);
        best_image = std::move(g);
      }
    }
    out.lower = best;
    out.upper = best;
    Vec xs = side.left ? best_vertex : L.norming_functional(best_image);
    Vec ys = side.left ? R.norming_functional(best_image) : best_vertex;
    out.lower_certificate = rank_one_certificate(L, R, xs, ys);
    return out;
  }

  if (L.kind() == NormKind::WeightedLr && R.kind() == NormKind::WeightedLr) {
    // eps(z) is the norm of the induced operator X* -> right.
    std::vector<Vec> rows(R.atoms(), Vec(L.atoms()));
    for (std::size_t b = 0; b < R.atoms(); ++b)
      for (std::size_t a = 0; a < L.atoms(); ++a)
        rows[b][a] = L.weights()[a] * M[a][b];
    OperatorMatrix B(L.dual_space(), R, std::move(rows));
    auto est = operator_norm_estimate(B, seed, 24);
    Vec xs = est.second;
    double xn = L.dual_space().norm(xs);
    if (xn > 0.0)
      for (double& v : xs) v /= xn;
    Vec image = B.apply(xs);
    out.lower = est.first;
    if (auto exact = operator_norm_exact(B)) {
      out.upper = *exact;
      out.lower = *exact;
    } else {
      out.upper = operator_norm_upper(B);
    }
    out.lower_certificate =
        rank_one_certificate(L, R, xs, R.norming_functional(image));
    out.tolerance = out.upper - out.lower;
    return out;
  }

  // Custom side: monotone alternating ascent between the dual balls, with the
  // projective objective of the searched representation as the sound upper.
  Rng rng(seed);
  double best = 0.0;
  std::vector<Vec> starts;
  for (std::size_t b = 0; b < R.atoms(); ++b) {
    Vec f(R.atoms(), 0.0);
    f[b] = 1.0;
    starts.push_back(f);
  }
  for (int k = 0; k < 8; ++k) {
    Vec f(R.atoms());
    for (double& v : f) v = rng.gaussian();
    starts.push_back(f);
  }
  for (Vec& start : starts) {
    double dn = R.dual_norm(start);
    if (dn == 0.0) continue;
    Vec ys = start;
    for (double& v : ys) v /= dn;
    double value = 0.0;
    for (int it = 0; it < 200; ++it) {
      Vec h(L.atoms(), 0.0);
      for (std::size_t b = 0; b < R.atoms(); ++b) {
        double scale = R.weights()[b] * ys[b];
        if (scale == 0.0) continue;
        for (std::size_t a = 0; a < L.atoms(); ++a) h[a] += scale * M[a][b];
      }
      Vec xsf = L.norming_functional(h);
      Vec g(R.atoms(), 0.0);
      for (std::size_t a = 0; a < L.atoms(); ++a) {
        double scale = L.weights()[a] * xsf[a];
        if (scale == 0.0) continue;
        for (std::size_t b = 0; b < R.atoms(); ++b) g[b] += scale * M[a][b];
      }
      double v = R.norm(g);
      ys = R.norming_functional(g);
      if (v <= value * (1.0 + 1e-12)) {
        value = std::max(value, v);
        break;
      }
      value = v;
    }
    if (value > best) best = value;
  }
  out.lower = best;
  SearchedRep rep = upper_search(
      z, [&](const Rep& r) { return rep_pi(L, R, r); }, false);
  out.upper = rep.value;
  out.upper_certificate = Tensor(L, R, rep.rep);
  out.tolerance = out.upper - out.lower;
  return out;
}

TensorNormBounds pi_bounds(const Tensor& z, std::uint64_t seed,
                           int cut_iters) {
  require(cut_iters >= 1, "cut_iters must be positive");
  const FunctionSpace& L = z.left_space;
  const FunctionSpace& R = z.right_space;
  std::vector<Vec> M = canonical_matrix(z);
  if (is_zero_matrix(M)) return zero_bounds(z, "pi");

  TensorNormBounds out;
  out.norm_name = "pi";
  SearchedRep rep = upper_search(
      z, [&](const Rep& r) { return rep_pi(L, R, r); }, false);
  out.upper = rep.value;
  out.upper_certificate = Tensor(L, R, rep.rep);

  TensorNormBounds eps = eps_norm(z, seed ^ 0x9e3779b97f4a7c15ull);
  out.lower = eps.lower;
  out.lower_certificate = eps.lower_certificate;

  if (R.kind() == NormKind::WeightedLr) {
    FunctionSpace Ycod = R.dual_space();
    std::uint64_t cut_seed = seed;
    auto finder =
        [&](const OperatorMatrix& T) -> std::optional<ViolationCut> {
      auto est = operator_norm_estimate(T, ++cut_seed, 12);
      if (est.first <= 1e-14) return std::nullopt;
      Vec xhat = est.second;
      double xn = L.norm(xhat);
      if (xn == 0.0) return std::nullopt;
      for (double& v : xhat) v /= xn;
      VectorTuple xs(L, {xhat});
      Vec image = T.apply(xhat);
      VectorTuple ys(Ycod, {Ycod.norming_functional(image)});
      ViolationCut cut{Ycod.pairing(ys.members[0], image), std::move(xs),
                       std::move(ys), operator_norm_upper(T)};
      return cut;
    };
    DualLower dual = cutting_plane_lower(L, Ycod, trace_objective(z, M, Ycod),
                                         finder, cut_iters);
    if (dual.lower > out.lower) {
      out.lower = dual.lower;
      out.lower_certificate = dual.certificate;
    }
  }
  out.tolerance = std::max(0.0, out.upper - out.lower);
  return out;
}

TensorNormBounds laprete_bounds(const Tensor& z, LapresteNorm norm_name,
                                const Exponent& p, std::uint64_t seed) {
  require(one_e() <= p, "Chevet-Saphar norms need p >= 1");
  const FunctionSpace& L = z.left_space;
  const FunctionSpace& R = z.right_space;
  std::vector<Vec> M = canonical_matrix(z);
  const char* name = norm_name == LapresteNorm::Gp
                         ? "gp"
                         : norm_name == LapresteNorm::Dp ? "dp" : "wp";
  if (is_zero_matrix(M)) return zero_bounds(z, name);

  TensorNormBounds out;
  out.norm_name = name;
  SearchedRep rep = upper_search(
      z, [&](const Rep& r) { return rep_laprete(L, R, r, norm_name, p); },
      true);
  out.upper = rep.value;
  out.upper_certificate = Tensor(L, R, rep.rep);

  // The injective certificate lies in every Chevet-Saphar dual ball.
  TensorNormBounds eps = eps_norm(z, seed ^ 0x5851f42d4c957f2dull);
  out.lower = eps.lower;
  out.lower_certificate = eps.lower_certificate;
  out.tolerance = std::max(0.0, out.upper - out.lower);
  return out;
}

double phi_pq_upper(const Tensor& z, const Exponent& p, const Exponent& q) {
  check_tensor_exponents(p, q);
  const FunctionSpace& L = z.left_space;
  const FunctionSpace& R = z.right_space;
  if (is_zero_matrix(canonical_matrix(z))) return 0.0;
  SearchedRep rep = upper_search(
      z, [&](const Rep& r) { return rep_phi(L, R, r, p, q); }, true);
  return rep.value;
}

TensorNormBounds r_pq_bounds(const Tensor& z, const Exponent& p,
                             const Exponent& q, std::uint64_t seed,
                             int blocks) {
  check_tensor_exponents(p, q);
  require(blocks >= 1, "blocks must be positive");
  const FunctionSpace& L = z.left_space;
  const FunctionSpace& R = z.right_space;
  std::vector<Vec> M = canonical_matrix(z);
  if (is_zero_matrix(M)) return zero_bounds(z, "rpq");

  TensorNormBounds out;
  out.norm_name = "rpq";

  RepObjective phi = [&](const Rep& r) { return rep_phi(L, R, r, p, q); };
  SearchedRep single = upper_search(z, phi, true);
  BlockSplit split =
      block_search(L, R, single.rep, phi, blocks, seed ^ 0xb10cull, true);
  if (!split.blocks.empty() && split.value < single.value) {
    out.upper = split.value;
    Rep all;
    for (const Rep& block : split.blocks) {
      out.upper_blocks.emplace_back(L, R, block);
      all.insert(all.end(), block.begin(), block.end());
    }
    out.upper_certificate = Tensor(L, R, all);
  } else {
    out.upper = single.value;
    out.upper_blocks.emplace_back(L, R, single.rep);
    out.upper_certificate = Tensor(L, R, single.rep);
  }

  TensorNormBounds eps = eps_norm(z, seed ^ 0x2545f4914f6cdd1dull);
  out.lower = eps.lower;
  out.lower_certificate = eps.lower_certificate;

  if (R.kind() == NormKind::WeightedLr) {
    FunctionSpace Ycod = R.dual_space();
    RegularityParams params{p, q};
    Exponent pc = conjugate_exponent(p);
    std::uint64_t cut_seed = seed;
    auto finder =
        [&](const OperatorMatrix& T) -> std::optional<ViolationCut> {
      NormEstimate est = rho_lower_bound(T, params, 2, ++cut_seed, 6);
      if (!est.lower_witness || est.lower <= 1e-14) return std::nullopt;
      double den = psum_norm(*est.lower_witness, q);
      if (den <= 0.0) return std::nullopt;
      std::vector<Vec> xm = est.lower_witness->members;
      for (Vec& m : xm)
        for (double& v : m) v /= den;
      VectorTuple xs(L, std::move(xm));
      VectorTuple image = T.apply(xs);
      DualWitness dw = dual_witness(Ycod, image, p, one_e(), pc);
      VectorTuple ys = aligned_functionals(R, image, dw.witness.members);
      double dn = psum_norm(ys, pc);
      if (dn > 1.0)
        for (Vec& m : ys.members)
          for (double& v : m) v /= dn;
      ViolationCut cut{tuple_pairing(Ycod, image, ys), std::move(xs),
                       std::move(ys),
                       certified_rho_upper(T, params, est.upper)};
      return cut;
    };
    DualLower dual =
        cutting_plane_lower(L, Ycod, trace_objective(z, M, Ycod), finder, 30);
    if (dual.lower > out.lower) {
      out.lower = dual.lower;
      out.lower_certificate = dual.certificate;
    }
  }
  out.tolerance = std::max(0.0, out.upper - out.lower);
  return out;
}

TensorNormBounds hk_pq_bounds(const Tensor& z, LatticeBlockNorm which,
                              const Exponent& p, const Exponent& q,
                              std::uint64_t seed) {
  check_tensor_exponents(p, q);
  const FunctionSpace& L = z.left_space;
  const FunctionSpace& R = z.right_space;
  std::vector<Vec> M = canonical_matrix(z);
  const char* name = which == LatticeBlockNorm::H ? "hpq" : "kpq";
  if (is_zero_matrix(M)) return zero_bounds(z, name);

  TensorNormBounds out;
  out.norm_name = name;

  RepObjective block_obj = [&](const Rep& r) {
    return which == LatticeBlockNorm::H ? rep_delta(L, R, r, p, q)
                                        : rep_iota(L, R, r, p, q);
  };
  SearchedRep single = upper_search(z, block_obj, true);
  BlockSplit split =
      block_search(L, R, single.rep, block_obj, 4, seed ^ 0xb10c2ull, true);
  if (!split.blocks.empty() && split.value < single.value) {
    out.upper = split.value;
    Rep all;
    for (const Rep& block : split.blocks) {
      out.upper_blocks.emplace_back(L, R, block);
      all.insert(all.end(), block.begin(), block.end());
    }
    out.upper_certificate = Tensor(L, R, all);
  } else {
    out.upper = single.value;
    out.upper_blocks.emplace_back(L, R, single.rep);
    out.upper_certificate = Tensor(L, R, single.rep);
  }

  TensorNormBounds eps = eps_norm(z, seed ^ 0x94d049bb133111ebull);
  out.lower = eps.lower;
  out.lower_certificate = eps.lower_certificate;

  if (R.kind() == NormKind::WeightedLr) {
    FunctionSpace Ycod = R.dual_space();
    RegularityParams params{p, q};
    Exponent pc = conjugate_exponent(p);
    std::uint64_t cut_seed = seed;
    auto finder =
        [&](const OperatorMatrix& T) -> std::optional<ViolationCut> {
      if (which == LatticeBlockNorm::H) {
        NormEstimate est = convexity_norm(T, params, 2, ++cut_seed, 6);
        if (!est.lower_witness || est.lower <= 1e-14) return std::nullopt;
        std::vector<Vec> xm = est.lower_witness->members;
        double den = 0.0;
        if (q.is_inf()) {
          for (const Vec& m : xm) den = std::max(den, L.norm(m));
        } else {
          for (const Vec& m : xm) den += std::pow(L.norm(m), q.value());
          den = std::pow(den, 1.0 / q.value());
        }
        if (den <= 0.0) return std::nullopt;
        for (Vec& m : xm)
          for (double& v : m) v /= den;
        VectorTuple xs(L, std::move(xm));
        VectorTuple image = T.apply(xs);
        DualWitness dw = dual_witness(Ycod, image, p, one_e(), pc);
        VectorTuple ys = aligned_functionals(R, image, dw.witness.members);
        double dn = psum_norm(ys, pc);
        if (dn > 1.0)
          for (Vec& m : ys.members)
            for (double& v : m) v /= dn;
        ViolationCut cut{tuple_pairing(Ycod, image, ys), std::move(xs),
                         std::move(ys), est.upper};
        return cut;
      }
      NormEstimate est = concavity_norm(T, params, 2, ++cut_seed, 6);
      if (!est.lower_witness || est.lower <= 1e-14) return std::nullopt;
      double den = psum_norm(*est.lower_witness, q);
      if (den <= 0.0) return std::nullopt;
      std::vector<Vec> xm = est.lower_witness->members;
      for (Vec& m : xm)
        for (double& v : m) v /= den;
      VectorTuple xs(L, std::move(xm));
      VectorTuple image = T.apply(xs);
      Vec norms(image.size());
      for (std::size_t i = 0; i < image.size(); ++i)
        norms[i] = Ycod.norm(image.members[i]);
      Vec coeff = lp_superdiff(p, norms);
      std::vector<Vec> ym(image.size(), Vec(Ycod.atoms(), 0.0));
      for (std::size_t i = 0; i < image.size(); ++i) {
        if (coeff[i] == 0.0 || norms[i] == 0.0) continue;
        Vec f = Ycod.norming_functional(image.members[i]);
        for (std::size_t b = 0; b < Ycod.atoms(); ++b)
          ym[i][b] = coeff[i] * f[b];
      }
      VectorTuple ys(R, std::move(ym));
      double sn = 0.0;
      if (pc.is_inf()) {
        for (const Vec& m : ys.members) sn = std::max(sn, R.norm(m));
      } else {
        for (const Vec& m : ys.members) sn += std::pow(R.norm(m), pc.value());
        sn = std::pow(sn, 1.0 / pc.value());
      }
      if (sn > 1.0)
        for (Vec& m : ys.members)
          for (double& v : m) v /= sn;
      ViolationCut cut{tuple_pairing(Ycod, image, ys), std::move(xs),
                       std::move(ys), est.upper};
      return cut;
    };
    DualLower dual =
        cutting_plane_lower(L, Ycod, trace_objective(z, M, Ycod), finder, 30);
    if (dual.lower > out.lower) {
      out.lower = dual.lower;
      out.lower_certificate = dual.certificate;
    }
  }
  out.tolerance = std::max(0.0, out.upper - out.lower);
  return out;
}

TraceDualityRecord trace_duality_check(const OperatorMatrix& T,
                                       const Exponent& p, const Exponent& q,
                                       std::size_t rank_budget,
                                       std::uint64_t seed) {
  require(one_e() <= q && q <= p, "trace duality needs 1 <= q <= p");
  require(rank_budget >= 1, "rank_budget must be positive");
  require(T.domain().atoms() * 2 <= 12,
          "trace duality guard: domain too large for the oracle");
  require(T.codomain().kind() == NormKind::WeightedLr,
          "trace duality needs a weighted L_r codomain");

  RegularityParams params{p, q};
  TraceDualityRecord record;
  NormEstimate oracle = rho_oracle(T, params, 2, 1e-3);
  record.rho_est = oracle.lower;

  Exponent pc = conjugate_exponent(p);
  NormEstimate bil =
      bilinear_PT_norm(T, one_e(), q, pc, rank_budget, seed, 64);
  if (!bil.lower_witness || !bil.dual_witness || bil.lower <= 1e-14) {
    record.dual_sup = 0.0;
    record.gap = std::abs(record.rho_est - record.dual_sup);
    return record;
  }

  const VectorTuple& xs = *bil.lower_witness;
  VectorTuple image = T.apply(xs);
  FunctionSpace Yd = T.codomain().dual_space();
  VectorTuple ys = aligned_functionals(Yd, image, bil.dual_witness->members);

  std::vector<TensorTerm> terms;
  for (std::size_t i = 0; i < xs.size(); ++i)
    terms.push_back(TensorTerm{xs.members[i], ys.members[i]});
  Tensor zw(T.domain(), Yd, std::move(terms));

  double pairing = trace_pairing(T, zw);
  double r_upper = r_pq_bounds(zw, p, q, seed ^ 0x7ull, 4).upper;
  record.dual_sup = r_upper > 0.0 ? pairing / r_upper : 0.0;
  record.gap = std::abs(record.rho_est - record.dual_sup);
  return record;
}

}  // namespace pqreg
