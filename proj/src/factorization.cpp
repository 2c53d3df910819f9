#include "pqreg/factorization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pqreg/calculus.hpp"
#include "pqreg/util.hpp"

namespace pqreg {

namespace {

constexpr double kWeightFloor = 1e-12;
constexpr double kSolveFloor = 1e-9;

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// (sum_d |v_d|^e)^{1/e}, lattice supremum at e = inf.
double lp_norm(const Vec& v, const Exponent& e) {
  if (e.is_inf()) return vec_linf(v);
  const double ev = e.value();
  double s = 0.0;
  for (double c : v) s += std::pow(std::fabs(c), ev);
  return std::pow(s, 1.0 / ev);
}

// Norm-attaining subgradient of v -> |v|_e: pairs to the norm, dual norm one.
Vec lp_subgradient(const Vec& v, const Exponent& e) {
  Vec g(v.size(), 0.0);
  const double n = lp_norm(v, e);
  if (n <= 0.0) return g;
  if (e.is_inf()) {
    std::size_t best = 0;
    for (std::size_t d = 1; d < v.size(); ++d)
      if (std::fabs(v[d]) > std::fabs(v[best])) best = d;
    g[best] = sgn(v[best]);
    return g;
  }
  const double ev = e.value();
  for (std::size_t d = 0; d < v.size(); ++d)
    if (v[d] != 0.0) g[d] = sgn(v[d]) * std::pow(std::fabs(v[d]) / n, ev - 1.0);
  return g;
}

struct Profile {
  double value;
  Vec t;
};

// max sum_d m_d t_d over t >= 0 with sum_d w_d t_d^e <= 1 (sup t <= 1 at
// e = inf, where the weights drop out). Requires m >= 0 and w > 0.
Profile budget_maximize(const Vec& m, const Vec& w, const Exponent& e) {
  const std::size_t n = m.size();
  Profile out{0.0, Vec(n, 0.0)};
  if (e.is_inf()) {
    for (std::size_t d = 0; d < n; ++d) {
      out.t[d] = 1.0;
      out.value += m[d];
    }
    return out;
  }
  const double ev = e.value();
  if (ev == 1.0) {
    std::size_t best = n;
    double ratio = 0.0;
    for (std::size_t d = 0; d < n; ++d)
      if (m[d] > 0.0 && m[d] / w[d] > ratio) {
        ratio = m[d] / w[d];
        best = d;
      }
    if (best < n) {
      out.t[best] = 1.0 / w[best];
      out.value = ratio;
    }
    return out;
  }
  const double ep = ev / (ev - 1.0);
  double s = 0.0;
  for (std::size_t d = 0; d < n; ++d)
    if (m[d] > 0.0) s += std::pow(m[d], ep) * std::pow(w[d], 1.0 - ep);
  if (s <= 0.0) return out;
  out.value = std::pow(s, 1.0 / ep);
  for (std::size_t d = 0; d < n; ++d)
    if (m[d] > 0.0)
      out.t[d] = std::pow(m[d] / w[d], ep - 1.0) / std::pow(out.value, ep - 1.0);
  return out;
}

// u >= 0 with |u|_a = 1 and sum m_d u_d = |m|_{a'}; m >= 0.
Vec unit_profile(const Vec& m, const Exponent& a) {
  const std::size_t n = m.size();
  Vec u(n, 0.0);
  if (a.is_inf()) {
    std::fill(u.begin(), u.end(), 1.0);
    return u;
  }
  const double av = a.value();
  if (av == 1.0) {
    std::size_t best = 0;
    for (std::size_t d = 1; d < n; ++d)
      if (m[d] > m[best]) best = d;
    u[best] = 1.0;
    return u;
  }
  const Exponent ap = conjugate_exponent(a);
  const double dual = lp_norm(m, ap);
  if (dual <= 0.0) {
    u[0] = 1.0;
    return u;
  }
  for (std::size_t d = 0; d < n; ++d)
    u[d] = std::pow(m[d] / dual, ap.value() - 1.0);
  return u;
}

// One product-form constraint: lhs <= C (Amu . f0)^{cx} (Bnu . g0)^{cy}.
// Profiles carry the atom weights so margins are plain dot products.
struct PairCut {
  Vec Amu;
  Vec Bnu;  // empty in the one-sided case
  double log_lhs;
};

struct WeightProblem {
  double log_C;
  double cx;
  double cy;
  FunctionSpace f_ball;
  std::optional<FunctionSpace> g_ball;
  std::vector<PairCut> cuts;
};

// Clamp positive, renormalize into the dual ball, keep a strict floor. The
// floor's ball overshoot is orders of magnitude below the verification slack.
void retract(Vec& v, const FunctionSpace& ball) {
  for (int round = 0; round < 3; ++round) {
    for (double& c : v) c = std::max(c, kSolveFloor);
    const double n = ball.norm(v);
    if (n <= 1.0) break;
    for (double& c : v) c /= n;
  }
  for (double& c : v) c = std::max(c, kWeightFloor);
}

struct WeightState {
  Vec f0;
  Vec g0;
  double min_margin;
};

double margin_of(const WeightProblem& P, const PairCut& cut, const Vec& f0,
                 const Vec& g0) {
  double m = P.log_C + P.cx * std::log(dot(cut.Amu, f0)) - cut.log_lhs;
  if (!cut.Bnu.empty()) m += P.cy * std::log(dot(cut.Bnu, g0));
  return m;
}

double min_margin(const WeightProblem& P, const Vec& f0, const Vec& g0) {
  double m = std::numeric_limits<double>::infinity();
  for (const PairCut& c : P.cuts) m = std::min(m, margin_of(P, c, f0, g0));
  return m;
}

// Concave maximin over the dual-ball product, solved by smoothed-minimum
// ascent at increasing sharpness. Keeps the incoming point when it already
// clears every cut, so symmetric instances return their symmetric weights.
WeightState solve_weights(const WeightProblem& P, WeightState state) {
  state.min_margin = min_margin(P, state.f0, state.g0);
  if (state.min_margin >= -1e-9 || P.cuts.empty()) return state;
  WeightState best = state;
  const bool two_sided = P.g_ball.has_value();
  for (double beta : {30.0, 300.0, 3000.0}) {
    WeightState cur = best;
    double step = 0.25;
    auto softmin = [&](const Vec& f0, const Vec& g0) {
      double mn = min_margin(P, f0, g0);
      double acc = 0.0;
      for (const PairCut& c : P.cuts)
        acc += std::exp(-beta * (margin_of(P, c, f0, g0) - mn));
      return mn - std::log(acc) / beta;
    };
    double cur_soft = softmin(cur.f0, cur.g0);
    for (int iter = 0; iter < 400; ++iter) {
      const double mn = min_margin(P, cur.f0, cur.g0);
      Vec gf(cur.f0.size(), 0.0), gg(cur.g0.size(), 0.0);
      double wsum = 0.0;
      for (const PairCut& c : P.cuts) {
        const double w = std::exp(-beta * (margin_of(P, c, cur.f0, cur.g0) - mn));
        wsum += w;
        const double af = dot(c.Amu, cur.f0);
        for (std::size_t d = 0; d < gf.size(); ++d)
          gf[d] += w * P.cx * c.Amu[d] / af;
        if (two_sided && !c.Bnu.empty()) {
          const double bg = dot(c.Bnu, cur.g0);
          for (std::size_t d = 0; d < gg.size(); ++d)
            gg[d] += w * P.cy * c.Bnu[d] / bg;
        }
      }
      double gnorm = 0.0;
      for (double c : gf) gnorm += c * c;
      for (double c : gg) gnorm += c * c;
      gnorm = std::sqrt(gnorm);
      if (gnorm <= 0.0 || wsum <= 0.0) break;
      WeightState trial = cur;
      for (std::size_t d = 0; d < gf.size(); ++d)
        trial.f0[d] += step * gf[d] / (wsum * gnorm);
      retract(trial.f0, P.f_ball);
      if (two_sided) {
        for (std::size_t d = 0; d < gg.size(); ++d)
          trial.g0[d] += step * gg[d] / (wsum * gnorm);
        retract(trial.g0, *P.g_ball);
      }
      const double trial_soft = softmin(trial.f0, trial.g0);
      if (trial_soft > cur_soft + 1e-15) {
        cur = trial;
        cur_soft = trial_soft;
        step = std::min(step * 1.6, 2.0);
      } else {
        step *= 0.5;
        if (step < 1e-12) break;
      }
      cur.min_margin = min_margin(P, cur.f0, cur.g0);
      if (cur.min_margin > best.min_margin) best = cur;
      if (best.min_margin >= -1e-9) return best;
    }
  }
  return best;
}

Vec abs_gaussian(std::size_t n, Rng& rng) {
  Vec v(n);
  for (double& c : v) c = std::fabs(rng.gaussian());
  return v;
}

// Most violated single pair for the Maurey-Rosenthal product constraint:
// alternating closed-form ascent of int |Tx y'| under the budgets
// int |x|^p f0 dmu <= 1 and int |y'|^{s'} g0 dnu <= 1.
struct OraclePair {
  Vec x;
  Vec yabs;
  double lhs;
};

OraclePair mr_oracle(const OperatorMatrix& T, const Exponent& p,
                     const std::optional<Exponent>& sp, const Vec& f0,
                     const Vec& g0, std::uint64_t seed) {
  const std::size_t dx = T.cols(), dy = T.rows();
  const Vec& mu = T.domain().weights();
  const Vec& nu = T.codomain().weights();
  Vec wx(dx), wy(dy);
  for (std::size_t d = 0; d < dx; ++d) wx[d] = mu[d] * f0[d];
  for (std::size_t w = 0; w < dy; ++w) wy[w] = nu[w] * g0[w];
  Rng rng(seed);

  std::vector<std::pair<Vec, Vec>> starts;  // (yabs seed, sign seed)
  starts.push_back({Vec(dy, 1.0), Vec(dy, 1.0)});
  for (std::size_t w = 0; w < std::min<std::size_t>(dy, 4); ++w) {
    Vec axis(dy, 0.0);
    axis[w] = 1.0;
    starts.push_back({axis, Vec(dy, 1.0)});
  }
  for (int k = 0; k < 3; ++k) {
    Vec sig(dy);
    for (double& c : sig) c = rng.uniform() < 0.5 ? -1.0 : 1.0;
    starts.push_back({abs_gaussian(dy, rng), sig});
  }

  OraclePair best{Vec(dx, 0.0), Vec(dy, 0.0), 0.0};
  for (auto& [y_seed, sig_seed] : starts) {
    Vec yabs = y_seed, sig = sig_seed;
    Vec x(dx, 0.0), z(dy, 0.0);
    double prev = -1.0;
    for (int it = 0; it < 40; ++it) {
      Vec c(dx, 0.0);
      for (std::size_t w = 0; w < dy; ++w) {
        const double coef = nu[w] * sig[w] * yabs[w];
        if (coef == 0.0) continue;
        for (std::size_t d = 0; d < dx; ++d) c[d] += coef * T.entry(w, d);
      }
      Vec cabs(dx);
      for (std::size_t d = 0; d < dx; ++d) cabs[d] = std::fabs(c[d]);
      const Profile px = budget_maximize(cabs, wx, p);
      for (std::size_t d = 0; d < dx; ++d) x[d] = sgn(c[d]) * px.t[d];
      z = T.apply(x);
      for (std::size_t w = 0; w < dy; ++w) sig[w] = z[w] >= 0.0 ? 1.0 : -1.0;
      double val;
      if (sp.has_value()) {
        Vec mz(dy);
        for (std::size_t w = 0; w < dy; ++w) mz[w] = nu[w] * std::fabs(z[w]);
        const Profile py = budget_maximize(mz, wy, *sp);
        yabs = py.t;
        val = py.value;
      } else {
        std::fill(yabs.begin(), yabs.end(), 1.0);
        val = 0.0;
        for (std::size_t w = 0; w < dy; ++w) val += nu[w] * std::fabs(z[w]);
      }
      if (val <= prev * (1.0 + 1e-12)) break;
      prev = val;
    }
    double lhs = 0.0;
    for (std::size_t w = 0; w < dy; ++w) lhs += nu[w] * std::fabs(z[w]) * yabs[w];
    if (lhs > best.lhs) best = {x, yabs, lhs};
  }
  return best;
}

// Most violated tuple for the strong constraint: the same alternation with a
// lattice-q profile across the tuple on the domain side and a lattice-p'
// profile on the dual side, budgets in L_r(f0 mu) and L_{r'}(g0 nu).
struct OracleTuple {
  std::vector<Vec> xs;
  std::vector<Vec> yabs;
  double lhs;
};

OracleTuple strong_oracle(const OperatorMatrix& T, const Exponent& p,
                          const Exponent& q, const Exponent& r, const Vec& f0,
                          const Vec& g0, std::size_t m, std::uint64_t seed) {
  const std::size_t dx = T.cols(), dy = T.rows();
  const Vec& mu = T.domain().weights();
  const Vec& nu = T.codomain().weights();
  const Exponent pp = conjugate_exponent(p);
  const Exponent rp = conjugate_exponent(r);
  Vec wx(dx), wy(dy);
  for (std::size_t d = 0; d < dx; ++d) wx[d] = mu[d] * f0[d];
  for (std::size_t w = 0; w < dy; ++w) wy[w] = nu[w] * g0[w];
  Rng rng(seed);

  OracleTuple best{{}, {}, 0.0};
  for (int start = 0; start < 6; ++start) {
    std::vector<Vec> yabs(m, Vec(dy, 0.0));
    std::vector<Vec> sig(m, Vec(dy, 1.0));
    if (start == 0) {
      std::fill(yabs[0].begin(), yabs[0].end(), 1.0);
    } else {
      for (std::size_t j = 0; j < m; ++j) {
        yabs[j] = abs_gaussian(dy, rng);
        for (double& c : sig[j]) c = rng.uniform() < 0.5 ? -1.0 : 1.0;
      }
    }
    std::vector<Vec> xs(m, Vec(dx, 0.0)), zs(m, Vec(dy, 0.0));
    double prev = -1.0, val = 0.0;
    for (int it = 0; it < 40; ++it) {
      std::vector<Vec> c(m, Vec(dx, 0.0));
      for (std::size_t j = 0; j < m; ++j)
        for (std::size_t w = 0; w < dy; ++w) {
          const double coef = nu[w] * sig[j][w] * yabs[j][w];
          if (coef == 0.0) continue;
          for (std::size_t d = 0; d < dx; ++d) c[j][d] += coef * T.entry(w, d);
        }
      Vec cq(dx);
      for (std::size_t d = 0; d < dx; ++d) {
        Vec col(m);
        for (std::size_t j = 0; j < m; ++j) col[j] = std::fabs(c[j][d]);
        cq[d] = lp_norm(col, conjugate_exponent(q));
      }
      const Profile tau = budget_maximize(cq, wx, r);
      for (std::size_t d = 0; d < dx; ++d) {
        Vec col(m);
        for (std::size_t j = 0; j < m; ++j) col[j] = std::fabs(c[j][d]);
        const Vec prof = unit_profile(col, q);
        for (std::size_t j = 0; j < m; ++j)
          xs[j][d] = sgn(c[j][d]) * tau.t[d] * prof[j];
      }
      for (std::size_t j = 0; j < m; ++j) {
        zs[j] = T.apply(xs[j]);
        for (std::size_t w = 0; w < dy; ++w)
          sig[j][w] = zs[j][w] >= 0.0 ? 1.0 : -1.0;
      }
      Vec tp(dy);
      for (std::size_t w = 0; w < dy; ++w) {
        Vec col(m);
        for (std::size_t j = 0; j < m; ++j) col[j] = std::fabs(zs[j][w]);
        tp[w] = nu[w] * lp_norm(col, p);
      }
      const Profile sprof = budget_maximize(tp, wy, rp);
      for (std::size_t w = 0; w < dy; ++w) {
        Vec col(m);
        for (std::size_t j = 0; j < m; ++j) col[j] = std::fabs(zs[j][w]);
        const Vec prof = unit_profile(col, pp);
        for (std::size_t j = 0; j < m; ++j) yabs[j][w] = sprof.t[w] * prof[j];
      }
      val = 0.0;
      for (std::size_t j = 0; j < m; ++j)
        for (std::size_t w = 0; w < dy; ++w)
          val += nu[w] * std::fabs(zs[j][w]) * yabs[j][w];
      if (val <= prev * (1.0 + 1e-12)) break;
      prev = val;
    }
    if (val > best.lhs) best = {xs, yabs, val};
  }
  return best;
}

bool matrix_is_zero(const OperatorMatrix& T) {
  for (std::size_t w = 0; w < T.rows(); ++w)
    for (std::size_t d = 0; d < T.cols(); ++d)
      if (T.entry(w, d) != 0.0) return false;
  return true;
}

FactorizationResult assemble(const OperatorMatrix& T, const Vec& f0,
                             const Vec& g0, const Exponent& f_power,
                             const std::optional<Exponent>& g_power,
                             const Exponent& dom_exp, const Exponent& cod_exp,
                             double constant) {
  const std::size_t dx = T.cols(), dy = T.rows();
  Vec f(dx), g(dy, 1.0);
  for (std::size_t d = 0; d < dx; ++d)
    f[d] = std::pow(std::max(f0[d], kWeightFloor), 1.0 / f_power.value());
  if (g_power.has_value())
    for (std::size_t w = 0; w < dy; ++w)
      g[w] = std::pow(std::max(g0[w], kWeightFloor), 1.0 / g_power->value());
  std::vector<Vec> rows(dy, Vec(dx, 0.0));
  for (std::size_t w = 0; w < dy; ++w)
    for (std::size_t d = 0; d < dx; ++d)
      rows[w][d] = T.entry(w, d) / (g[w] * f[d]);
  OperatorMatrix inner(FunctionSpace::weighted_lr(dom_exp, T.domain().weights()),
                       FunctionSpace::weighted_lr(cod_exp, T.codomain().weights()),
                       std::move(rows));
  double residual = 0.0;
  for (std::size_t w = 0; w < dy; ++w)
    for (std::size_t d = 0; d < dx; ++d)
      residual = std::max(residual,
                          std::fabs(g[w] * inner.entry(w, d) * f[d] - T.entry(w, d)));
  return FactorizationResult{std::move(f), std::move(g), std::move(inner),
                             constant, residual};
}

[[noreturn]] void throw_infeasible(double constant, double factor,
                                   const char* stage) {
  std::ostringstream os;
  os << "no feasible weights at constant " << constant << " (" << stage
     << "); worst pair exceeds the product budget by factor " << factor;
  require(false, os.str());
  std::abort();  // unreachable
}

}  // namespace

FactorizationResult maurey_rosenthal_factorize(const OperatorMatrix& T,
                                               const Exponent& p,
                                               const Exponent& s, double C_hint,
                                               std::size_t max_cuts,
                                               std::uint64_t seed,
                                               Vec* violation_trace) {
  require(T.domain().kind() == NormKind::WeightedLr &&
              T.codomain().kind() == NormKind::WeightedLr,
          "factorization requires weighted lattice frames");
  require(!p.is_inf(), "factorization exponent p must be finite");
  require(Exponent(1.0) <= s && s <= p, "need 1 <= s <= p");
  const Exponent rx = T.domain().lr_exponent();
  const Exponent ry = T.codomain().lr_exponent();
  require(p <= rx, "domain exponent must be at least p (p-convexity)");
  require(ry <= s, "codomain exponent must be at most s (s-concavity)");
  require(max_cuts >= 1, "max_cuts must be positive");

  const bool two_sided = Exponent(1.0) < s;
  const std::optional<Exponent> sp =
      two_sided ? std::optional<Exponent>(conjugate_exponent(s)) : std::nullopt;

  if (matrix_is_zero(T)) {
    Vec f0(T.cols(), 1.0), g0(T.rows(), 1.0);
    FactorizationResult out = assemble(T, f0, g0, p, sp, p, s,
                                       std::max(C_hint, 0.0));
    return out;
  }

  double C = C_hint;
  if (C <= 0.0) {
    const NormEstimate est =
        rho_lower_bound(T, RegularityParams{p, p}, 3, seed ^ 0x9e3779b9u, 12);
    C = std::isfinite(est.upper) ? est.upper : est.lower * 1.05;
  }
  require(C > 0.0, "regularity constant must be positive");

  // Dual balls of the power spaces: (X_[p])' and ((Y')_[s'])'.
  const Exponent fx_pow =
      rx.is_inf() ? Exponent::inf() : Exponent(rx.value() / p.value());
  WeightProblem P{std::log(C),
                  p.inverse(),
                  two_sided ? sp->inverse() : 0.0,
                  FunctionSpace::weighted_lr(conjugate_exponent(fx_pow),
                                             T.domain().weights()),
                  std::nullopt,
                  {}};
  if (two_sided) {
    const Exponent ryp = conjugate_exponent(ry);
    const Exponent gy_pow = ryp.is_inf()
                                ? Exponent::inf()
                                : Exponent(ryp.value() / sp->value());
    P.g_ball = FunctionSpace::weighted_lr(conjugate_exponent(gy_pow),
                                          T.codomain().weights());
  }

  WeightState state{Vec(T.cols(), 1.0), Vec(T.rows(), 1.0), 0.0};
  retract(state.f0, P.f_ball);
  if (two_sided) retract(state.g0, *P.g_ball);

  const Vec& mu = T.domain().weights();
  const Vec& nu = T.codomain().weights();
  double least_vio = std::numeric_limits<double>::infinity();
  for (std::size_t round = 0; round < max_cuts; ++round) {
    const OraclePair pair =
        mr_oracle(T, p, sp, state.f0, state.g0, seed + 101 * round);
    PairCut cut{Vec(T.cols()), {}, std::log(pair.lhs)};
    for (std::size_t d = 0; d < T.cols(); ++d)
      cut.Amu[d] = mu[d] * std::pow(std::fabs(pair.x[d]), p.value());
    if (two_sided) {
      cut.Bnu.resize(T.rows());
      for (std::size_t w = 0; w < T.rows(); ++w)
        cut.Bnu[w] = nu[w] * std::pow(pair.yabs[w], sp->value());
    }
    const double vio =
        std::exp(-margin_of(P, cut, state.f0, state.g0));
    if (violation_trace) violation_trace->push_back(vio);
    least_vio = std::min(least_vio, vio);
    if (vio <= 1.0 + 1e-6)
      return assemble(T, state.f0, state.g0, p, sp, p, s, C);
    P.cuts.push_back(std::move(cut));
    state = solve_weights(P, state);
    if (state.min_margin < -1e-9)
      throw_infeasible(C, std::exp(-state.min_margin), "cut set unsatisfiable");
  }
  throw_infeasible(C, least_vio, "max_cuts reached");
}

FactorizationResult strong_factorize_Lr(const OperatorMatrix& T,
                                        const Exponent& p, const Exponent& q,
                                        const Exponent& r, double K_hint,
                                        std::size_t max_cuts,
                                        std::uint64_t seed,
                                        Vec* violation_trace) {
  require(T.domain().kind() == NormKind::WeightedLr &&
              T.codomain().kind() == NormKind::WeightedLr,
          "factorization requires weighted lattice frames");
  require(Exponent(1.0) <= q && q <= p, "need 1 <= q <= p");
  require(Exponent(1.0) < r && !r.is_inf(),
          "strong factorization requires 1 < r < infinity");
  const Exponent rx = T.domain().lr_exponent();
  const Exponent ry = T.codomain().lr_exponent();
  require(r <= rx, "domain exponent must be at least r (r-convexity)");
  require(ry <= r, "codomain exponent must be at most r (r-concavity)");
  require(max_cuts >= 1, "max_cuts must be positive");

  const Exponent rp = conjugate_exponent(r);
  if (matrix_is_zero(T)) {
    Vec f0(T.cols(), 1.0), g0(T.rows(), 1.0);
    return assemble(T, f0, g0, r, rp, r, r, std::max(K_hint, 0.0));
  }

  double K = K_hint;
  if (K <= 0.0) {
    const NormEstimate est =
        matrix_inequality_constant(T, p, q, r, 2, 2, seed ^ 0x51ed2701u);
    K = est.lower * 1.01;
  }
  require(K > 0.0, "inequality constant must be positive");

  const Exponent fx_pow =
      rx.is_inf() ? Exponent::inf() : Exponent(rx.value() / r.value());
  const Exponent ryp = conjugate_exponent(ry);
  const Exponent gy_pow =
      ryp.is_inf() ? Exponent::inf() : Exponent(ryp.value() / rp.value());
  WeightProblem P{std::log(K),
                  r.inverse(),
                  rp.inverse(),
                  FunctionSpace::weighted_lr(conjugate_exponent(fx_pow),
                                             T.domain().weights()),
                  FunctionSpace::weighted_lr(conjugate_exponent(gy_pow),
                                             T.codomain().weights()),
                  {}};

  WeightState state{Vec(T.cols(), 1.0), Vec(T.rows(), 1.0), 0.0};
  retract(state.f0, P.f_ball);
  retract(state.g0, *P.g_ball);

  const Vec& mu = T.domain().weights();
  const Vec& nu = T.codomain().weights();
  const Exponent pp = conjugate_exponent(p);
  const std::size_t m = 3;
  double least_vio = std::numeric_limits<double>::infinity();
  for (std::size_t round = 0; round < max_cuts; ++round) {
    const OracleTuple tup =
        strong_oracle(T, p, q, r, state.f0, state.g0, m, seed + 211 * round);
    PairCut cut{Vec(T.cols()), Vec(T.rows()), std::log(tup.lhs)};
    for (std::size_t d = 0; d < T.cols(); ++d) {
      Vec col(m);
      for (std::size_t j = 0; j < m; ++j) col[j] = tup.xs[j][d];
      cut.Amu[d] = mu[d] * std::pow(lp_norm(col, q), r.value());
    }
    for (std::size_t w = 0; w < T.rows(); ++w) {
      Vec col(m);
      for (std::size_t j = 0; j < m; ++j) col[j] = tup.yabs[j][w];
      cut.Bnu[w] = nu[w] * std::pow(lp_norm(col, pp), rp.value());
    }
    const double vio = std::exp(-margin_of(P, cut, state.f0, state.g0));
    if (violation_trace) violation_trace->push_back(vio);
    least_vio = std::min(least_vio, vio);
    if (vio <= 1.0 + 1e-6)
      return assemble(T, state.f0, state.g0, r, rp, r, r, K);
    P.cuts.push_back(std::move(cut));
    state = solve_weights(P, state);
    if (state.min_margin < -1e-9)
      throw_infeasible(K, std::exp(-state.min_margin), "cut set unsatisfiable");
  }
  throw_infeasible(K, least_vio, "max_cuts reached");
}

FactorizationCheck verify_factorization(
    const FactorizationResult& res, const OperatorMatrix& T, std::uint64_t seed,
    const std::optional<RegularityParams>& inner_regularity) {
  require(res.f.size() == T.cols() && res.g.size() == T.rows(),
          "factorization shape mismatch");
  double residual = 0.0;
  for (std::size_t w = 0; w < T.rows(); ++w)
    for (std::size_t d = 0; d < T.cols(); ++d)
      residual = std::max(
          residual, std::fabs(res.g[w] * res.inner.entry(w, d) * res.f[d] -
                              T.entry(w, d)));
  double est;
  if (inner_regularity.has_value())
    est = rho_lower_bound(res.inner, *inner_regularity, 3, seed, 12).lower;
  else
    est = operator_norm_estimate(res.inner, seed, 24).first;
  const bool ok =
      residual <= 1e-8 && est <= res.constant * (1.0 + 1e-2) + 1e-12;
  return FactorizationCheck{residual, est, ok};
}

NormEstimate matrix_inequality_constant(const OperatorMatrix& T,
                                        const Exponent& p, const Exponent& q,
                                        const Exponent& r, std::size_t rows,
                                        std::size_t cols, std::uint64_t seed) {
  require(T.domain().kind() == NormKind::WeightedLr &&
              T.codomain().kind() == NormKind::WeightedLr,
          "matrix inequality requires weighted lattice frames");
  require(Exponent(1.0) <= q && q <= p, "need 1 <= q <= p");
  require(Exponent(1.0) <= r, "need r >= 1");
  require(rows >= 1 && cols >= 1 && rows * cols <= 64,
          "matrix shape out of budget");
  const FunctionSpace& X = T.domain();
  const FunctionSpace& Y = T.codomain();
  const std::size_t dx = T.cols();
  const Vec& mu = X.weights();
  const Vec& nu = Y.weights();
  const Exponent rx = X.lr_exponent();

  NormEstimate out;
  out.tolerance = 1e-2;
  if (matrix_is_zero(T)) {
    out.lower = 0.0;
    out.upper = 0.0;
    out.upper_kind = UpperKind::OracleExact;
    out.upper_name = "zero";
    return out;
  }

  auto ratio_of = [&](const std::vector<std::vector<Vec>>& xs) {
    VectorMatrix dom{X, xs};
    std::vector<std::vector<Vec>> ys(rows, std::vector<Vec>());
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) ys[i].push_back(T.apply(xs[i][j]));
    VectorMatrix img{Y, ys};
    const double den = mixed_matrix_norm(dom, r, q);
    if (den <= 0.0) return 0.0;
    return mixed_matrix_norm(img, r, p) / den;
  };

  // One minorant ascent round: linearize the image norm through its
  // subgradient chain, then take the closed-form maximizer of the linear
  // functional over the domain-side unit ball.
  auto improve = [&](std::vector<std::vector<Vec>>& xs) {
    const double den0 = mixed_matrix_norm(VectorMatrix{X, xs}, r, q);
    if (den0 <= 0.0) return;
    for (auto& row : xs)
      for (Vec& v : row)
        for (double& c : v) c /= den0;
    std::vector<std::vector<Vec>> zs(rows, std::vector<Vec>());
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) zs[i].push_back(T.apply(xs[i][j]));
    const std::size_t dy = T.rows();
    Vec S(dy, 0.0);
    std::vector<Vec> si(dy, Vec(rows, 0.0));
    for (std::size_t w = 0; w < dy; ++w) {
      for (std::size_t i = 0; i < rows; ++i) {
        Vec rowv(cols);
        for (std::size_t j = 0; j < cols; ++j) rowv[j] = zs[i][j][w];
        si[w][i] = lp_norm(rowv, p);
      }
      S[w] = lp_norm(si[w], r);
    }
    const Vec yprime = Y.norming_functional(S);
    // c[i][j][d] = sum_w nu yprime dS/dz_{ij}(w) T[w][d]
    std::vector<std::vector<Vec>> c(rows, std::vector<Vec>(cols, Vec(dx, 0.0)));
    for (std::size_t w = 0; w < dy; ++w) {
      const double scale = nu[w] * yprime[w];
      if (scale == 0.0) continue;
      const Vec outer = lp_subgradient(si[w], r);
      for (std::size_t i = 0; i < rows; ++i) {
        if (outer[i] == 0.0) continue;
        Vec rowv(cols);
        for (std::size_t j = 0; j < cols; ++j) rowv[j] = zs[i][j][w];
        const Vec inner = lp_subgradient(rowv, p);
        for (std::size_t j = 0; j < cols; ++j) {
          const double coef = scale * outer[i] * inner[j];
          if (coef == 0.0) continue;
          for (std::size_t d = 0; d < dx; ++d)
            c[i][j][d] += coef * T.entry(w, d);
        }
      }
    }
    // Closed-form maximizer over the nested (q over j, r over i, X) ball.
    Vec M(dx, 0.0);
    std::vector<Vec> mi(dx, Vec(rows, 0.0));
    for (std::size_t d = 0; d < dx; ++d) {
      for (std::size_t i = 0; i < rows; ++i) {
        Vec rowc(cols);
        for (std::size_t j = 0; j < cols; ++j) rowc[j] = std::fabs(c[i][j][d]);
        mi[d][i] = lp_norm(rowc, conjugate_exponent(q));
      }
      M[d] = lp_norm(mi[d], conjugate_exponent(r));
    }
    const Profile tau = budget_maximize(M, mu, rx);
    for (std::size_t d = 0; d < dx; ++d) {
      const Vec phi = unit_profile(mi[d], r);
      for (std::size_t i = 0; i < rows; ++i) {
        Vec rowc(cols);
        for (std::size_t j = 0; j < cols; ++j) rowc[j] = std::fabs(c[i][j][d]);
        const Vec psi = unit_profile(rowc, q);
        for (std::size_t j = 0; j < cols; ++j)
          xs[i][j][d] = sgn(c[i][j][d]) * tau.t[d] * phi[i] * psi[j];
      }
    }
  };

  Rng rng(seed);
  std::vector<std::vector<std::vector<Vec>>> starts;
  for (int k = 0; k < 4; ++k) {
    std::vector<std::vector<Vec>> xs(rows, std::vector<Vec>(cols, Vec(dx)));
    for (auto& row : xs)
      for (Vec& v : row)
        for (double& cc : v) cc = rng.gaussian();
    starts.push_back(std::move(xs));
  }
  auto embed = [&](const std::optional<VectorTuple>& wit, bool as_row) {
    if (!wit.has_value() || wit->members.empty()) return;
    std::vector<std::vector<Vec>> xs(rows, std::vector<Vec>(cols, Vec(dx, 0.0)));
    for (std::size_t k = 0; k < wit->members.size(); ++k) {
      if (as_row && k < cols) xs[0][k] = wit->members[k];
      if (!as_row && k < rows) xs[k][0] = wit->members[k];
    }
    starts.push_back(std::move(xs));
  };
  embed(rho_lower_bound(T, RegularityParams{p, q}, cols, seed ^ 0xa1u, 8)
            .lower_witness,
        true);
  embed(rho_lower_bound(T, RegularityParams{r, r}, rows, seed ^ 0xb2u, 8)
            .lower_witness,
        false);
  for (std::size_t d = 0; d < std::min<std::size_t>(dx, 3); ++d) {
    std::vector<std::vector<Vec>> xs(rows, std::vector<Vec>(cols, Vec(dx, 0.0)));
    xs[0][0][d] = 1.0;
    starts.push_back(std::move(xs));
  }

  for (auto& xs : starts) {
    double prev = ratio_of(xs);
    for (int it = 0; it < 80; ++it) {
      improve(xs);
      const double cur = ratio_of(xs);
      if (cur <= prev * (1.0 + 1e-12)) {
        prev = std::max(prev, cur);
        break;
      }
      prev = cur;
    }
    if (prev > out.lower) {
      out.lower = prev;
      VectorTuple wit{X, {}};
      for (const auto& row : xs)
        for (const Vec& v : row) wit.members.push_back(v);
      out.lower_witness = wit;
    }
  }

  const bool same_frame =
      Y.kind() == NormKind::WeightedLr && X.atoms() == Y.atoms() &&
      X.lr_exponent() == Y.lr_exponent() && X.weights() == Y.weights();
  if (same_frame && T.is_diagonal()) {
    out.upper = T.max_abs_diagonal();
    out.upper_kind = UpperKind::OracleExact;
    out.upper_name = "diagonal frame";
    out.lower = std::max(out.lower, 0.0);
  }
  return out;
}

bool mz_coincidence_predicted(const Exponent& p, const Exponent& q,
                              const Exponent& r1, const Exponent& r2) {
  require(q <= p, "regularity class is trivial for p < q");
  const Exponent one(1.0), two(2.0);
  const bool equal_pinched = q <= r1 && r1 == r2 && r2 <= p;
  const bool both_one = r1 == one && r2 == one;
  const bool both_inf = r1.is_inf() && r2.is_inf();
  // [q,p] meets (r1, 2] resp. [2, r2); the witness t is min(p,2) / max(q,2).
  const bool low_pair = r2 <= r1 && r1 < two && q <= two && r1 < p;
  const bool high_pair = two < r2 && r2 <= r1 && two <= p && q < r2;
  const bool split_pair = r2 <= two && two <= r1 && q <= two && two <= p;
  return equal_pinched || both_one || both_inf || low_pair || high_pair ||
         split_pair;
}

std::vector<MZCell> mz_coincidence_sweep(const std::vector<MZQuery>& grid,
                                         std::size_t n, std::size_t samples,
                                         std::uint64_t seed) {
  require(n >= 2 && n <= 4, "frame size must lie in [2, 4]");
  require(samples >= 1 && samples <= 256, "sample budget out of range");
  std::vector<MZCell> out;
  out.reserve(grid.size());
  for (std::size_t ci = 0; ci < grid.size(); ++ci) {
    const MZQuery& cell = grid[ci];
    const bool predicted =
        mz_coincidence_predicted(cell.p, cell.q, cell.r1, cell.r2);
    const FunctionSpace X = FunctionSpace::weighted_lr(cell.r1, Vec(n, 1.0));
    const FunctionSpace Y = FunctionSpace::weighted_lr(cell.r2, Vec(n, 1.0));
    double worst = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
      const std::uint64_t sub =
          seed ^ (0x9e3779b97f4a7c15ULL * (ci + 1) + 0x85ebca6bULL * (k + 1));
      Rng rng(sub);
      std::vector<Vec> rows(n, Vec(n));
      for (Vec& row : rows)
        for (double& c : row) c = rng.gaussian();
      const OperatorMatrix T(X, Y, std::move(rows));
      const double opn = operator_norm_exact(T).value_or(
          operator_norm_estimate(T, sub ^ 0x2545F491u, 12).first);
      if (opn <= 1e-12) continue;
      const double rho =
          rho_lower_bound(T, RegularityParams{cell.p, cell.q}, 3,
                          sub ^ 0x5bd1e995u, 6)
              .lower;
      worst = std::max(worst, rho / opn);
    }
    out.push_back(MZCell{cell.p, cell.q, cell.r1, cell.r2, predicted, worst});
  }
  return out;
}

}  // namespace pqreg
