#include "pqreg/regular.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "pqreg/optim.hpp"

namespace pqreg {

namespace {

constexpr int kAscentMaxIters = 10000;
constexpr double kAscentRelTol = 1e-10;
constexpr std::size_t kOracleNodeBudget = 1500000;

const Exponent& one() {
  static const Exponent e(1.0);
  return e;
}

const Exponent& two() {
  static const Exponent e(2.0);
  return e;
}

void check_banach_exponents(const RegularityParams& params) {
  require(params.p >= one() && params.q >= one(),
          "regularity exponents must lie in [1, inf]");
}

double tuple_ratio(const OperatorMatrix& T, const RegularityParams& params,
                   const VectorTuple& t) {
  double den = psum_norm(t, params.q);
  if (den <= 0.0) return 0.0;
  return psum_norm(T.apply(t), params.p) / den;
}

VectorTuple scaled_tuple(const VectorTuple& t, double factor) {
  std::vector<Vec> members = t.members;
  for (Vec& m : members)
    for (double& v : m) v *= factor;
  return VectorTuple(t.space, std::move(members));
}

// Linear minorant of t -> |(sum_i |Tx_i|^p)^{1/p}|_Y at the current tuple:
// C[i][d] = sum_w wY(w) y'(w) a_i(w) T[w][d] with y' a nonnegative norming
// functional of the p-sum and a(w) a pointwise l_p superdifferential. The
// minorant touches at t, so maximizing it over the constraint ball never
// decreases the objective.
std::vector<Vec> rho_linearization(const OperatorMatrix& T,
                                   const VectorTuple& t, const Exponent& p) {
  const FunctionSpace& Y = T.codomain();
  VectorTuple image = T.apply(t);
  Vec u = p_sum(image, p);
  Vec yprime = Y.norming_functional(u);
  // u >= 0, so the modulus of a norming functional still norms it.
  for (double& v : yprime) v = std::abs(v);

  std::size_t n = t.size();
  std::size_t cols = T.cols();
  std::vector<Vec> C(n, Vec(cols, 0.0));
  Vec values(n);
  for (std::size_t w = 0; w < T.rows(); ++w) {
    double scale = Y.weights()[w] * yprime[w];
    if (scale == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) values[i] = image.members[i][w];
    Vec a = lp_superdiff(p, values);
    for (std::size_t i = 0; i < n; ++i) {
      if (a[i] == 0.0) continue;
      double coef = scale * a[i];
      for (std::size_t d = 0; d < cols; ++d) C[i][d] += coef * T.entry(w, d);
    }
  }
  return C;
}

struct Polished {
  VectorTuple tuple;
  double value = 0.0;
};

Polished polish_rho(const OperatorMatrix& T, const RegularityParams& params,
                    const VectorTuple& start) {
  double den = psum_norm(start, params.q);
  if (den <= 0.0) return {start, 0.0};
  VectorTuple t = scaled_tuple(start, 1.0 / den);
  double value = psum_norm(T.apply(t), params.p);
  for (int iter = 0; iter < kAscentMaxIters; ++iter) {
    if (value <= 0.0) break;
    std::vector<Vec> C = rho_linearization(T, t, params.p);
    BallMax step =
        max_linear_over_lattice_ball(T.domain(), params.q, C);
    VectorTuple candidate(T.domain(), step.members);
    double next = psum_norm(T.apply(candidate), params.p);
    if (!(next > value * (1.0 + kAscentRelTol))) break;
    t = std::move(candidate);
    value = next;
  }
  return {t, value};
}

std::vector<VectorTuple> ascent_starts(const OperatorMatrix& T,
                                       std::size_t tuple_size,
                                       std::uint64_t seed, int restarts) {
  const FunctionSpace& X = T.domain();
  std::size_t atoms = X.atoms();
  std::vector<VectorTuple> starts;

  for (std::size_t d = 0; d < atoms; ++d) {
    std::vector<Vec> members(tuple_size, Vec(atoms, 0.0));
    members[0][d] = 1.0;
    starts.emplace_back(X, std::move(members));
  }

  auto norm_witness = operator_norm_estimate(T, seed ^ 0x7f4a7c15u, 8);
  if (vec_linf(norm_witness.second) > 0.0) {
    std::vector<Vec> members(tuple_size, Vec(atoms, 0.0));
    members[0] = norm_witness.second;
    starts.emplace_back(X, std::move(members));
  }

  if (tuple_size > 1) {
    std::vector<Vec> members(tuple_size, Vec(atoms, 0.0));
    for (std::size_t i = 0; i < tuple_size; ++i) members[i][i % atoms] = 1.0;
    starts.emplace_back(X, std::move(members));
  }

  Rng rng(seed);
  for (int k = 0; k < restarts; ++k)
    starts.push_back(gaussian_tuple(X, tuple_size, rng));
  return starts;
}

struct UpperBound {
  double value;
  std::string name;
};

// Least applicable analytic upper bound for the (p,q)-regularity constant,
// assuming 1 <= q <= p. Every candidate is a true bound:
//  - diagonal operators on a common lattice: the pointwise inequality
//    (sum|d x_i|^p)^{1/p} <= max|d_j| (sum|x_i|^q)^{1/q} is exact;
//  - weighted L_r -> L_t with q <= r <= t <= p: the constant equals the
//    operator norm;
//  - modulus: |Tx_i| <= |T||x_i| and the triangle inequality in l_p give
//    rho_{p,q}(T) <= ||T|| of the modulus operator;
//  - p >= 2 >= q: monotonicity into the (2,2) case and the Grothendieck
//    bound for lattices give rho <= K_G ||T||.
std::optional<UpperBound> analytic_rho_upper(const OperatorMatrix& T,
                                             const RegularityParams& params) {
  std::optional<UpperBound> best;
  auto consider = [&best](double value, const char* name) {
    if (!std::isfinite(value)) return;
    if (!best || value < best->value) best = UpperBound{value, name};
  };

  const FunctionSpace& X = T.domain();
  const FunctionSpace& Y = T.codomain();
  if (T.is_diagonal() && X.same_lattice(Y))
    consider(T.max_abs_diagonal(), "diagonal");
  if (X.kind() == NormKind::WeightedLr && Y.kind() == NormKind::WeightedLr) {
    const Exponent& r = X.lr_exponent();
    const Exponent& t = Y.lr_exponent();
    if (params.q <= r && r <= t && t <= params.p) {
      auto exact = operator_norm_exact(T);
      consider(exact ? *exact : operator_norm_upper(T), "lr-exact-regularity");
    }
  }
  consider(operator_norm_upper(T.modulus()), "modulus");
  if (params.p >= two() && params.q <= two())
    consider(kGrothendieckUpper * operator_norm_upper(T), "grothendieck");
  return best;
}

void attach_upper(NormEstimate& est, const std::optional<UpperBound>& bound) {
  if (!bound) return;
  est.upper = bound->value;
  est.upper_kind = UpperKind::AnalyticBound;
  est.upper_name = bound->name;
}

NormEstimate oracle_result(double lower, VectorTuple witness, double upper) {
  NormEstimate est;
  est.lower = std::min(lower, upper);
  est.lower_witness = std::move(witness);
  est.upper = upper;
  est.upper_kind = UpperKind::OracleExact;
  est.upper_name = "oracle";
  est.tolerance = est.upper - est.lower;
  return est;
}

VectorTuple axis_singleton(const FunctionSpace& X, std::size_t tuple_size,
                           std::size_t atom, double value) {
  std::vector<Vec> members(tuple_size, Vec(X.atoms(), 0.0));
  members[0][atom] = value;
  return VectorTuple(X, std::move(members));
}

// --- exhaustive extreme-point paths -----------------------------------------
//
// The objective t -> |(sum|Tx_i|^p)^{1/p}|_Y is convex, so its maximum over a
// polytope is attained at an extreme point. For q in {1, inf} and an L_1 or
// L_inf domain the constraint ball is a polytope with at most 4096 extreme
// points under the oracle guard, enumerated below.

struct VertexBest {
  double value = 0.0;
  std::vector<Vec> members;
};

void consider_vertex(const OperatorMatrix& T, const RegularityParams& params,
                     const std::vector<Vec>& members, VertexBest& best) {
  VectorTuple t(T.domain(), members);
  double value = tuple_ratio(T, params, t);
  if (value > best.value) {
    best.value = value;
    best.members = members;
  }
}

// q = 1, domain L_1(w): the ball |sum_i |x_i||_{L_1} <= 1 is the convex hull
// of single-member axis tuples +-e_d / w_d; signs and the member slot do not
// change the objective.
VertexBest enumerate_q1_l1(const OperatorMatrix& T,
                           const RegularityParams& params,
                           std::size_t tuple_size) {
  const FunctionSpace& X = T.domain();
  VertexBest best;
  for (std::size_t d = 0; d < X.atoms(); ++d) {
    std::vector<Vec> members(tuple_size, Vec(X.atoms(), 0.0));
    members[0][d] = 1.0 / X.weights()[d];
    consider_vertex(T, params, members, best);
  }
  return best;
}

// q = 1, domain L_inf: the sup norm ignores weights, so the ball is a product
// over atoms of unit cross-polytopes sum_i |x_i(d)| <= 1; extreme points pick
// one member and one sign per atom at full budget.
VertexBest enumerate_q1_linf(const OperatorMatrix& T,
                             const RegularityParams& params,
                             std::size_t tuple_size) {
  const FunctionSpace& X = T.domain();
  std::size_t atoms = X.atoms();
  std::size_t base = 2 * tuple_size;
  std::size_t total = 1;
  for (std::size_t d = 0; d < atoms; ++d) total *= base;

  VertexBest best;
  std::vector<std::size_t> digits(atoms, 0);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t rest = code;
    for (std::size_t d = 0; d < atoms; ++d) {
      digits[d] = rest % base;
      rest /= base;
    }
    std::vector<Vec> members(tuple_size, Vec(atoms, 0.0));
    for (std::size_t d = 0; d < atoms; ++d) {
      std::size_t member = digits[d] / 2;
      members[member][d] = (digits[d] % 2 == 0) ? 1.0 : -1.0;
    }
    consider_vertex(T, params, members, best);
  }
  return best;
}

// q = inf, domain L_1(w): the ball of sum_d w_d max_i |x_i(d)| is the convex
// hull of tuples supported on one atom with every member at +-1/w_d.
VertexBest enumerate_qinf_l1(const OperatorMatrix& T,
                             const RegularityParams& params,
                             std::size_t tuple_size) {
  const FunctionSpace& X = T.domain();
  std::size_t atoms = X.atoms();
  VertexBest best;
  std::size_t patterns = std::size_t{1} << tuple_size;
  for (std::size_t d = 0; d < atoms; ++d) {
    for (std::size_t mask = 0; mask < patterns; ++mask) {
      std::vector<Vec> members(tuple_size, Vec(atoms, 0.0));
      for (std::size_t i = 0; i < tuple_size; ++i)
        members[i][d] = ((mask >> i) & 1u ? -1.0 : 1.0) / X.weights()[d];
      consider_vertex(T, params, members, best);
    }
  }
  return best;
}

// q = inf, domain L_inf: the ball is the unit box |x_i(d)| <= 1.
VertexBest enumerate_qinf_linf(const OperatorMatrix& T,
                               const RegularityParams& params,
                               std::size_t tuple_size) {
  const FunctionSpace& X = T.domain();
  std::size_t atoms = X.atoms();
  std::size_t coords = tuple_size * atoms;
  VertexBest best;
  for (std::size_t mask = 0; mask < (std::size_t{1} << coords); ++mask) {
    std::vector<Vec> members(tuple_size, Vec(atoms, 0.0));
    for (std::size_t k = 0; k < coords; ++k) {
      std::size_t i = k / atoms, d = k % atoms;
      members[i][d] = (mask >> k) & 1u ? -1.0 : 1.0;
    }
    consider_vertex(T, params, members, best);
  }
  return best;
}

// --- certified branch-and-bound ----------------------------------------------
//
// Remaining cases refine boxes in raw tuple coordinates. Both objective sides
// are subadditive and lattice-monotone, so over a box with center c and
// halfwidths h (read as a nonnegative tuple),
//   F <= F(c) + F_|T|(h)   and   G >= G(c) - G(h),
// where F_|T| applies the modulus operator; these exact modulus-of-continuity
// bounds replace global Lipschitz constants. At p = q = 2 both sides are
// invariant under orthogonal mixing of the members, so coordinates are gauged
// to an upper-triangular member-by-atom matrix with nonnegative diagonal (the
// QR shape), which removes the flat directions the invariance would create.

struct CoordLayout {
  std::size_t tuple_size;
  std::size_t atoms;
  std::vector<char> frozen;    // coordinate pinned to zero by the gauge
  std::vector<char> nonneg;    // gauge-pinned sign (triangular diagonal)
  std::size_t coords() const { return tuple_size * atoms; }
  std::size_t index(std::size_t i, std::size_t d) const {
    return i * atoms + d;
  }
};

CoordLayout make_layout(const RegularityParams& params, std::size_t tuple_size,
                        std::size_t atoms) {
  CoordLayout layout;
  layout.tuple_size = tuple_size;
  layout.atoms = atoms;
  layout.frozen.assign(tuple_size * atoms, 0);
  layout.nonneg.assign(tuple_size * atoms, 0);
  bool gauge = params.p == two() && params.q == two();
  if (gauge) {
    for (std::size_t i = 0; i < tuple_size; ++i)
      for (std::size_t d = 0; d < atoms; ++d) {
        if (i > d) layout.frozen[layout.index(i, d)] = 1;
        if (i == d) layout.nonneg[layout.index(i, d)] = 1;
      }
  }
  return layout;
}

std::vector<Vec> coords_to_members(const CoordLayout& layout, const Vec& x) {
  std::vector<Vec> members(layout.tuple_size, Vec(layout.atoms, 0.0));
  for (std::size_t i = 0; i < layout.tuple_size; ++i)
    for (std::size_t d = 0; d < layout.atoms; ++d)
      members[i][d] = x[layout.index(i, d)];
  return members;
}

struct BnbNode {
  Vec lo, hi;
  double upper;
};

struct NodeOrder {
  bool operator()(const BnbNode& a, const BnbNode& b) const {
    return a.upper < b.upper;
  }
};

double half_diag_coord(const BnbNode& node, std::size_t k) {
  return 0.5 * (node.hi[k] - node.lo[k]);
}

struct BnbState {
  double incumbent = 0.0;
  std::vector<Vec> witness;
  std::size_t evals = 0;
};

NormEstimate finish_bnb(const OperatorMatrix& T, const CoordLayout& layout,
                        std::priority_queue<BnbNode, std::vector<BnbNode>,
                                            NodeOrder>& queue,
                        const BnbState& state) {
  double upper = state.incumbent;
  if (!queue.empty()) upper = std::max(upper, queue.top().upper);
  VectorTuple witness =
      state.witness.empty()
          ? VectorTuple(T.domain(),
                        std::vector<Vec>(layout.tuple_size,
                                         Vec(layout.atoms, 0.0)))
          : VectorTuple(T.domain(), state.witness);
  return oracle_result(state.incumbent, std::move(witness), upper);
}

// Domain L_inf with finite q: the sup norm ignores weights, so the constraint
// decouples into one unit l_q ball per atom and F is maximized over that
// product directly (the denominator is one on the product boundary and
// incumbents rescale through it).
NormEstimate bnb_ball_product(const OperatorMatrix& T,
                              const RegularityParams& params,
                              std::size_t tuple_size, double grid,
                              const BnbState& seeded) {
  const FunctionSpace& X = T.domain();
  CoordLayout layout = make_layout(params, tuple_size, X.atoms());
  OperatorMatrix Tabs = T.modulus();
  std::size_t coords = layout.coords();

  auto lq_norm = [&](const Vec& v) {
    if (params.q.is_inf()) return vec_linf(v);
    double s = 0.0;
    for (double m : v) s += std::pow(std::abs(m), params.q.value());
    return std::pow(s, 1.0 / params.q.value());
  };

  auto min_column_q_norm = [&](const BnbNode& node, std::size_t d) {
    // Least q-norm of the atom-d member column over the box.
    Vec mins(layout.tuple_size);
    for (std::size_t i = 0; i < layout.tuple_size; ++i) {
      std::size_t k = layout.index(i, d);
      double a = node.lo[k], b = node.hi[k];
      mins[i] = (a <= 0.0 && b >= 0.0) ? 0.0 : std::min(std::abs(a),
                                                        std::abs(b));
    }
    return lq_norm(mins);
  };

  BnbState state = seeded;
  auto evaluate = [&](BnbNode& node) -> bool {
    // Feasibility: some point of the box must satisfy every atom ball.
    for (std::size_t d = 0; d < X.atoms(); ++d)
      if (min_column_q_norm(node, d) > 1.0 + 1e-14) return false;
    Vec center(coords), half(coords);
    for (std::size_t k = 0; k < coords; ++k) {
      center[k] = 0.5 * (node.lo[k] + node.hi[k]);
      half[k] = half_diag_coord(node, k);
    }
    VectorTuple tc(X, coords_to_members(layout, center));
    VectorTuple th(X, coords_to_members(layout, half));
    double fc = psum_norm(T.apply(tc), params.p);
    double fslack = psum_norm(Tabs.apply(th), params.p);
    node.upper = fc + fslack;
    ++state.evals;

    // Incumbent: scale the center per atom into the feasible product, then
    // divide by the exact constraint value.
    std::vector<Vec> proj = tc.members;
    for (std::size_t d = 0; d < X.atoms(); ++d) {
      Vec col(layout.tuple_size);
      for (std::size_t i = 0; i < layout.tuple_size; ++i) col[i] = proj[i][d];
      double qn = lq_norm(col);
      if (qn > 1.0)
        for (std::size_t i = 0; i < layout.tuple_size; ++i)
          proj[i][d] /= qn;
    }
    VectorTuple tp(X, proj);
    double value = tuple_ratio(T, params, tp);
    if (value > state.incumbent) {
      state.incumbent = value;
      state.witness = tp.members;
    }
    return node.upper > state.incumbent;
  };

  std::priority_queue<BnbNode, std::vector<BnbNode>, NodeOrder> queue;
  BnbNode root;
  root.lo.assign(coords, 0.0);
  root.hi.assign(coords, 0.0);
  for (std::size_t k = 0; k < coords; ++k) {
    if (layout.frozen[k]) continue;
    root.lo[k] = layout.nonneg[k] ? 0.0 : -1.0;
    root.hi[k] = 1.0;
  }
  if (evaluate(root)) queue.push(root);

  while (!queue.empty() && state.evals < kOracleNodeBudget) {
    BnbNode node = queue.top();
    if (node.upper - state.incumbent <= grid) break;
    queue.pop();
    std::size_t split = 0;
    double width = -1.0;
    for (std::size_t k = 0; k < coords; ++k) {
      double w = node.hi[k] - node.lo[k];
      if (w > width) {
        width = w;
        split = k;
      }
    }
    if (width <= 0.0) continue;
    double mid = 0.5 * (node.lo[split] + node.hi[split]);
    BnbNode left = node, right = node;
    left.hi[split] = mid;
    right.lo[split] = mid;
    if (evaluate(left)) queue.push(left);
    if (evaluate(right)) queue.push(right);
  }
  return finish_bnb(T, layout, queue, state);
}

// General path: the ratio is scale invariant, so the search runs over the
// faces of the coordinate cube, where the pinned coordinate keeps the
// denominator above |e_d|_X > 0.
NormEstimate bnb_faces(const OperatorMatrix& T, const RegularityParams& params,
                       std::size_t tuple_size, double grid,
                       const BnbState& seeded) {
  const FunctionSpace& X = T.domain();
  CoordLayout layout = make_layout(params, tuple_size, X.atoms());
  OperatorMatrix Tabs = T.modulus();
  std::size_t coords = layout.coords();

  Vec atom_floor(X.atoms());
  for (std::size_t d = 0; d < X.atoms(); ++d) {
    Vec e(X.atoms(), 0.0);
    e[d] = 1.0;
    atom_floor[d] = X.norm(e);
  }

  BnbState state = seeded;
  auto evaluate = [&](BnbNode& node, double floor) -> bool {
    Vec center(coords), half(coords);
    for (std::size_t k = 0; k < coords; ++k) {
      center[k] = 0.5 * (node.lo[k] + node.hi[k]);
      half[k] = half_diag_coord(node, k);
    }
    VectorTuple tc(X, coords_to_members(layout, center));
    VectorTuple th(X, coords_to_members(layout, half));
    double fc = psum_norm(T.apply(tc), params.p);
    double fslack = psum_norm(Tabs.apply(th), params.p);
    double gc = psum_norm(tc, params.q);
    double gslack = psum_norm(th, params.q);
    double den_lower = std::max(floor, gc - gslack);
    node.upper = (fc + fslack) / den_lower;
    ++state.evals;

    if (gc > 0.0) {
      double value = fc / gc;
      if (value > state.incumbent) {
        state.incumbent = value;
        state.witness = tc.members;
      }
    }
    return node.upper > state.incumbent;
  };

  // Each face keeps the denominator floor of its pinned coordinate.
  struct TaggedNode {
    BnbNode node;
    double floor;
  };
  auto node_less = [](const TaggedNode& a, const TaggedNode& b) {
    return a.node.upper < b.node.upper;
  };
  std::priority_queue<TaggedNode, std::vector<TaggedNode>, decltype(node_less)>
      heap(node_less);

  for (std::size_t k = 0; k < coords; ++k) {
    if (layout.frozen[k]) continue;
    BnbNode root;
    root.lo.assign(coords, 0.0);
    root.hi.assign(coords, 0.0);
    for (std::size_t j = 0; j < coords; ++j) {
      if (layout.frozen[j]) continue;
      root.lo[j] = layout.nonneg[j] ? 0.0 : -1.0;
      root.hi[j] = 1.0;
    }
    double floor = atom_floor[k % X.atoms()];
    for (double sign : layout.nonneg[k] ? std::vector<double>{1.0}
                                        : std::vector<double>{1.0, -1.0}) {
      BnbNode face = root;
      face.lo[k] = sign;
      face.hi[k] = sign;
      if (evaluate(face, floor)) heap.push(TaggedNode{face, floor});
    }
  }

  while (!heap.empty() && state.evals < kOracleNodeBudget) {
    TaggedNode top = heap.top();
    if (top.node.upper - state.incumbent <= grid) break;
    heap.pop();
    std::size_t split = 0;
    double width = -1.0;
    for (std::size_t k = 0; k < coords; ++k) {
      double w = top.node.hi[k] - top.node.lo[k];
      if (w > width) {
        width = w;
        split = k;
      }
    }
    if (width <= 0.0) continue;
    double mid = 0.5 * (top.node.lo[split] + top.node.hi[split]);
    TaggedNode left = top, right = top;
    left.node.hi[split] = mid;
    right.node.lo[split] = mid;
    if (evaluate(left.node, left.floor)) heap.push(left);
    if (evaluate(right.node, right.floor)) heap.push(right);
  }

  double upper = state.incumbent;
  if (!heap.empty()) upper = std::max(upper, heap.top().node.upper);
  VectorTuple witness =
      state.witness.empty()
          ? VectorTuple(X, std::vector<Vec>(tuple_size, Vec(X.atoms(), 0.0)))
          : VectorTuple(X, state.witness);
  return oracle_result(state.incumbent, std::move(witness), upper);
}

}  // namespace

NormEstimate rho_lower_bound(const OperatorMatrix& T,
                             const RegularityParams& params,
                             std::size_t tuple_size, std::uint64_t seed,
                             int restarts) {
  check_banach_exponents(params);
  require(params.q <= params.p, "rho estimator needs q <= p");
  require(tuple_size >= 1, "tuple_size must be at least 1");
  require(restarts >= 0, "restarts must be nonnegative");

  Polished best{VectorTuple(T.domain(),
                            std::vector<Vec>(tuple_size,
                                             Vec(T.domain().atoms(), 0.0))),
                0.0};
  for (const VectorTuple& start :
       ascent_starts(T, tuple_size, seed, restarts)) {
    Polished candidate = polish_rho(T, params, start);
    if (candidate.value > best.value) best = std::move(candidate);
  }

  NormEstimate est;
  est.lower = best.value;
  est.lower_witness = best.tuple;
  est.tolerance = 1e-2;
  attach_upper(est, analytic_rho_upper(T, params));
  return est;
}

NormEstimate rho_oracle(const OperatorMatrix& T, const RegularityParams& params,
                        std::size_t tuple_size, double grid) {
  check_banach_exponents(params);
  require(tuple_size >= 1, "tuple_size must be at least 1");
  require(grid > 0.0, "grid must be positive");
  require(T.domain().atoms() * tuple_size <= 12,
          "oracle guard: domain atoms * tuple_size must be <= 12");

  const FunctionSpace& X = T.domain();
  const FunctionSpace& Y = T.codomain();

  if (params.q <= params.p) {
    if (T.is_diagonal() && X.same_lattice(Y)) {
      double value = T.max_abs_diagonal();
      std::size_t arg = 0;
      for (std::size_t d = 0; d < T.cols(); ++d)
        if (std::abs(T.entry(d, d)) > std::abs(T.entry(arg, arg))) arg = d;
      VectorTuple witness = axis_singleton(X, tuple_size, arg, 1.0);
      double lower = tuple_ratio(T, params, witness);
      return oracle_result(lower, std::move(witness), value);
    }
    if (X.kind() == NormKind::WeightedLr && Y.kind() == NormKind::WeightedLr &&
        params.q <= X.lr_exponent() && X.lr_exponent() <= Y.lr_exponent() &&
        Y.lr_exponent() <= params.p) {
      if (auto exact = operator_norm_exact(T)) {
        auto est = operator_norm_estimate(T, 0x0a0b0c0du, 24);
        std::vector<Vec> members(tuple_size, Vec(X.atoms(), 0.0));
        members[0] = est.second;
        VectorTuple witness(X, std::move(members));
        double lower = tuple_ratio(T, params, witness);
        return oracle_result(lower, std::move(witness), *exact);
      }
    }
  }

  if (tuple_size == 1) {
    if (auto exact = operator_norm_exact(T)) {
      auto est = operator_norm_estimate(T, 0x0a0b0c0du, 24);
      VectorTuple witness(X, {est.second});
      double lower = tuple_ratio(T, params, witness);
      return oracle_result(lower, std::move(witness), *exact);
    }
  }

  if (X.kind() == NormKind::WeightedLr) {
    bool q_one = params.q == one();
    bool q_inf = params.q.is_inf();
    bool r_one = X.lr_exponent() == one();
    bool r_inf = X.lr_exponent().is_inf();
    if ((q_one || q_inf) && (r_one || r_inf)) {
      VertexBest best;
      if (q_one && r_one) best = enumerate_q1_l1(T, params, tuple_size);
      if (q_one && r_inf) best = enumerate_q1_linf(T, params, tuple_size);
      if (q_inf && r_one) best = enumerate_qinf_l1(T, params, tuple_size);
      if (q_inf && r_inf) best = enumerate_qinf_linf(T, params, tuple_size);
      VectorTuple witness(X, best.members);
      return oracle_result(best.value, std::move(witness), best.value);
    }
  }

  BnbState seeded;
  if (params.q <= params.p) {
    NormEstimate warm = rho_lower_bound(T, params, tuple_size, 0x5eedcafeu, 12);
    if (warm.lower_witness && warm.lower > 0.0) {
      double den = psum_norm(*warm.lower_witness, params.q);
      if (den > 0.0) {
        seeded.incumbent = warm.lower;
        seeded.witness = scaled_tuple(*warm.lower_witness, 1.0 / den).members;
      }
    }
  }

  if (X.kind() == NormKind::WeightedLr && X.lr_exponent().is_inf() &&
      !params.q.is_inf())
    return bnb_ball_product(T, params, tuple_size, grid, seeded);
  return bnb_faces(T, params, tuple_size, grid, seeded);
}

double rho_growth_witness(const OperatorMatrix& T,
                          const RegularityParams& params, const Vec& x,
                          std::size_t n) {
  check_banach_exponents(params);
  require(params.p < params.q, "growth witness needs p < q");
  require(n >= 1, "witness length must be at least 1");
  double nx = T.domain().norm(x);
  require(nx > 0.0, "growth witness needs x != 0");
  double ny = T.codomain().norm(T.apply(x));
  require(ny > 0.0, "growth witness needs Tx != 0");
  double exponent = params.p.inverse() - params.q.inverse();
  return std::pow(static_cast<double>(n), exponent) * ny / nx;
}

NormEstimate concavity_norm(const OperatorMatrix& T,
                            const RegularityParams& params,
                            std::size_t tuple_size, std::uint64_t seed,
                            int restarts) {
  check_banach_exponents(params);
  require(params.q <= params.p, "concavity estimator needs q <= p");
  require(tuple_size >= 1, "tuple_size must be at least 1");

  const FunctionSpace& X = T.domain();
  const FunctionSpace& Y = T.codomain();

  auto strong_psum = [&](const VectorTuple& image) {
    Vec norms(image.size());
    for (std::size_t i = 0; i < image.size(); ++i)
      norms[i] = Y.norm(image.members[i]);
    if (params.p.is_inf()) return vec_linf(norms);
    double s = 0.0;
    for (double v : norms) s += std::pow(std::abs(v), params.p.value());
    return std::pow(s, 1.0 / params.p.value());
  };

  auto polish = [&](const VectorTuple& start) -> Polished {
    double den = psum_norm(start, params.q);
    if (den <= 0.0) return {start, 0.0};
    VectorTuple t = scaled_tuple(start, 1.0 / den);
    double value = strong_psum(T.apply(t));
    for (int iter = 0; iter < kAscentMaxIters; ++iter) {
      if (value <= 0.0) break;
      VectorTuple image = T.apply(t);
      Vec norms(t.size());
      for (std::size_t i = 0; i < t.size(); ++i)
        norms[i] = Y.norm(image.members[i]);
      Vec b = lp_superdiff(params.p, norms);
      std::vector<Vec> C(t.size(), Vec(X.atoms(), 0.0));
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (b[i] == 0.0 || norms[i] == 0.0) continue;
        Vec yprime = Y.norming_functional(image.members[i]);
        for (std::size_t w = 0; w < T.rows(); ++w) {
          double scale = b[i] * Y.weights()[w] * yprime[w];
          if (scale == 0.0) continue;
          for (std::size_t d = 0; d < X.atoms(); ++d)
            C[i][d] += scale * T.entry(w, d);
        }
      }
      BallMax step = max_linear_over_lattice_ball(X, params.q, C);
      VectorTuple candidate(X, step.members);
      double next = strong_psum(T.apply(candidate));
      if (!(next > value * (1.0 + kAscentRelTol))) break;
      t = std::move(candidate);
      value = next;
    }
    return {t, value};
  };

  Polished best{VectorTuple(X, std::vector<Vec>(tuple_size,
                                                Vec(X.atoms(), 0.0))),
                0.0};
  for (const VectorTuple& start :
       ascent_starts(T, tuple_size, seed, restarts)) {
    Polished candidate = polish(start);
    if (candidate.value > best.value) best = std::move(candidate);
  }

  NormEstimate est;
  est.lower = best.value;
  est.lower_witness = best.tuple;
  est.tolerance = 1e-2;
  // A weighted L_t codomain with t <= p is p-concave with constant one, so
  // every regularity upper bound applies.
  if (Y.kind() == NormKind::WeightedLr && Y.lr_exponent() <= params.p) {
    if (auto bound = analytic_rho_upper(T, params)) {
      est.upper = bound->value;
      est.upper_kind = UpperKind::AnalyticBound;
      est.upper_name = bound->name + std::string("/via-regularity");
    }
  }
  return est;
}

NormEstimate convexity_norm(const OperatorMatrix& T,
                            const RegularityParams& params,
                            std::size_t tuple_size, std::uint64_t seed,
                            int restarts) {
  check_banach_exponents(params);
  require(params.q <= params.p, "convexity estimator needs q <= p");
  require(tuple_size >= 1, "tuple_size must be at least 1");

  const FunctionSpace& X = T.domain();

  auto strong_qnorm = [&](const VectorTuple& t) {
    Vec norms(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
      norms[i] = X.norm(t.members[i]);
    if (params.q.is_inf()) return vec_linf(norms);
    double s = 0.0;
    for (double v : norms) s += std::pow(std::abs(v), params.q.value());
    return std::pow(s, 1.0 / params.q.value());
  };

  auto polish = [&](const VectorTuple& start) -> Polished {
    double den = strong_qnorm(start);
    if (den <= 0.0) return {start, 0.0};
    VectorTuple t = scaled_tuple(start, 1.0 / den);
    double value = psum_norm(T.apply(t), params.p);
    for (int iter = 0; iter < kAscentMaxIters; ++iter) {
      if (value <= 0.0) break;
      std::vector<Vec> C = rho_linearization(T, t, params.p);
      BallMax step = max_linear_over_strong_ball(X, params.q, C);
      VectorTuple candidate(X, step.members);
      double next = psum_norm(T.apply(candidate), params.p);
      if (!(next > value * (1.0 + kAscentRelTol))) break;
      t = std::move(candidate);
      value = next;
    }
    return {t, value};
  };

  Polished best{VectorTuple(X, std::vector<Vec>(tuple_size,
                                                Vec(X.atoms(), 0.0))),
                0.0};
  for (const VectorTuple& start :
       ascent_starts(T, tuple_size, seed, restarts)) {
    Polished candidate = polish(start);
    if (candidate.value > best.value) best = std::move(candidate);
  }

  NormEstimate est;
  est.lower = best.value;
  est.lower_witness = best.tuple;
  est.tolerance = 1e-2;
  // A weighted L_r domain with r <= q is q-convex with constant one, so the
  // lattice q-ball contains the strong one and regularity bounds carry over.
  if (X.kind() == NormKind::WeightedLr && X.lr_exponent() <= params.q) {
    if (auto bound = analytic_rho_upper(T, params)) {
      est.upper = bound->value;
      est.upper_kind = UpperKind::AnalyticBound;
      est.upper_name = bound->name + std::string("/via-regularity");
    }
  }
  return est;
}

NormEstimate bilinear_PT_norm(const OperatorMatrix& T, const Exponent& r,
                              const Exponent& q, const Exponent& s,
                              std::size_t tuple_size, std::uint64_t seed,
                              int restarts) {
  require(r >= one() && q >= one() && s >= one(),
          "bilinear exponents must lie in [1, inf]");
  require(tuple_size >= 1, "tuple_size must be at least 1");
  require(r.inverse() >= s.inverse() - 1e-15,
          "bilinear exponents need 1/r = 1/p + 1/s with p >= 1");
  require(T.codomain().kind() == NormKind::WeightedLr,
          "bilinear form needs a weighted lattice codomain");

  double pinv = r.inverse() - s.inverse();
  RegularityParams derived{pinv <= 1e-15 ? Exponent::inf()
                                         : Exponent(1.0 / pinv),
                           q};
  require(derived.q <= derived.p, "derived exponents need q <= p");

  const FunctionSpace& X = T.domain();
  const FunctionSpace& Y = T.codomain();
  FunctionSpace Yd = Y.dual_space();
  std::size_t n = tuple_size;
  std::size_t rows = T.rows();

  auto objective = [&](const VectorTuple& x, const VectorTuple& yp) {
    double total = 0.0;
    VectorTuple image = T.apply(x);
    Vec vals(n);
    for (std::size_t w = 0; w < rows; ++w) {
      for (std::size_t i = 0; i < n; ++i)
        vals[i] = image.members[i][w] * yp.members[i][w];
      double rsum;
      if (r.is_inf()) {
        rsum = vec_linf(vals);
      } else {
        double acc = 0.0;
        for (double v : vals) acc += std::pow(std::abs(v), r.value());
        rsum = std::pow(acc, 1.0 / r.value());
      }
      total += Y.weights()[w] * rsum;
    }
    return total;
  };

  struct BilinearPolish {
    VectorTuple x;
    VectorTuple yp;
    double value;
  };
  auto polish = [&](VectorTuple x, VectorTuple yp) -> BilinearPolish {
    double dx = psum_norm(x, q);
    double dy = psum_norm(yp, s);
    if (dx <= 0.0 || dy <= 0.0) return {std::move(x), std::move(yp), 0.0};
    x = scaled_tuple(x, 1.0 / dx);
    yp = scaled_tuple(yp, 1.0 / dy);
    double value = objective(x, yp);
    for (int iter = 0; iter < 200; ++iter) {
      if (value <= 0.0) break;
      // x-step: linear coefficients at the current superdifferential.
      VectorTuple image = T.apply(x);
      std::vector<Vec> Cx(n, Vec(X.atoms(), 0.0));
      Vec vals(n);
      for (std::size_t w = 0; w < rows; ++w) {
        for (std::size_t i = 0; i < n; ++i)
          vals[i] = image.members[i][w] * yp.members[i][w];
        Vec a = lp_superdiff(r, vals);
        for (std::size_t i = 0; i < n; ++i) {
          double coef = Y.weights()[w] * a[i] * yp.members[i][w];
          if (coef == 0.0) continue;
          for (std::size_t d = 0; d < X.atoms(); ++d)
            Cx[i][d] += coef * T.entry(w, d);
        }
      }
      BallMax xstep = max_linear_over_lattice_ball(X, q, Cx);
      VectorTuple xc(X, xstep.members);
      double after_x = objective(xc, yp);
      if (after_x > value) {
        x = std::move(xc);
        value = after_x;
      }

      // y'-step with the superdifferential refreshed at the new x.
      image = T.apply(x);
      std::vector<Vec> Cy(n, Vec(rows, 0.0));
      for (std::size_t w = 0; w < rows; ++w) {
        for (std::size_t i = 0; i < n; ++i)
          vals[i] = image.members[i][w] * yp.members[i][w];
        Vec a = lp_superdiff(r, vals);
        for (std::size_t i = 0; i < n; ++i)
          Cy[i][w] = Y.weights()[w] * a[i] * image.members[i][w];
      }
      BallMax ystep = max_linear_over_lattice_ball(Yd, s, Cy);
      VectorTuple yc(Yd, ystep.members);
      double after_y = objective(x, yc);
      if (!(after_y > value * (1.0 + kAscentRelTol))) break;
      yp = std::move(yc);
      value = after_y;
    }
    return {std::move(x), std::move(yp), value};
  };

  Rng rng(seed);
  double best_value = 0.0;
  VectorTuple best_x(X, std::vector<Vec>(n, Vec(X.atoms(), 0.0)));
  VectorTuple best_y(Yd, std::vector<Vec>(n, Vec(rows, 0.0)));
  int total_starts = std::max(restarts, 1) + 2;
  for (int k = 0; k < total_starts; ++k) {
    VectorTuple x0 = gaussian_tuple(X, n, rng);
    VectorTuple y0 = gaussian_tuple(Yd, n, rng);
    if (k == 0) {
      // Deterministic axis start.
      std::vector<Vec> xm(n, Vec(X.atoms(), 0.0));
      std::vector<Vec> ym(n, Vec(rows, 0.0));
      for (std::size_t i = 0; i < n; ++i) {
        xm[i][i % X.atoms()] = 1.0;
        ym[i][i % rows] = 1.0;
      }
      x0 = VectorTuple(X, xm);
      y0 = VectorTuple(Yd, ym);
    }
    BilinearPolish out = polish(std::move(x0), std::move(y0));
    if (out.value > best_value) {
      best_value = out.value;
      best_x = std::move(out.x);
      best_y = std::move(out.yp);
    }
  }

  NormEstimate est;
  est.lower = best_value;
  est.lower_witness = best_x;
  est.dual_witness = best_y;
  est.tolerance = 1e-2;
  // Holder pairing bounds the bilinear form by the regularity constant, so
  // analytic (p,q) upper bounds remain valid here.
  attach_upper(est, analytic_rho_upper(T, derived));
  return est;
}

}  // namespace pqreg
