#include "pqreg/spaces.hpp"

#include <algorithm>

namespace pqreg {
namespace {

// Norming functional for weighted L_r at u, as a function of (r, w) so the
// same closed form serves primal and dual roles.
Vec lr_norming(const Exponent& r, const Vec& w, const Vec& u) {
  const std::size_t n = u.size();
  Vec out(n, 0.0);
  if (r.is_inf()) {
    std::size_t best = n;
    double m = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(u[j]) > m) {
        m = std::abs(u[j]);
        best = j;
      }
    }
    if (best < n) out[best] = sgn(u[best]) / w[best];
    return out;
  }
  const double rv = r.value();
  if (rv == 1.0) {
    for (std::size_t j = 0; j < n; ++j) out[j] = sgn(u[j]);
    return out;
  }
  double nrm = 0.0;
  for (std::size_t j = 0; j < n; ++j) nrm += w[j] * std::pow(std::abs(u[j]), rv);
  nrm = std::pow(nrm, 1.0 / rv);
  if (nrm == 0.0) return out;
  for (std::size_t j = 0; j < n; ++j)
    out[j] = sgn(u[j]) * std::pow(std::abs(u[j]) / nrm, rv - 1.0);
  return out;
}

double lr_norm(const Exponent& r, const Vec& w, const Vec& x) {
  if (r.is_inf()) return vec_linf(x);
  const double rv = r.value();
  if (rv == 1.0) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += w[j] * std::abs(x[j]);
    return s;
  }
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j)
    s += w[j] * std::pow(std::abs(x[j]), rv);
  return std::pow(s, 1.0 / rv);
}

// Projected ascent for sup{<xi,x> : norm(x) <= 1} on Custom norms.
std::pair<double, Vec> custom_ball_max(const FunctionSpace& space,
                                       const Vec& xi) {
  const std::size_t n = space.atoms();
  Vec grad(n);
  for (std::size_t j = 0; j < n; ++j) grad[j] = space.weights()[j] * xi[j];
  double g2 = vec_l2(grad);
  double best = 0.0;
  Vec best_x(n, 0.0);
  if (g2 == 0.0) return {0.0, best_x};

  Rng rng(0x5ca1ab1eull);
  auto polish = [&](Vec x) {
    double nx = space.norm(x);
    if (nx == 0.0) return;
    for (double& v : x) v /= nx;
    double val = space.pairing(xi, x);
    double step = 1.0;
    for (int it = 0; it < 300 && step > 1e-12; ++it) {
      Vec y(n);
      for (std::size_t j = 0; j < n; ++j) y[j] = x[j] + step * grad[j] / g2;
      double ny = space.norm(y);
      if (ny == 0.0) {
        step *= 0.5;
        continue;
      }
      for (double& v : y) v /= ny;
      double vy = space.pairing(xi, y);
      if (vy > val + 1e-9 * std::abs(val)) {
        x = y;
        val = vy;
      } else {
        step *= 0.5;
      }
    }
    if (val > best) {
      best = val;
      best_x = x;
    }
  };

  polish(grad);
  for (int restart = 0; restart < 64; ++restart) {
    Vec x(n);
    for (double& v : x) v = rng.gaussian();
    polish(x);
  }
  return {best, best_x};
}

}  // namespace

FunctionSpace FunctionSpace::weighted_lr(Exponent r, Vec weights) {
  require(!weights.empty(), "space needs at least one atom");
  for (double w : weights) require(w > 0.0, "atom weights must be positive");
  return FunctionSpace(r, std::move(weights));
}

FunctionSpace FunctionSpace::custom(Vec weights, CustomNorm norm,
                                    std::uint64_t check_seed) {
  require(!weights.empty(), "space needs at least one atom");
  for (double w : weights) require(w > 0.0, "atom weights must be positive");
  require(static_cast<bool>(norm.evaluate), "custom norm needs an evaluator");
  // Spot-check homogeneity and the triangle inequality on random vectors.
  Rng rng(check_seed);
  const std::size_t n = weights.size();
  for (int trial = 0; trial < 8; ++trial) {
    Vec x(n), y(n);
    for (double& v : x) v = rng.gaussian();
    for (double& v : y) v = rng.gaussian();
    double lam = std::exp(rng.uniform(-2.0, 2.0));
    double nx = norm.evaluate(x);
    double ny = norm.evaluate(y);
    Vec lx(n), xy(n);
    for (std::size_t j = 0; j < n; ++j) {
      lx[j] = lam * x[j];
      xy[j] = x[j] + y[j];
    }
    double scale = std::max(1.0, lam * nx);
    require(std::abs(norm.evaluate(lx) - lam * nx) <= 1e-8 * scale,
            "custom norm fails positive homogeneity");
    require(norm.evaluate(xy) <= nx + ny + 1e-8 * std::max(1.0, nx + ny),
            "custom norm fails the triangle inequality");
  }
  return FunctionSpace(std::move(weights), std::move(norm));
}

const Exponent& FunctionSpace::lr_exponent() const {
  require(kind_ == NormKind::WeightedLr, "space does not carry an L_r norm");
  return r_;
}

double FunctionSpace::norm(const Vec& x) const {
  require(x.size() == atoms(), "vector/atom count mismatch");
  if (kind_ == NormKind::Custom) return custom_->evaluate(x);
  return lr_norm(r_, weights_, x);
}

double FunctionSpace::dual_norm(const Vec& xp) const {
  require(xp.size() == atoms(), "vector/atom count mismatch");
  if (kind_ == NormKind::Custom) return custom_ball_max(*this, xp).first;
  require(r_.is_inf() || r_.value() >= 1.0,
          "dual norm requires a Banach norm (r >= 1)");
  return lr_norm(conjugate_exponent(r_), weights_, xp);
}

Vec FunctionSpace::norming_functional(const Vec& u) const {
  require(u.size() == atoms(), "vector/atom count mismatch");
  if (kind_ == NormKind::Custom) {
    if (custom_->norming) return custom_->norming(u);
    // Finite-difference subgradient of the norm; Euler homogeneity turns it
    // into a norming functional under the weighted pairing.
    const std::size_t n = atoms();
    Vec out(n, 0.0);
    double scale = vec_linf(u);
    if (scale == 0.0) return out;
    double h = 1e-6 * scale;
    Vec up = u, dn = u;
    for (std::size_t j = 0; j < n; ++j) {
      up[j] = u[j] + h;
      dn[j] = u[j] - h;
      double g = (custom_->evaluate(up) - custom_->evaluate(dn)) / (2.0 * h);
      out[j] = g / weights_[j];
      up[j] = u[j];
      dn[j] = u[j];
    }
    return out;
  }
  require(r_.is_inf() || r_.value() >= 1.0,
          "norming functional requires a Banach norm (r >= 1)");
  return lr_norming(r_, weights_, u);
}

Vec FunctionSpace::dual_support_point(const Vec& xi) const {
  require(xi.size() == atoms(), "vector/atom count mismatch");
  if (kind_ == NormKind::Custom) return custom_ball_max(*this, xi).second;
  require(r_.is_inf() || r_.value() >= 1.0,
          "support point requires a Banach norm (r >= 1)");
  return lr_norming(conjugate_exponent(r_), weights_, xi);
}

double FunctionSpace::integral(const Vec& f) const {
  require(f.size() == atoms(), "vector/atom count mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) s += weights_[j] * f[j];
  return s;
}

double FunctionSpace::pairing(const Vec& xp, const Vec& x) const {
  require(xp.size() == atoms() && x.size() == atoms(),
          "vector/atom count mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += weights_[j] * xp[j] * x[j];
  return s;
}

FunctionSpace FunctionSpace::dual_space() const {
  require(kind_ == NormKind::WeightedLr,
          "dual space is only formed for weighted L_r");
  require(r_.is_inf() || r_.value() >= 1.0,
          "dual space requires a Banach norm (r >= 1)");
  return weighted_lr(conjugate_exponent(r_), weights_);
}

bool FunctionSpace::same_lattice(const FunctionSpace& o) const {
  if (atoms() != o.atoms() || kind_ != o.kind_) return false;
  if (weights_ != o.weights_) return false;
  if (kind_ == NormKind::WeightedLr && r_ != o.r_) return false;
  if (kind_ == NormKind::Custom && custom_ != o.custom_) return false;
  return true;
}

double power_space_norm(const FunctionSpace& space, const Exponent& p,
                        const Vec& u) {
  require(!p.is_inf(), "power space norm requires finite p");
  require(u.size() == space.atoms(), "vector/atom count mismatch");
  for (double v : u) require(v >= 0.0, "power space norm requires u >= 0");
  Vec x(u.size());
  for (std::size_t j = 0; j < u.size(); ++j)
    x[j] = std::pow(u[j], 1.0 / p.value());
  return std::pow(space.norm(x), p.value());
}

double am_norm_from_element(const FunctionSpace& space, const Vec& x0,
                            const Vec& x) {
  require(x0.size() == space.atoms() && x.size() == space.atoms(),
          "vector/atom count mismatch");
  bool nonzero = false;
  for (double v : x0) {
    require(v >= 0.0, "AM-norm base element must be nonnegative");
    nonzero = nonzero || v > 0.0;
  }
  require(nonzero, "AM-norm base element must be nonzero");
  double ratio = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x0[j] == 0.0) {
      if (x[j] != 0.0) return std::numeric_limits<double>::infinity();
    } else {
      ratio = std::max(ratio, std::abs(x[j]) / x0[j]);
    }
  }
  return space.norm(x0) * ratio;
}

}  // namespace pqreg
