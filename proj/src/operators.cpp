#include "pqreg/operators.hpp"

#include <Eigen/Dense>

#include "pqreg/optim.hpp"

namespace pqreg {
namespace {

// Smallest tracked constant with |v|_Y <= C |v|_{L_2(w)} for all v.
double embed_from_l2(const FunctionSpace& Y) {
  if (Y.kind() != NormKind::WeightedLr)
    return std::numeric_limits<double>::infinity();
  const Exponent& t = Y.lr_exponent();
  double W = 0.0;
  for (double w : Y.weights()) W += w;
  double it = t.inverse();
  if (!t.is_inf() && t.value() <= 2.0) return std::pow(W, it - 0.5);
  double c = 0.0;
  for (double w : Y.weights()) c = std::max(c, std::pow(w, it - 0.5));
  return c;
}

// Smallest tracked constant with |v|_{L_2(w)} <= C |v|_X for all v.
double embed_to_l2(const FunctionSpace& X) {
  if (X.kind() != NormKind::WeightedLr)
    return std::numeric_limits<double>::infinity();
  const Exponent& r = X.lr_exponent();
  double W = 0.0;
  for (double w : X.weights()) W += w;
  double ir = r.inverse();
  if (r.is_inf() || r.value() >= 2.0) return std::pow(W, 0.5 - ir);
  double c = 0.0;
  for (double w : X.weights()) c = std::max(c, std::pow(w, 0.5 - ir));
  return c;
}

double weighted_sigma_max(const OperatorMatrix& T) {
  Eigen::MatrixXd M(T.rows(), T.cols());
  for (std::size_t i = 0; i < T.rows(); ++i)
    for (std::size_t j = 0; j < T.cols(); ++j)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::sqrt(T.codomain().weights()[i]) * T.entry(i, j) /
          std::sqrt(T.domain().weights()[j]);
  if (M.rows() == 0 || M.cols() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues()(0);
}

bool is_lr(const FunctionSpace& s, double r) {
  return s.kind() == NormKind::WeightedLr && !s.lr_exponent().is_inf() &&
         s.lr_exponent().value() == r;
}

bool is_linf(const FunctionSpace& s) {
  return s.kind() == NormKind::WeightedLr && s.lr_exponent().is_inf();
}

}  // namespace

OperatorMatrix::OperatorMatrix(FunctionSpace domain, FunctionSpace codomain,
                               std::vector<Vec> rows)
    : domain_(std::move(domain)),
      codomain_(std::move(codomain)),
      rows_(std::move(rows)) {
  require(rows_.size() == codomain_.atoms(), "row/codomain atom mismatch");
  for (const Vec& r : rows_)
    require(r.size() == domain_.atoms(), "column/domain atom mismatch");
}

OperatorMatrix OperatorMatrix::identity(const FunctionSpace& space) {
  std::vector<Vec> rows(space.atoms(), Vec(space.atoms(), 0.0));
  for (std::size_t j = 0; j < space.atoms(); ++j) rows[j][j] = 1.0;
  return OperatorMatrix(space, space, std::move(rows));
}

Vec OperatorMatrix::apply(const Vec& x) const {
  require(x.size() == cols(), "vector/domain atom mismatch");
  Vec y(rows(), 0.0);
  for (std::size_t i = 0; i < rows(); ++i) y[i] = dot(rows_[i], x);
  return y;
}

VectorTuple OperatorMatrix::apply(const VectorTuple& t) const {
  std::vector<Vec> out;
  out.reserve(t.size());
  for (const Vec& x : t.members) out.push_back(apply(x));
  return VectorTuple(codomain_, std::move(out));
}

Vec OperatorMatrix::column(std::size_t d) const {
  Vec c(rows());
  for (std::size_t i = 0; i < rows(); ++i) c[i] = rows_[i][d];
  return c;
}

bool OperatorMatrix::entrywise_nonneg() const {
  for (const Vec& r : rows_)
    for (double v : r)
      if (v < 0.0) return false;
  return true;
}

bool OperatorMatrix::is_diagonal() const {
  if (rows() != cols()) return false;
  for (std::size_t i = 0; i < rows(); ++i)
    for (std::size_t j = 0; j < cols(); ++j)
      if (i != j && rows_[i][j] != 0.0) return false;
  return true;
}

OperatorMatrix OperatorMatrix::modulus() const {
  std::vector<Vec> rows = rows_;
  for (Vec& r : rows)
    for (double& v : r) v = std::abs(v);
  return OperatorMatrix(domain_, codomain_, std::move(rows));
}

double OperatorMatrix::max_abs_diagonal() const {
  double m = 0.0;
  for (std::size_t i = 0; i < std::min(rows(), cols()); ++i)
    m = std::max(m, std::abs(rows_[i][i]));
  return m;
}

std::optional<double> operator_norm_exact(const OperatorMatrix& T) {
  const FunctionSpace& X = T.domain();
  const FunctionSpace& Y = T.codomain();

  if (T.is_diagonal() && X.same_lattice(Y)) return T.max_abs_diagonal();

  if (is_lr(X, 1.0)) {
    double m = 0.0;
    for (std::size_t d = 0; d < T.cols(); ++d)
      m = std::max(m, Y.norm(T.column(d)) / X.weights()[d]);
    return m;
  }

  if (is_linf(Y) && X.kind() == NormKind::WeightedLr) {
    // |T|_{X -> L_inf} = max_w dual-norm of the w-th row functional.
    double m = 0.0;
    for (std::size_t i = 0; i < T.rows(); ++i) {
      Vec xi(T.cols());
      for (std::size_t d = 0; d < T.cols(); ++d)
        xi[d] = T.entry(i, d) / X.weights()[d];
      m = std::max(m, X.dual_norm(xi));
    }
    return m;
  }

  if (is_lr(X, 2.0) && is_lr(Y, 2.0)) return weighted_sigma_max(T);

  if (is_linf(X) && T.cols() <= 12) {
    // The L_inf ball is the cube; any norm attains its maximum at a vertex.
    double m = 0.0;
    Vec x(T.cols());
    for (std::size_t mask = 0; mask < (std::size_t(1) << T.cols()); ++mask) {
      for (std::size_t d = 0; d < T.cols(); ++d)
        x[d] = (mask >> d) & 1 ? -1.0 : 1.0;
      m = std::max(m, Y.norm(T.apply(x)));
    }
    return m;
  }

  return std::nullopt;
}

double operator_norm_upper(const OperatorMatrix& T) {
  if (auto e = operator_norm_exact(T)) return *e;
  double c_in = embed_to_l2(T.domain());
  double c_out = embed_from_l2(T.codomain());
  if (!std::isfinite(c_in) || !std::isfinite(c_out))
    return std::numeric_limits<double>::infinity();
  return c_out * weighted_sigma_max(T) * c_in;
}

std::pair<double, Vec> operator_norm_estimate(const OperatorMatrix& T,
                                              std::uint64_t seed,
                                              int restarts) {
  const FunctionSpace& X = T.domain();
  const FunctionSpace& Y = T.codomain();
  const std::size_t D = T.cols();

  double best = 0.0;
  Vec best_x(D, 0.0);

  auto polish = [&](Vec x) {
    double nx = X.norm(x);
    if (nx == 0.0) return;
    for (double& v : x) v /= nx;
    double val = Y.norm(T.apply(x));
    for (int it = 0; it < 200; ++it) {
      Vec yp = Y.norming_functional(T.apply(x));
      Vec xi(D, 0.0);
      for (std::size_t d = 0; d < D; ++d) {
        double s = 0.0;
        for (std::size_t w = 0; w < T.rows(); ++w)
          s += Y.weights()[w] * yp[w] * T.entry(w, d);
        xi[d] = s / X.weights()[d];
      }
      Vec xn = X.dual_support_point(xi);
      double vn = Y.norm(T.apply(xn));
      if (vn <= val * (1.0 + 1e-12)) break;
      x = xn;
      val = vn;
    }
    if (val > best) {
      best = val;
      best_x = x;
    }
  };

  for (std::size_t d = 0; d < D; ++d) {
    Vec x(D, 0.0);
    x[d] = 1.0;
    polish(x);
  }
  Rng rng(seed);
  for (int r = 0; r < restarts; ++r) {
    Vec x(D);
    for (double& v : x) v = rng.gaussian();
    polish(x);
  }
  if (auto e = operator_norm_exact(T); e && *e > best) {
    // The exact value dominates; keep the best witness found.
    best = *e;
  }
  return {best, best_x};
}

}  // namespace pqreg
