#include "pqreg/calculus.hpp"

#include <algorithm>

namespace pqreg {

VectorTuple::VectorTuple(FunctionSpace s, std::vector<Vec> m)
    : space(std::move(s)), members(std::move(m)) {
  for (const Vec& x : members)
    require(x.size() == space.atoms(), "tuple member/atom count mismatch");
}

VectorMatrix::VectorMatrix(FunctionSpace s, std::vector<std::vector<Vec>> r)
    : space(std::move(s)), rows(std::move(r)) {
  std::size_t cols = rows.empty() ? 0 : rows[0].size();
  for (const auto& row : rows) {
    require(row.size() == cols, "ragged vector matrix");
    for (const Vec& x : row)
      require(x.size() == space.atoms(), "entry/atom count mismatch");
  }
}

Vec p_sum(const VectorTuple& t, const Exponent& p) {
  const std::size_t atoms = t.space.atoms();
  Vec out(atoms, 0.0);
  if (t.members.empty()) return out;
  if (p.is_inf()) {
    for (const Vec& x : t.members)
      for (std::size_t d = 0; d < atoms; ++d)
        out[d] = std::max(out[d], std::abs(x[d]));
    return out;
  }
  const double pv = p.value();
  for (const Vec& x : t.members)
    for (std::size_t d = 0; d < atoms; ++d)
      out[d] += std::pow(std::abs(x[d]), pv);
  for (double& v : out) v = std::pow(v, 1.0 / pv);
  return out;
}

double psum_norm(const VectorTuple& t, const Exponent& p) {
  return t.space.norm(p_sum(t, p));
}

double mixed_matrix_norm(const VectorMatrix& m, const Exponent& outer_r,
                         const Exponent& inner_q) {
  const std::size_t atoms = m.space.atoms();
  Vec out(atoms, 0.0);
  for (std::size_t d = 0; d < atoms; ++d) {
    double acc = 0.0;
    for (const auto& row : m.rows) {
      double inner = 0.0;
      if (inner_q.is_inf()) {
        for (const Vec& x : row) inner = std::max(inner, std::abs(x[d]));
      } else {
        for (const Vec& x : row)
          inner += std::pow(std::abs(x[d]), inner_q.value());
        inner = std::pow(inner, 1.0 / inner_q.value());
      }
      if (outer_r.is_inf())
        acc = std::max(acc, inner);
      else
        acc += std::pow(inner, outer_r.value());
    }
    out[d] = outer_r.is_inf() ? acc : std::pow(acc, 1.0 / outer_r.value());
  }
  return m.space.norm(out);
}

VectorTuple pointwise_product(const VectorTuple& phi, const VectorTuple& psi) {
  require(phi.size() == psi.size(), "tuple sizes differ");
  require(phi.space.atoms() == psi.space.atoms(), "atom counts differ");
  std::vector<Vec> prods;
  prods.reserve(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    Vec p(phi.space.atoms());
    for (std::size_t d = 0; d < p.size(); ++d)
      p[d] = phi.members[i][d] * psi.members[i][d];
    prods.push_back(std::move(p));
  }
  return VectorTuple(phi.space, std::move(prods));
}

HolderCheck holder_check(const FunctionSpace& X, const VectorTuple& phi,
                         const VectorTuple& psi, const Exponent& r,
                         const Exponent& p, const Exponent& s) {
  require(!r.is_inf() && r.value() >= 1.0, "holder check needs finite r >= 1");
  require(std::abs(r.inverse() - p.inverse() - s.inverse()) <= 1e-12,
          "exponents must satisfy 1/r = 1/p + 1/s");
  require(r <= p && r <= s, "holder check needs r <= p and r <= s");
  VectorTuple prod = pointwise_product(phi, psi);
  HolderCheck chk{};
  chk.lhs = X.integral(p_sum(prod, r));
  chk.rhs = X.norm(p_sum(phi, p)) * X.dual_norm(p_sum(psi, s));
  chk.slack = chk.rhs - chk.lhs;
  chk.tolerance = 1e-9;
  chk.ok = chk.slack >= -chk.tolerance * std::max(chk.rhs, 1.0);
  return chk;
}

DualWitness dual_witness(const FunctionSpace& X, const VectorTuple& t,
                         const Exponent& p, const Exponent& r,
                         const Exponent& s) {
  require(!r.is_inf() && r.value() >= 1.0, "dual witness needs finite r >= 1");
  require(std::abs(r.inverse() - p.inverse() - s.inverse()) <= 1e-12,
          "exponents must satisfy 1/r = 1/p + 1/s");
  require(r <= p && r <= s, "dual witness needs r <= p and r <= s");
  const std::size_t atoms = X.atoms();
  const std::size_t n = t.size();
  Vec u = p_sum(t, p);
  Vec xp = X.norming_functional(u);

  std::vector<Vec> wit(n, Vec(atoms, 0.0));
  if (p.is_inf()) {
    // r = s: concentrate on the lexicographically first pointwise maximizer.
    for (std::size_t d = 0; d < atoms; ++d) {
      if (u[d] == 0.0) continue;
      std::size_t best = 0;
      double m = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(t.members[i][d]) > m) {
          m = std::abs(t.members[i][d]);
          best = i;
        }
      }
      wit[best][d] = xp[d];
    }
  } else {
    const double pv = p.value();
    const double e = pv / r.value() - 1.0;  // (p - r)/r
    const double inv_s = s.inverse();
    for (std::size_t d = 0; d < atoms; ++d) {
      if (u[d] == 0.0) continue;
      // (sum_i |x_i|^p)^{1/s} = u^{p/s}.
      double denom = std::pow(u[d], pv * inv_s);
      for (std::size_t i = 0; i < n; ++i) {
        double a = std::abs(t.members[i][d]);
        if (a == 0.0) continue;  // 0/0 = 0 convention
        wit[i][d] = std::pow(a, e) * xp[d] / denom;
      }
    }
  }

  DualWitness dw{VectorTuple(X, std::move(wit)), xp, X.norm(u), 0.0, 0.0};
  dw.pairing_value = X.integral(p_sum(pointwise_product(t, dw.witness), r));
  dw.dual_s_norm = X.dual_norm(p_sum(dw.witness, s));
  return dw;
}

SupRepresentationCheck sup_representation_check(const VectorTuple& t,
                                                const Exponent& p,
                                                std::size_t grid_size) {
  require(p.is_inf() || p.value() >= 1.0,
          "sup representation needs a Banach exponent");
  require(!t.members.empty(), "sup representation needs a nonempty tuple");
  const std::size_t n = t.size();
  const std::size_t atoms = t.space.atoms();
  const Exponent pc = conjugate_exponent(p);

  auto conj_normalize = [&](Vec a) -> Vec {
    double nrm;
    if (pc.is_inf()) {
      nrm = vec_linf(a);
    } else {
      nrm = 0.0;
      for (double v : a) nrm += std::pow(std::abs(v), pc.value());
      nrm = std::pow(nrm, 1.0 / pc.value());
    }
    if (nrm > 0.0)
      for (double& v : a) v /= nrm;
    return a;
  };

  std::vector<Vec> dirs;
  for (std::size_t i = 0; i < n; ++i) {
    Vec a(n, 0.0);
    a[i] = 1.0;
    dirs.push_back(a);
    a[i] = -1.0;
    dirs.push_back(a);
  }
  if (n <= 16) {
    for (std::size_t mask = 0; mask < (std::size_t(1) << n); ++mask) {
      Vec a(n);
      for (std::size_t i = 0; i < n; ++i)
        a[i] = (mask >> i) & 1 ? -1.0 : 1.0;
      dirs.push_back(conj_normalize(std::move(a)));
    }
  }
  if (n == 2 && !pc.is_inf()) {
    for (std::size_t k = 0; k < grid_size; ++k) {
      double th = 6.283185307179586 * static_cast<double>(k) /
                  static_cast<double>(grid_size);
      dirs.push_back(conj_normalize({std::cos(th), std::sin(th)}));
    }
  } else if (n > 2) {
    Rng rng(0x9d1c9eull + grid_size);
    for (std::size_t k = 0; k < grid_size; ++k) {
      Vec a(n);
      for (double& v : a) v = rng.gaussian();
      dirs.push_back(conj_normalize(std::move(a)));
    }
  }

  SupRepresentationCheck chk;
  chk.exact = p_sum(t, p);
  chk.grid_sup.assign(atoms, 0.0);
  for (const Vec& a : dirs) {
    for (std::size_t d = 0; d < atoms; ++d) {
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) v += a[i] * t.members[i][d];
      chk.grid_sup[d] = std::max(chk.grid_sup[d], v);
    }
  }
  chk.gap = 0.0;
  for (std::size_t d = 0; d < atoms; ++d)
    chk.gap = std::max(chk.gap, chk.exact[d] - chk.grid_sup[d]);
  chk.directions = dirs.size();
  return chk;
}

VectorTuple gaussian_tuple(const FunctionSpace& space, std::size_t n,
                           Rng& rng) {
  std::vector<Vec> mem(n, Vec(space.atoms()));
  for (Vec& x : mem)
    for (double& v : x) v = rng.gaussian();
  return VectorTuple(space, std::move(mem));
}

}  // namespace pqreg
