#pragma once

#include <string>

#include "pqreg/util.hpp"

namespace pqreg {

// Extended exponent in (0, infinity]. Infinity is a distinguished state, not a
// floating-point sentinel; every consumer branches on is_inf() explicitly.
class Exponent {
 public:
  explicit Exponent(double value) : value_(value), inf_(false) {
    require(std::isfinite(value) && value > 0.0,
            "exponent must be finite and positive");
  }

  static Exponent inf() { return Exponent(inf_tag{}); }

  bool is_inf() const { return inf_; }

  // Finite value; calling this on the infinite exponent is a logic error.
  double value() const {
    require(!inf_, "exponent is infinite");
    return value_;
  }

  // 1/p with the convention 1/inf = 0.
  double inverse() const { return inf_ ? 0.0 : 1.0 / value_; }

  bool operator==(const Exponent& o) const {
    return inf_ == o.inf_ && (inf_ || value_ == o.value_);
  }
  bool operator!=(const Exponent& o) const { return !(*this == o); }

  // Order on (0, inf].
  bool operator<(const Exponent& o) const {
    if (inf_) return false;
    if (o.inf_) return true;
    return value_ < o.value_;
  }
  bool operator<=(const Exponent& o) const { return *this < o || *this == o; }
  bool operator>(const Exponent& o) const { return o < *this; }
  bool operator>=(const Exponent& o) const { return o <= *this; }

  std::string str() const;

 private:
  struct inf_tag {};
  explicit Exponent(inf_tag) : value_(0.0), inf_(true) {}

  double value_;
  bool inf_;
};

// Conjugate exponent p' with 1/p + 1/p' = 1; requires p >= 1.
// conjugate(1) = inf and conjugate(inf) = 1.
Exponent conjugate_exponent(const Exponent& p);

}  // namespace pqreg
