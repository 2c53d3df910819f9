#include "pqreg/exponent.hpp"

#include <sstream>

namespace pqreg {

std::string Exponent::str() const {
  if (inf_) return "inf";
  std::ostringstream os;
  os << value_;
  return os.str();
}

Exponent conjugate_exponent(const Exponent& p) {
  if (p.is_inf()) return Exponent(1.0);
  require(p.value() >= 1.0, "conjugate exponent requires p >= 1");
  if (p.value() == 1.0) return Exponent::inf();
  return Exponent(p.value() / (p.value() - 1.0));
}

}  // namespace pqreg
