#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pqreg/exponent.hpp"

using namespace pqreg;

TEST_CASE("finite exponents carry their value") {
  Exponent p(2.5);
  CHECK(!p.is_inf());
  CHECK(p.value() == doctest::Approx(2.5));
  CHECK(p.inverse() == doctest::Approx(0.4));
}

TEST_CASE("infinity is a distinguished state") {
  Exponent inf = Exponent::inf();
  CHECK(inf.is_inf());
  CHECK(inf.inverse() == 0.0);
  CHECK_THROWS_AS(inf.value(), std::invalid_argument);
}

TEST_CASE("construction rejects non-positive and non-finite values") {
  CHECK_THROWS_AS(Exponent(0.0), std::invalid_argument);
  CHECK_THROWS_AS(Exponent(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(Exponent(std::numeric_limits<double>::infinity()),
                  std::invalid_argument);
  CHECK_THROWS_AS(Exponent(std::numeric_limits<double>::quiet_NaN()),
                  std::invalid_argument);
}

TEST_CASE("order on (0, inf]") {
  Exponent one(1.0), two(2.0), inf = Exponent::inf();
  CHECK(one < two);
  CHECK(two < inf);
  CHECK(one <= one);
  CHECK(inf <= inf);
  CHECK(inf > two);
  CHECK(!(inf < inf));
  CHECK(one != two);
  CHECK(Exponent(2.0) == two);
  CHECK(inf == Exponent::inf());
  CHECK(inf != two);
}

TEST_CASE("conjugate exponent fixed values") {
  CHECK(conjugate_exponent(Exponent(2.0)).value() == doctest::Approx(2.0));
  CHECK(conjugate_exponent(Exponent(1.0)).is_inf());
  CHECK(conjugate_exponent(Exponent::inf()).value() == doctest::Approx(1.0));
  CHECK(conjugate_exponent(Exponent(4.0)).value() ==
        doctest::Approx(4.0 / 3.0));
}

TEST_CASE("conjugate exponent satisfies 1/p + 1/p' = 1 and is an involution") {
  Rng rng(11u);
  for (int k = 0; k < 200; ++k) {
    Exponent p(1.0 + 20.0 * rng.uniform());
    Exponent pc = conjugate_exponent(p);
    CHECK(p.inverse() + pc.inverse() == doctest::Approx(1.0).epsilon(1e-12));
    Exponent back = conjugate_exponent(pc);
    CHECK(back.inverse() == doctest::Approx(p.inverse()).epsilon(1e-12));
  }
}

TEST_CASE("conjugate exponent rejects p < 1") {
  CHECK_THROWS_AS(conjugate_exponent(Exponent(0.5)), std::invalid_argument);
}

TEST_CASE("string form") {
  CHECK(Exponent::inf().str() == "inf");
  CHECK(Exponent(2.0).str() == "2");
}
