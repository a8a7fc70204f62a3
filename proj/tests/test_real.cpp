#include <doctest.h>

#include "shrinklab/real.hpp"

using namespace shrinklab;

TEST_CASE("exact arithmetic stays exact") {
  RealScalar a = RealScalar::parse("1/3");
  RealScalar b = RealScalar::parse("0.25");
  RealScalar c = a * b + a / b - b;
  REQUIRE(c.is_exact());
  CHECK(*c.exact_value() == BigRational(1, 12) + BigRational(4, 3) - BigRational(1, 4));
  CHECK(c.lower() <= c.upper());
}

TEST_CASE("interval enclosures are outward rounded") {
  RealScalar two(2L);
  RealScalar s = sqrt(two);
  CHECK_FALSE(s.is_exact());
  RealScalar sq = s * s;
  CHECK(sq.lower() <= BigFloat(2.0, 64));
  CHECK(sq.upper() >= BigFloat(2.0, 64));
  CHECK(mpfr_cmp_d(s.radius().get(), 1e-140) < 0);
}

TEST_CASE("perfect roots are exact") {
  RealScalar r = root(RealScalar(BigInt(1) << 40), 4);
  REQUIRE(r.is_exact());
  CHECK(*r.exact_value() == 1024);
}

TEST_CASE("undecidable comparisons throw") {
  RealScalar x = sqrt(RealScalar(2L, 64));
  RealScalar y = x + RealScalar(BigRational(1, BigInt(1) << 200), 64);
  CHECK_THROWS_AS(compare(x, y), PrecisionError);
  CHECK(compare(RealScalar(1L), RealScalar(2L)) == -1);
  CHECK(compare(RealScalar(3L), RealScalar(3L)) == 0);
}

TEST_CASE("floor of straddling enclosure throws") {
  RealScalar x = RealScalar::from_rational_bounds(BigRational(9, 10), BigRational(11, 10));
  CHECK_THROWS_AS(floor_exact(x), PrecisionError);
  CHECK(floor_exact(RealScalar::parse("-0.5")) == -1);
}

TEST_CASE("decimal parsing and formatting round-trip") {
  CHECK(parse_rational("-0.125") == BigRational(-1, 8));
  CHECK(parse_rational("3e-4") == BigRational(3, 10000));
  CHECK(parse_rational("2.5E2") == 250);
  CHECK(parse_rational("6/4") == BigRational(3, 2));
  CHECK(format_rational(BigRational(-1, 8)) == "-0.125");
  CHECK(format_rational(BigRational(1, 3)) == "1/3");
  CHECK(format_rational(BigRational(7)) == "7");
  CHECK(format_rational(BigRational(3, 10000)) == "0.0003");
  CHECK_THROWS(parse_rational("1.2.3"));
}

TEST_CASE("decimal flooring") {
  CHECK(floor_to_decimal(BigRational(1, 3), 3) == BigRational(333, 1000));
  CHECK(ceil_to_decimal(BigRational(1, 3), 3) == BigRational(167, 500));
  CHECK(floor_to_decimal(BigRational(-1, 3), 2) == BigRational(-17, 50));
  CHECK(floor_to_decimal(BigRational(123456), 2) == 120000);
}
