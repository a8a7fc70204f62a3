#include <doctest.h>

#include <cmath>

#include "shrinklab/diophantine.hpp"

using namespace shrinklab;

namespace {

RealScalar golden() { return (sqrt(RealScalar(5L)) - RealScalar(1L)) / RealScalar(2L); }
RealScalar sqrt2m1() { return sqrt(RealScalar(2L)) - RealScalar(1L); }

std::vector<long> as_longs(const std::vector<BigInt>& v) {
  std::vector<long> out;
  for (const auto& x : v) out.push_back(x.get_si());
  return out;
}

}  // namespace

TEST_CASE("cf_expand") {
  CHECK(as_longs(cf_expand(golden(), 5).quotients) == std::vector<long>{1, 1, 1, 1, 1});
  CHECK(as_longs(cf_expand(sqrt2m1(), 4).quotients) == std::vector<long>{2, 2, 2, 2});

  try {
    cf_expand(RealScalar(BigRational(3, 7)), 5);
    FAIL("expected RationalInputError");
  } catch (const RationalInputError& e) {
    CHECK(e.partial() == "[0;2,3]");
  }
}

TEST_CASE("convergent recurrence and approximation bound") {
  const RealScalar x = sqrt2m1();
  const auto cf = cf_expand(x, 40);
  for (std::size_t k = 2; k < cf.size(); ++k) {
    CHECK(cf.convergents[k].q == cf.quotients[k] * cf.convergents[k - 1].q + cf.convergents[k - 2].q);
    CHECK(cf.convergents[k].p == cf.quotients[k] * cf.convergents[k - 1].p + cf.convergents[k - 2].p);
  }
  for (std::size_t k = 0; k + 1 < cf.size(); ++k) {
    const auto& c = cf.convergents[k];
    RealScalar err = abs(RealScalar(c.q) * x - RealScalar(c.p));
    CHECK(certainly_less(err, RealScalar(BigRational(1, cf.convergents[k + 1].q))));
    CHECK(certainly_less(RealScalar(c.q) * dist_to_int(RealScalar(c.q) * x), RealScalar(1L)));
  }
}

TEST_CASE("cf on a deep expansion runs out of precision explicitly") {
  CHECK_THROWS_AS(cf_expand(golden().with_precision(64), 200), PrecisionError);
}

TEST_CASE("dist_to_int and dist_to_lattice") {
  CHECK(*dist_to_int(RealScalar::parse("0.5")).exact_value() == BigRational(1, 2));
  CHECK(*dist_to_int(RealScalar::parse("1.25")).exact_value() == BigRational(1, 4));
  CHECK(*dist_to_int(RealScalar::parse("-0.1")).exact_value() == BigRational(1, 10));
  CHECK(*dist_to_lattice({RealScalar::parse("0.5"), RealScalar::parse("0.1")}).exact_value() == BigRational(1, 2));
  CHECK(*dist_to_lattice({RealScalar(0L), RealScalar(0L), RealScalar(0L)}).exact_value() == 0);
  CHECK(*dist_to_lattice({RealScalar::parse("0.9"), RealScalar::parse("0.4")}).exact_value() == BigRational(2, 5));

  // enclosures around and across special points
  auto around = [](const char* lo, const char* hi) {
    return dist_to_int(RealScalar::from_rational_bounds(parse_rational(lo), parse_rational(hi)));
  };
  RealScalar a = around("0.45", "0.55");
  CHECK(a.lower_double() == doctest::Approx(0.45));
  CHECK(a.upper_double() == doctest::Approx(0.5));
  RealScalar b = around("-0.01", "0.02");
  CHECK(b.lower_double() == 0.0);
  CHECK(b.upper_double() == doctest::Approx(0.02));
  RealScalar c = around("2.1", "2.2");
  CHECK(c.lower_double() == doctest::Approx(0.1));
  CHECK(c.upper_double() == doctest::Approx(0.2));
}

TEST_CASE("best_sim_approx golden mean, Q_max = 100") {
  const auto result = best_sim_approx({golden()}, 100);
  std::vector<long> qs;
  for (const auto& r : result.records) qs.push_back(r.Q.get_si());
  // Exhaustive scan oracle.
  CHECK(qs == std::vector<long>{1, 2, 3, 5, 8, 13, 21, 34, 55, 89});
  CHECK(result.records.back().scaled.to_double() == doctest::Approx(0.44722488791709264).epsilon(1e-12));
  CHECK(result.best_scaled.Q == 1);
  CHECK(result.best_scaled.scaled.to_double() == doctest::Approx(0.38196601125010515).epsilon(1e-12));
  // The scaled records settle near 1/sqrt(5) from Q = 8 on.
  for (const auto& r : result.records)
    if (r.Q >= 8) CHECK(r.scaled.to_double() == doctest::Approx(0.4472136).epsilon(2e-3));
}

TEST_CASE("best_sim_approx rational and two-dimensional") {
  const auto rational = best_sim_approx({RealScalar(BigRational(1, 3))}, 10);
  CHECK(rational.records.back().Q == 3);
  CHECK(*rational.records.back().distance.exact_value() == 0);
  CHECK(*type_estimate({RealScalar(BigRational(1, 3))}, 10).exact_value() == 0);

  const auto two = best_sim_approx({golden(), sqrt2m1()}, 200);
  std::vector<long> qs;
  for (const auto& r : two.records) qs.push_back(r.Q.get_si());
  CHECK(qs == std::vector<long>{1, 2, 5, 29, 123, 157});
  CHECK(two.records.back().distance.to_double() == doctest::Approx(0.031529292575922664).epsilon(1e-12));
  CHECK(two.best_scaled.Q == 5);
  CHECK(two.best_scaled.scaled.to_double() == doctest::Approx(0.20162612375115668).epsilon(1e-12));
  CHECK_THROWS_AS(best_sim_approx({golden()}, BigInt("1000000000000")), BudgetExceeded);
}

TEST_CASE("best_sim_approx agrees with an independent double-precision scan") {
  for (double x : {0.1234567, 0.7071067811865476, 0.3183098861837907}) {
    const auto result = best_sim_approx({RealScalar(BigRational(x))}, 10000);
    std::vector<long> scan;
    double best = 1.0;
    for (long q = 1; q <= 10000; ++q) {
      double v = q * x;
      v = std::abs(v - std::nearbyint(v));
      if (v < best - 1e-15) {
        best = v;
        scan.push_back(q);
      }
    }
    std::vector<long> got;
    for (const auto& r : result.records) got.push_back(r.Q.get_si());
    CHECK(got == scan);
  }
}

TEST_CASE("type_estimate golden mean, Q_max = 1000") {
  CHECK(type_estimate({golden()}, 1000).to_double() == doctest::Approx(0.38196601125010515).epsilon(1e-12));
}

TEST_CASE("nested certificate d=1 eq3") {
  const auto cv = build_liouville_vector(1, DecayLaw::eq3(), 3);
  REQUIRE(cv.certificate.size() == 3);
  CHECK(cv.certificate.entries[0].Q == 2);
  CHECK(cv.certificate.entries[1].Q == 8);
  CHECK(cv.certificate.entries[2].Q == 4096);
  CHECK(verify_certificate(cv.alpha, cv.certificate).empty());
  for (const auto& e : cv.certificate.entries) {
    const BigRational law = BigRational(1) / (BigRational(e.n) * e.n * e.n * e.n * e.n * e.Q);
    CHECK(e.bound <= law);
  }
  // The rational snapshot satisfies the bounds as well.
  RealVector snap{RealScalar(cv.snapshot[0])};
  CHECK(verify_certificate(snap, cv.certificate).empty());
}

TEST_CASE("nested certificate d=2 eq7") {
  const auto cv = build_liouville_vector(2, DecayLaw::eq7(), 2);
  REQUIRE(cv.certificate.size() == 2);
  CHECK(cv.certificate.entries[0].Q == 4);
  CHECK(cv.certificate.entries[1].Q == 64);
  CHECK(verify_certificate(cv.alpha, cv.certificate).empty());
  // 2d+5 = 9 and 2/d = 1
  for (const auto& e : cv.certificate.entries) {
    BigRational law(1);
    for (int i = 0; i < 9; ++i) law /= e.n;
    CHECK(e.bound <= law / e.Q);
  }
  const auto deeper = build_liouville_vector(2, DecayLaw::eq7(), 4);
  CHECK(deeper.certificate.entries[3].Q == BigInt("73786976294838206464"));
}

TEST_CASE("nested stages agree after multiplication by Q_n") {
  const auto cv = build_liouville_vector(2, DecayLaw::eq3(), 3);
  for (const auto& e : cv.certificate.entries) {
    RealVector scaled;
    for (const auto& coord : cv.alpha) scaled.push_back(RealScalar(e.Q) * coord);
    CHECK(certainly_le(dist_to_lattice(scaled), RealScalar(e.bound)));
  }
}

TEST_CASE("precision exhaustion is explicit") {
  CHECK_THROWS_AS(build_liouville_vector(1, DecayLaw::eq3(), 6, 256), PrecisionError);
}

TEST_CASE("continued-fraction certificate") {
  const auto cv = build_liouville_cf(DecayLaw::eq3(), 6);
  std::vector<std::string> qs;
  for (const auto& e : cv.certificate.entries) qs.push_back(e.Q.get_str());
  CHECK(qs == std::vector<std::string>{"2", "5", "162", "39533", "40521487", "126670207895"});
  CHECK(verify_certificate(cv.alpha, cv.certificate).empty());
  const auto cf = cf_expand(RealScalar(cv.snapshot[0]), 8);
  CHECK(as_longs(cf.quotients) == std::vector<long>{2, 2, 32, 244, 1025, 3126, 7777, 16808});
}

TEST_CASE("convergent certificate with exponential decay") {
  const auto law = DecayLaw::from_function([](long n, const BigInt&, long prec) { return exp(RealScalar(-n, prec)); });
  const RealScalar g = golden();
  const auto cert = convergent_certificate(g, law, 8);
  REQUIRE(cert.size() == 8);
  for (const auto& e : cert.entries) {
    CHECK(certainly_le(dist_to_int(RealScalar(e.Q) * g), exp(RealScalar(-e.n))));
  }
  CHECK(verify_certificate({g}, cert).empty());
}

TEST_CASE("tampered certificates are rejected") {
  auto cv = build_liouville_vector(1, DecayLaw::eq3(), 3);
  auto bad = cv.certificate;
  bad.entries[2].bound /= 1000;
  CHECK_FALSE(verify_certificate(cv.alpha, bad).empty());
  bad = cv.certificate;
  bad.entries[1].Q = 3;
  CHECK_FALSE(verify_certificate(cv.alpha, bad).empty());
  CHECK_THROWS_AS(require_valid({golden()}, cv.certificate), CertificateInvalid);
}

TEST_CASE("certificate JSON round-trip is lossless") {
  const auto cv = build_liouville_vector(2, DecayLaw::eq7(), 2);
  const std::string text = certificate_to_json(cv.certificate);
  const auto back = certificate_from_json(text);
  CHECK(back.d == 2);
  CHECK(back.tag == "eq7");
  REQUIRE(back.size() == cv.certificate.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back.entries[i].Q == cv.certificate.entries[i].Q);
    CHECK(back.entries[i].bound == cv.certificate.entries[i].bound);
  }
  CHECK(back.alpha_lower == cv.certificate.alpha_lower);
  CHECK(back.alpha_upper == cv.certificate.alpha_upper);
  CHECK(certificate_to_json(back) == text);
  CHECK(verify_certificate(back.alpha(), back).empty());
}
