#include <doctest.h>

#include <cmath>
#include <json.hpp>
#include <map>
#include <random>

#include "shrinklab/diophantine.hpp"
#include "shrinklab/rotation.hpp"
#include "shrinklab/torus.hpp"

using namespace shrinklab;

namespace {

TorusPoint pt(std::initializer_list<double> v) {
  TorusPoint p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

const double golden_d = (std::sqrt(5.0) - 1.0) / 2.0;

}  // namespace

TEST_CASE("translate") {
  CHECK(translate(pt({0.0}), pt({0.25}), 4)[0] == 0.0);
  const TorusPoint id = translate(pt({0.1, 0.2}), pt({0.0, 0.0}), 1000000000LL);
  CHECK(id[0] == 0.1);
  CHECK(id[1] == 0.2);
  // Fibonacci denominators come back within ||F_k g|| of the start.
  long f0 = 1, f1 = 1;
  for (int k = 0; k < 30; ++k) {
    const long f2 = f0 + f1;
    f0 = f1;
    f1 = f2;
    const double back = circle_distance(translate(pt({0.0}), pt({golden_d}), f1)[0], 0.0);
    const double bound = 1.0 / (static_cast<double>(f1) * 1.3);
    CHECK(back < bound);
  }
  // composition within a few ulps
  const TorusPoint x = pt({0.3, 0.7});
  const TorusPoint a = pt({golden_d, std::sqrt(2.0) - 1.0});
  const TorusPoint two = translate(translate(x, a, 123456789LL), a, 987654321LL);
  const TorusPoint one = translate(x, a, 123456789LL + 987654321LL);
  CHECK(sup_distance(one, two) < 4e-16);
}

TEST_CASE("translate in certificate mode is exact for huge n") {
  const RealVector alpha{RealScalar(BigRational(1, 3))};
  const BigInt n("1000000000000000000000000000000001");
  const auto y = translate(RealVector{RealScalar(0L)}, alpha, n);
  REQUIRE(y[0].is_exact());
  CHECK(*y[0].exact_value() == BigRational(2, 3));  // 10^33 + 1 = 2 mod 3
  const auto cv = build_liouville_vector(1, DecayLaw::eq3(), 3);
  const auto z = translate(RealVector{RealScalar(0L)}, cv.alpha, cv.certificate.entries[2].Q);
  CHECK(certainly_le(dist_to_int(z[0]), RealScalar(cv.certificate.entries[2].bound)));
}

TEST_CASE("ball_contains") {
  const Ball b{pt({0.0}), 0.1};
  CHECK(ball_contains(b, pt({0.05})));
  CHECK(ball_contains(b, pt({0.95})));
  CHECK_FALSE(ball_contains(b, pt({0.1})));
}

TEST_CASE("union_measure_1d") {
  CHECK(union_measure_1d({{0.15, 0.05}, {0.225, 0.075}}).value == doctest::Approx(0.2));
  CHECK(union_measure_1d({{0.0, 0.1}}).value == doctest::Approx(0.2));
  CHECK(union_measure_1d({{0.1, 0.05}, {0.4, 0.05}, {0.7, 0.05}}).value == doctest::Approx(0.3));
  CHECK(union_measure_1d({{0.3, 0.6}}).value == 1.0);
  CHECK(union_measure_1d({}).value == 0.0);

  // rotation invariance and subadditivity on random arc families
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Arc> arcs, shifted;
    double sum = 0.0;
    const double shift = u(rng);
    for (int i = 0; i < 12; ++i) {
      const Arc a{u(rng), 0.08 * u(rng)};
      arcs.push_back(a);
      shifted.push_back({a.center + shift, a.radius});
      sum += std::min(2 * a.radius, 1.0);
    }
    const double m = union_measure_1d(arcs).value;
    CHECK(m == doctest::Approx(union_measure_1d(shifted).value).epsilon(1e-12));
    CHECK(m <= sum + 1e-12);
  }
}

TEST_CASE("union_measure_md") {
  const std::vector<Ball> one{{pt({0.3, 0.6}), 0.25}};
  const auto g = union_measure_md(one, GridMethod{256});
  CHECK(std::abs(g.value - 0.25) <= g.error);
  CHECK(union_measure_boxes(one).value == doctest::Approx(0.25));
  const std::vector<Ball> twice{{pt({0.3, 0.6}), 0.25}, {pt({0.3, 0.6}), 0.25}};
  CHECK(union_measure_md(twice, GridMethod{256}).value == g.value);

  std::vector<Ball> squares;
  for (double c : {0.1, 0.35, 0.6, 0.85}) squares.push_back({pt({c, 0.5}), 0.05});
  const auto sq = union_measure_md(squares, GridMethod{200});
  CHECK(std::abs(sq.value - 0.04) <= sq.error);
  CHECK(union_measure_boxes(squares).value == doctest::Approx(0.04));
  const auto mc = union_measure_md(squares, MonteCarloMethod{200000, 5});
  CHECK(std::abs(mc.value - 0.04) < 3 * mc.error);
  CHECK_THROWS_AS(union_measure_md(squares, GridMethod{100000}), BudgetExceeded);

  // wrap-around box and the exact sweep
  const std::vector<Ball> corner{{pt({0.0, 0.0}), 0.1}, {pt({0.05, 0.95}), 0.1}};
  const double exact = union_measure_boxes(corner).value;
  CHECK(exact == doctest::Approx(0.04 + 0.04 - 0.15 * 0.15));
  const auto fine = union_measure_md(corner, GridMethod{1000});
  CHECK(std::abs(fine.value - exact) <= fine.error);
  const auto json = nlohmann::json::parse(mc.to_json());
  CHECK(json["method"] == "monte-carlo");
  CHECK(json["seed"] == 5);
}

TEST_CASE("monte carlo agrees with exact arcs") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Arc> arcs;
  std::vector<Ball> balls;
  for (int i = 0; i < 20; ++i) {
    arcs.push_back({u(rng), 0.03 * u(rng)});
    balls.push_back({pt({arcs.back().center}), arcs.back().radius});
  }
  const double exact = union_measure_1d(arcs).value;
  const auto mc = union_measure_md(balls, MonteCarloMethod{50000, 99});
  CHECK(std::abs(mc.value - exact) < 3 * mc.error);
  CHECK(union_measure_boxes(balls).value == doctest::Approx(exact).epsilon(1e-12));
}

TEST_CASE("disjointness_check") {
  CHECK(disjointness_check({pt({0.0}), pt({0.5})}, 0.2));
  CHECK_FALSE(disjointness_check({pt({0.0}), pt({0.3})}, 0.2));
  std::vector<TorusPoint> orbit;
  for (int l = 0; l < 10; ++l) orbit.push_back(pt({std::fmod(l * golden_d, 1.0)}));
  // brute-force minimum pair distance over the 10 points
  double closest = 1.0;
  for (std::size_t i = 0; i < orbit.size(); ++i)
    for (std::size_t j = i + 1; j < orbit.size(); ++j) closest = std::min(closest, sup_distance(orbit[i], orbit[j]));
  CHECK(disjointness_check(orbit, closest / 2));
  CHECK_FALSE(disjointness_check(orbit, closest / 2 * 1.0001));
}

TEST_CASE("balls_to_csv") {
  const std::string csv = balls_to_csv({{pt({0.5, 0.25}), 0.125}});
  CHECK(csv == "index,c0,c1,radius\r\n0,0.5,0.25,0.125\r\n");
}

TEST_CASE("three-gap spectrum matches sorted orbits") {
  for (const BigRational alpha : {BigRational(BigInt("6180339887498948482"), BigInt("10000000000000000000")),
                                  BigRational(BigInt("1415926535897932385"), BigInt("10000000000000000000")),
                                  BigRational(5, 13)}) {
    CircleRotation rot(alpha);
    for (long P : {1L, 2L, 3L, 7L, 13L, 14L, 50L, 233L, 1000L}) {
      std::vector<BigRational> pts;
      for (long j = 0; j < P; ++j) {
        BigRational x = BigRational(j) * alpha;
        BigInt f;
        mpz_fdiv_q(f.get_mpz_t(), x.get_num().get_mpz_t(), x.get_den().get_mpz_t());
        pts.push_back(x - BigRational(f));
      }
      std::sort(pts.begin(), pts.end());
      std::map<BigRational, long> brute;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        BigRational gap = (i + 1 < pts.size() ? pts[i + 1] : pts[0] + 1) - pts[i];
        gap.canonicalize();
        brute[gap]++;
      }
      std::map<BigRational, long> got;
      for (const auto& g : rot.gap_spectrum(P)) {
        BigRational len = g.length;
        len.canonicalize();
        got[len] += g.multiplicity.get_si();
      }
      CHECK(got == brute);

      for (double rho : {0.0005, 0.003, 0.02, 0.2}) {
        std::vector<Arc> arcs;
        for (const auto& x : pts) arcs.push_back({x.get_d(), rho});
        CHECK(rot.orbit_arc_union_measure(P, rho) == doctest::Approx(union_measure_1d(arcs).value).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("nearest approach matches brute force") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto cv = build_liouville_cf(DecayLaw::eq3(), 4);
  for (const BigRational alpha : {BigRational(BigInt("6180339887498948482"), BigInt("10000000000000000000")),
                                  cv.snapshot[0], BigRational(3, 7)}) {
    CircleRotation rot(alpha);
    const double a = alpha.get_d();
    for (int trial = 0; trial < 40; ++trial) {
      const double w = u(rng);
      const long start = static_cast<long>(u(rng) * 100000);
      const long length = 1 + static_cast<long>(u(rng) * 20000);
      long double best = 1.0L;
      for (long j = start; j < start + length; ++j) {
        BigRational x = BigRational(w) + BigRational(j) * alpha;
        BigInt f;
        mpz_fdiv_q(f.get_mpz_t(), x.get_num().get_mpz_t(), x.get_den().get_mpz_t());
        double frac = BigRational(x - BigRational(f)).get_d();
        best = std::min<long double>(best, std::min(frac, 1.0 - frac));
      }
      (void)a;
      CHECK(rot.nearest_approach(w, start, length) == doctest::Approx(static_cast<double>(best)).epsilon(1e-9));
    }
  }
}
