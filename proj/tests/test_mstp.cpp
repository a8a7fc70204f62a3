#include <doctest.h>

#include <cmath>

#include "shrinklab/diophantine.hpp"
#include "shrinklab/mstp.hpp"

using namespace shrinklab;

namespace {

RealScalar golden() { return (sqrt(RealScalar(5L)) - RealScalar(1L)) / RealScalar(2L); }

CoveringInstance eighths(double radius) {
  CoveringInstance in;
  in.d = 1;
  in.Q = 4;
  in.epsilon = 0.2;
  for (int l = 0; l < 8; ++l) in.points.push_back(TorusPoint::Constant(1, l / 8.0));
  in.radii.assign(8, radius);
  return in;
}

}  // namespace

TEST_CASE("epsilon_alpha for the golden mean") {
  // Brute-force oracle over (Q, l).
  const auto e50 = epsilon_alpha({golden()}, 50);
  CHECK(e50.value == doctest::Approx(0.11306247166443353).epsilon(1e-8));
  CHECK(e50.argmin_Q == 45);
  const auto e14 = epsilon_alpha({golden()}, 1 << 14);
  const auto e15 = epsilon_alpha({golden()}, 1 << 15);
  CHECK(e15.value == doctest::Approx(0.11180730033638422).epsilon(1e-8));
  CHECK(e14.argmin_Q == 14329);
  CHECK(std::abs(e15.value - e14.value) < 0.01 * e15.value);
  CHECK(e15.value <= e14.value);
}

TEST_CASE("epsilon_alpha degenerate and budget cases") {
  CHECK(epsilon_alpha({RealScalar(BigRational(1, 4))}, 4).value == 0.0);
  CHECK(epsilon_alpha({RealScalar(BigRational(1, 4))}, 1).value == doctest::Approx(0.125));
  CHECK_THROWS_AS(epsilon_alpha({golden()}, 1000, 100), BudgetExceeded);
}

TEST_CASE("epsilon_alpha feeds disjoint orbit balls") {
  const RealVector alpha{golden(), sqrt(RealScalar(2L)) - RealScalar(1L)};
  const auto eps = epsilon_alpha(alpha, 64);
  CHECK(eps.value > 0.0);
  Eigen::VectorXd a(2);
  a << alpha[0].to_double(), alpha[1].to_double();
  for (std::uint64_t Q = 1; Q <= 64; ++Q) {
    std::vector<TorusPoint> orbit;
    for (std::uint64_t l = 0; l < 2 * Q; ++l)
      orbit.push_back(translate(TorusPoint::Constant(2, 0.3), a, -static_cast<long long>(l)));
    CHECK(disjointness_check(orbit, eps.value / std::sqrt(static_cast<double>(Q))));
  }
  const auto g = epsilon_alpha({golden()}, 300);
  Eigen::VectorXd a1(1);
  a1 << golden().to_double();
  for (std::uint64_t Q = 1; Q <= 300; ++Q) {
    std::vector<TorusPoint> orbit;
    for (std::uint64_t l = 0; l < 2 * Q; ++l)
      orbit.push_back(translate(TorusPoint::Zero(1), a1, -static_cast<long long>(l)));
    CHECK(disjointness_check(orbit, g.value / static_cast<double>(Q)));
  }
}

TEST_CASE("covering lemma worked examples") {
  const auto large = covering_lemma_check(eighths(0.06));
  CHECK(large.union_first == doctest::Approx(0.48));
  CHECK(large.union_all == doctest::Approx(0.96));
  CHECK(large.threshold == doctest::Approx(0.04));
  CHECK((large.alternative == Alternative::first || large.alternative == Alternative::both));

  const auto small = covering_lemma_check(eighths(1e-4));
  CHECK(small.alternative == Alternative::second);
  CHECK(small.margin_second == doctest::Approx(8e-4 - 4e-4));

  const auto zero = covering_lemma_check(eighths(0.0));
  CHECK(zero.alternative == Alternative::second);
  CHECK(zero.margin_second == 0.0);
  CHECK(zero.method == MeasureMethod::exact);
}

TEST_CASE("covering lemma hypothesis violations") {
  auto crowded = eighths(0.01);
  crowded.epsilon = 0.4;
  CHECK_THROWS_AS(covering_lemma_check(crowded), HypothesisViolated);
  auto rising = eighths(0.01);
  rising.radii[5] = 0.02;
  CHECK_THROWS_AS(covering_lemma_check(rising), HypothesisViolated);
  CoveringInstance tiny;
  tiny.Q = 3;
  tiny.epsilon = 0.1;
  CHECK_THROWS_AS(covering_lemma_check(tiny), HypothesisViolated);
}

TEST_CASE("random instances satisfy the hypothesis and the lemma") {
  const auto campaign = lemma_campaign({1, 2}, {4, 8, 16}, 60, 11);
  CHECK(campaign.rows.size() == 360);
  CHECK(campaign.falsifications == 0);
  CHECK(campaign.proportion_failures == 0);
  std::size_t first = 0, second = 0;
  for (const auto& r : campaign.rows) {
    if (r.verdict.alternative == Alternative::first || r.verdict.alternative == Alternative::both) ++first;
    if (r.verdict.alternative == Alternative::second || r.verdict.alternative == Alternative::both) ++second;
  }
  // The generator exercises both alternatives.
  CHECK(first > 0);
  CHECK(second > 0);
  CHECK(campaign.to_csv().rfind("instance_id,Q,d,alternative,margin_i,margin_ii\r\n", 0) == 0);
  CHECK(campaign.to_csv() == lemma_campaign({1, 2}, {4, 8, 16}, 60, 11).to_csv());
}

TEST_CASE("grid lemma measurement agrees with exact boxes") {
  LemmaOptions grid;
  grid.measure = LemmaMeasure::grid;
  int decided = 0;
  for (std::uint64_t id = 0; id < 40; ++id) {
    const auto in = random_covering_instance(2, 4, 5, id);
    const auto exact = covering_lemma_check(in);
    try {
      const auto approx = covering_lemma_check(in, grid);
      ++decided;
      CHECK_FALSE(approx.falsified());
      CHECK(std::abs(exact.union_all - approx.union_all) <= approx.error + 1e-12);
    } catch (const ResolutionInsufficient&) {
      // Margins within grid error of zero cannot be decided on a grid.
      CHECK(std::min(std::abs(exact.margin_first), std::abs(exact.margin_second)) < 1e-3);
    }
  }
  CHECK(decided >= 20);
}

TEST_CASE("mstp lower bound with harmonic radii") {
  const auto radii = harmonic_radii(0.3, 1, std::uint64_t{2} << 14);
  const auto report = mstp_lower_bound({golden()}, TorusPoint::Constant(1, 0.2), radii, 14);
  CHECK(report.eta == doctest::Approx(2.0 * report.epsilon / 10.0));
  REQUIRE(report.reached_at.has_value());
  CHECK(*report.reached_at <= 14);
  CHECK(report.monotone_unions);
  CHECK(report.recurrence_respected);
  CHECK(report.looks_divergent);
  CHECK(report.rows.size() == 15);
}

TEST_CASE("mstp lower bound with tiny radii and schedule errors") {
  std::vector<double> radii(64);
  for (std::size_t l = 0; l < radii.size(); ++l) radii[l] = 1e-6 * std::pow(0.5, static_cast<double>(l));
  const auto report = mstp_lower_bound({golden()}, TorusPoint::Zero(1), radii, 5);
  CHECK_FALSE(report.reached_at.has_value());
  CHECK_FALSE(report.looks_divergent);
  CHECK(report.recurrence_respected);

  const auto zero = mstp_lower_bound({golden()}, TorusPoint::Zero(1), std::vector<double>(64, 0.0), 5);
  CHECK(zero.rows.back().union_measure == 0.0);
  CHECK_FALSE(zero.looks_divergent);

  auto rising = radii;
  rising[10] = 1.0;
  CHECK_THROWS_AS(mstp_lower_bound({golden()}, TorusPoint::Zero(1), rising, 5), NonMonotoneSchedule);
  CHECK_THROWS_AS(mstp_lower_bound({RealScalar(BigRational(1, 4))}, TorusPoint::Zero(1), radii, 5), EpsilonZero);
}

TEST_CASE("mstp recurrence bound in two dimensions") {
  const RealVector alpha{golden(), sqrt(RealScalar(2L)) - RealScalar(1L)};
  const auto radii = harmonic_radii(0.05, 2, 256);
  const auto report = mstp_lower_bound(alpha, TorusPoint::Constant(2, 0.5), radii, 7);
  CHECK(report.monotone_unions);
  CHECK(report.recurrence_respected);
  CHECK(report.eta == doctest::Approx(4.0 * std::pow(report.epsilon / 10.0, 2)));
}
