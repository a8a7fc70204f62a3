#include <doctest.h>

#include <cmath>

#include "shrinklab/targets.hpp"

using namespace shrinklab;

namespace {

RealScalar golden() { return (sqrt(RealScalar(5L)) - RealScalar(1L)) / RealScalar(2L); }

ScheduleBlock block(long start, long end, const BigRational& rd, int d = 1) {
  return {start, end, rd, std::pow(rd.get_d(), 1.0 / d)};
}

std::string failing_check(const EmptyLimsupCertificate& cert, long p_max) {
  try {
    verify_empty_limsup(cert, p_max);
  } catch (const VerificationFailure& e) {
    return e.inequality();
  }
  return "";
}

}  // namespace

TEST_CASE("radius schedule basics") {
  RadiusSchedule s;
  s.blocks = {block(1, 4, BigRational(1, 2)), block(4, 10, BigRational(1, 3)), block(10, 11, BigRational(1, 5))};
  CHECK(s.monotone());
  CHECK_NOTHROW(s.validate());
  CHECK(s.radius_at(0) == 0.0);
  CHECK(s.radius_at(3) == doctest::Approx(0.5));
  CHECK(s.radius_at(4) == doctest::Approx(1.0 / 3));
  CHECK(s.radius_at(11) == 0.0);
  CHECK(s.partial_sum(5) == BigRational(3, 2) + BigRational(1, 3));
  CHECK(s.partial_sum(100) == BigRational(3, 2) + BigRational(2) + BigRational(1, 5));

  RadiusSchedule rising = s;
  rising.blocks[2].radius_pow_d = 1;
  CHECK_FALSE(rising.monotone());
  RadiusSchedule gap = s;
  gap.blocks[1].start = 5;
  CHECK_FALSE(gap.monotone());
  RadiusSchedule overlap = s;
  overlap.blocks[1].start = 3;
  CHECK_THROWS_AS(overlap.validate(), Error);
}

TEST_CASE("empty lim sup schedule for the golden mean") {
  const auto result = empty_limsup_schedule(golden(), 1, 2);
  const auto& cert = result.certificate;
  REQUIRE(cert.k.size() == 2);
  CHECK(cert.k[0] == 1);
  CHECK(cert.k[1] == 2);
  // Oracle: first Fibonacci numbers with ||q phi|| <= e^{-l}.
  CHECK(cert.q.at(1) == 2);
  CHECK(cert.q.at(2) == 5);
  CHECK(cert.q.at(3) == 13);
  CHECK(cert.q.at(5) == 89);
  CHECK(cert.q.at(25) == BigInt("32951280099"));
  CHECK(cert.q.at(125) == BigInt("971183874599339129547649988289594072811608739584170445"));
  CHECK(cert.V[0] == 90);
  CHECK(cert.entries.size() == 21 + 101);
  CHECK(result.schedule.blocks.size() == 122);
  CHECK_NOTHROW(result.schedule.validate());

  BigRational first_block = 0;
  for (const auto& e : cert.entries)
    if (e.p == 1) first_block += e.radius_pow_d;
  CHECK(first_block == BigRational(BigInt("15461449967"), BigInt("8923714800")));

  const auto report = verify_empty_limsup(cert, 2);
  CHECK(report.indices_checked == 122);
  CHECK(report.strip_pairs_checked == 1);
}

TEST_CASE("empty lim sup beyond the precision budget throws") {
  CHECK_THROWS_AS(empty_limsup_schedule(golden(), 1, 3), PrecisionError);
  CHECK(empty_limsup_schedule(golden(), 1, 0).schedule.blocks.empty());
}

TEST_CASE("tampered empty lim sup certificates name the failed check") {
  const auto base = empty_limsup_schedule(golden(), 1, 2).certificate;
  int rejected = 0;
  auto expect = [&](const EmptyLimsupCertificate& c, const std::string& check) {
    const auto got = failing_check(c, 2);
    CHECK(got == check);
    if (got == check) ++rejected;
  };

  for (std::size_t i : {0ul, 7ul, 20ul, 21ul, 121ul}) {
    auto c = base;
    c.entries[i].n += 1;
    expect(c, "a");
  }
  for (std::size_t i : {0ul, 3ul, 20ul, 50ul, 121ul}) {
    auto c = base;
    c.entries[i].radius_pow_d = 1;
    expect(c, "b");
  }
  for (const auto& [p, w] : std::vector<std::pair<int, BigRational>>{
           {1, BigRational(1, 5)}, {2, BigRational(1, 25)}, {1, BigRational(0)}, {2, BigRational(1, 1000)},
           {1, BigRational(1, 6)}}) {
    auto c = base;
    c.half_width[static_cast<std::size_t>(p - 1)] = w;
    expect(c, "c");
  }
  for (long shift : {0L, 34L, 55L, 89L, 144L}) {
    auto c = base;
    c.k[1] = c.k[0] + shift;
    for (auto& e : c.entries)
      if (e.p == 2) e.n = c.q.at(e.l) + c.k[1];
    expect(c, "d");
  }
  CHECK(rejected == 20);
}

TEST_CASE("non-BC schedule from the continued-fraction certificate") {
  const auto cv = build_liouville_cf(DecayLaw::eq3(), 6);
  const auto schedule = non_bc_schedule(cv.certificate, 6);
  REQUIRE(schedule.blocks.size() == 6);
  CHECK(schedule.blocks[0].start == 1);
  CHECK(schedule.blocks[0].end == 2);
  CHECK(schedule.blocks[1].end == 20);
  CHECK(schedule.blocks[2].end == 1458);
  CHECK(schedule.blocks[3].end == 632528);
  CHECK(schedule.blocks[1].radius == doctest::Approx(1.0 / 20));
  CHECK(schedule.monotone());

  const auto report = verify_non_bc(cv.alpha, cv.certificate, schedule, 6);
  REQUIRE(report.rows.size() == 6);
  CHECK(report.metric_constant == 4.0);
  CHECK(report.tail_constant == doctest::Approx(8.0));
  for (const auto& row : report.rows) {
    CHECK(row.block_mass >= BigRational(1, 2));
    CHECK(row.block_mass <= 1);
    CHECK(row.hit_region.value <= row.metric_bound * (1 + 1e-12));
    CHECK(row.block_union.value <= row.hit_region.value + 1e-15);
    CHECK_FALSE(row.hit_region_is_bound);
  }
  CHECK(report.rows[0].hit_region.value == 1.0);
  CHECK(report.decreasing_from_2);
  CHECK(report.fitted_constant <= 4.0);
}

TEST_CASE("non-BC schedule from nested certificates") {
  const auto cv = build_liouville_vector(1, DecayLaw::eq3(), 4);
  const auto schedule = non_bc_schedule(cv.certificate, 4);
  CHECK(schedule.blocks[3].end == BigInt(16) * (BigInt(1) << 33));
  CHECK_NOTHROW(verify_non_bc(cv.alpha, cv.certificate, schedule, 4));

  const auto cv2 = build_liouville_vector(2, DecayLaw::eq3(), 3);
  const auto s2 = non_bc_schedule(cv2.certificate, 3);
  const auto r2 = verify_non_bc(cv2.alpha, cv2.certificate, s2, 3);
  CHECK(r2.metric_constant == 16.0);
  for (const auto& row : r2.rows) CHECK(row.hit_region.value <= row.metric_bound * (1 + 1e-12));
}

TEST_CASE("non-BC rejects bad inputs") {
  const auto eq7 = build_liouville_vector(1, DecayLaw::eq7(), 3);
  CHECK_THROWS_AS(non_bc_schedule(eq7.certificate, 3), CertificateInvalid);

  const auto cv = build_liouville_cf(DecayLaw::eq3(), 5);
  auto schedule = non_bc_schedule(cv.certificate, 5);
  auto heavy = schedule;
  heavy.blocks[2].radius_pow_d *= 4;
  try {
    verify_non_bc(cv.alpha, cv.certificate, heavy, 5);
    FAIL("expected block-mass failure");
  } catch (const VerificationFailure& e) {
    CHECK(e.inequality() == "block-mass");
  }

  auto tampered = cv.certificate;
  tampered.entries[2].Q += 1;
  CHECK_THROWS_AS(verify_non_bc(cv.alpha, tampered, schedule, 5), CertificateInvalid);
}

TEST_CASE("hit sets") {
  TargetSequence target{Eigen::VectorXd::Zero(1), {}};
  target.schedule.blocks = {block(0, 10, BigRational(1, 10))};
  Eigen::VectorXd half(1);
  half << 0.5;
  const auto report = hit_set(half, target, Eigen::VectorXd::Zero(1), 20);
  CHECK(report.hits == std::vector<std::uint64_t>{0, 2, 4, 6, 8});
  CHECK(report.per_block == std::vector<std::uint64_t>{5});
  CHECK(report.to_csv(3).rfind("3,0,0\r\n3,2,0\r\n", 0) == 0);

  const auto capped = hit_set(half, target, Eigen::VectorXd::Zero(1), 20, 2);
  CHECK(capped.hits.size() == 2);
  CHECK(capped.truncated);
  CHECK_THROWS_AS(hit_set(half, target, Eigen::VectorXd::Zero(1), 100, 10, 50), BudgetExceeded);

  // Brute force with an independent orbit formula.
  Eigen::VectorXd alpha(2);
  alpha << 0.6180339887498949, 0.4142135623730951;
  TargetSequence t2{Eigen::VectorXd::Constant(2, 0.3), {}};
  t2.schedule.d = 2;
  t2.schedule.blocks = {block(5, 5000, BigRational(1, 400), 2), block(5000, 20000, BigRational(1, 2500), 2)};
  Eigen::VectorXd x(2);
  x << 0.11, 0.87;
  const auto r2 = hit_set(alpha, t2, x, 20000);
  std::vector<std::uint64_t> brute;
  for (std::uint64_t n = 0; n < 20000; ++n) {
    const double r = n < 5 ? 0.0 : (n < 5000 ? 0.05 : 0.02);
    double dist = 0.0;
    for (int i = 0; i < 2; ++i) {
      double v = std::fmod(x[i] + static_cast<double>(n) * alpha[i], 1.0) - 0.3;
      v -= std::nearbyint(v);
      dist = std::max(dist, std::abs(v));
    }
    if (r > 0.0 && dist < r) brute.push_back(n);
  }
  CHECK(r2.hits == brute);
}

TEST_CASE("BC Monte Carlo is reproducible and agrees with block nearest approach") {
  Eigen::VectorXd alpha(1);
  alpha << 0.6180339887498949;
  TargetSequence target{Eigen::VectorXd::Constant(1, 0.25), {}};
  target.schedule.blocks = {block(0, 50, BigRational(1, 200)), block(50, 400, BigRational(1, 1000))};
  const auto a = bc_monte_carlo(alpha, target, 400, 3000, 42, 1);
  const auto b = bc_monte_carlo(alpha, target, 400, 3000, 42, 1);
  CHECK(a.fraction == b.fraction);
  CHECK(a.hit_counts == b.hit_counts);
  CHECK(a.fraction > 0.0);
  CHECK(a.fraction < 1.0);
  CHECK(bc_monte_carlo(alpha, target, 400, 100, 1, 0).fraction == 1.0);

  // Measure of points hitting block 0 equals the arc union of 50 orbit points.
  const CircleRotation rot(BigRational(0.6180339887498949));
  const auto per_block = block_hit_fraction(rot, 0.25, target.schedule, 20000, 7);
  REQUIRE(per_block.size() == 2);
  const double exact0 = rot.orbit_arc_union_measure(50, 1.0 / 200);
  CHECK(std::abs(per_block[0].fraction - exact0) < 4 * per_block[0].std_error + 1e-3);

  // block_hit_fraction and hit_set agree sample by sample.
  std::uint64_t agree = 0;
  for (int s = 0; s < 200; ++s) {
    Eigen::VectorXd x(1);
    x << (s + 0.5) / 200.0;
    const auto hs = hit_set(alpha, target, x, 400);
    const bool direct = hs.per_block[1] > 0;
    const bool via_rotation = rot.nearest_approach(x[0] - 0.25, 50, 350) < 1.0 / 1000;
    if (direct == via_rotation) ++agree;
  }
  CHECK(agree == 200);
}
