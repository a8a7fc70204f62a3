#include "shrinklab/rotation.hpp"

#include <algorithm>
#include <limits>

namespace shrinklab {

namespace {

BigInt floor_q(const BigRational& x) {
  BigInt out;
  mpz_fdiv_q(out.get_mpz_t(), x.get_num().get_mpz_t(), x.get_den().get_mpz_t());
  return out;
}

}  // namespace

CircleRotation::CircleRotation(const BigRational& alpha, long precision) : precision_(precision) {
  alpha_ = alpha - BigRational(floor_q(alpha));
  alpha_.canonicalize();
  // k = -1 and k = 0
  a_ = {0, 0};
  p_ = {1, 0};
  q_ = {0, 1};
  BigRational rest = alpha_;
  while (rest != 0) {
    const BigRational inv = 1 / rest;
    const BigInt a = floor_q(inv);
    rest = inv - BigRational(a);
    a_.push_back(a);
    p_.push_back(a * p_.back() + p_[p_.size() - 2]);
    q_.push_back(a * q_.back() + q_[q_.size() - 2]);
  }
}

CircleRotation CircleRotation::from_real(const RealScalar& alpha, long precision) {
  if (alpha.is_exact()) return CircleRotation(*alpha.exact_value(), precision);
  return CircleRotation(alpha.midpoint().to_rational(), precision);
}

std::vector<BigInt> CircleRotation::denominators() const { return {q_.begin() + 1, q_.end()}; }

BigRational CircleRotation::eta(long k) const {
  BigRational v = BigRational(q(k)) * alpha_ - BigRational(p(k));
  return BigRational(abs(v));
}

std::vector<CircleRotation::Gap> CircleRotation::gap_spectrum(const BigInt& points) const {
  if (points < 1) return {};
  const long K = last_index();
  const BigInt& period = q(K);  // exact denominator of alpha
  if (points >= period) {
    std::vector<Gap> out{{BigRational(1, period), period}};
    if (points > period) out.push_back({BigRational(0), points - period});
    out.front().length.canonicalize();
    return out;
  }
  long k = 0;
  while (k + 1 <= K && q(k + 1) + q(k) <= points) ++k;
  const BigInt rest = points - q(k - 1);
  const BigInt r = rest / q(k);
  const BigInt s = rest - r * q(k);
  const BigRational ek = eta(k), ekm1 = eta(k - 1);

  std::vector<Gap> out;
  if (points - q(k) > 0) out.push_back({ek, points - q(k)});
  if (s > 0) out.push_back({ekm1 - BigRational(r) * ek, s});
  out.push_back({ekm1 - BigRational(r - 1) * ek, q(k) - s});
  return out;
}

double CircleRotation::orbit_arc_union_measure(const BigInt& points, double radius) const {
  if (points < 1 || radius <= 0.0) return 0.0;
  if (radius >= 0.5) return 1.0;
  long double total = 0.0L;
  const long double width = 2.0L * radius;
  for (const auto& g : gap_spectrum(points)) {
    const long double len = static_cast<long double>(g.length.get_d());
    total += static_cast<long double>(g.multiplicity.get_d()) * std::min(len, width);
  }
  return static_cast<double>(std::min(total, 1.0L));
}

namespace {

// min over 0 <= i < count of ||c + i theta||.
BigFloat linear_min(const BigFloat& c, const BigFloat& theta, const BigInt& count, long prec) {
  BigFloat c0 = centered_fraction(c);
  BigFloat best(0.5, prec);
  auto consider = [&](const BigFloat& i) {
    BigFloat v = c0 + i * theta;
    BigFloat dist = abs(centered_fraction(v));
    if (dist < best) best = dist;
  };
  const BigFloat last(BigInt(count - 1), prec);
  consider(BigFloat(prec));
  consider(last);
  if (mpfr_zero_p(theta.get())) return best;
  for (int m = -1; m <= 1; ++m) {
    BigFloat star = (BigFloat(static_cast<double>(m), prec) - c0) / theta;
    BigFloat lo(prec), hi(prec);
    mpfr_floor(lo.get(), star.get());
    mpfr_ceil(hi.get(), star.get());
    for (BigFloat* i : {&lo, &hi}) {
      if (mpfr_sgn(i->get()) < 0 || *i > last) continue;
      consider(*i);
    }
  }
  return best;
}

}  // namespace

double CircleRotation::nearest_approach(double w, const BigInt& start, const BigInt& length) const {
  if (length < 1) return std::numeric_limits<double>::infinity();
  const long prec = precision_;
  const BigFloat alpha_f(alpha_, prec);
  const long K = last_index();
  BigInt remaining = std::min(length, q(K));  // the orbit is periodic beyond the denominator
  BigInt s = start;
  BigFloat best(0.5, prec);

  for (long k = K; k >= 0 && remaining > 0; --k) {
    const BigInt qk = q(k);
    if (qk > remaining) continue;
    const BigInt b = remaining / qk;
    const BigFloat theta(BigRational(BigRational(qk) * alpha_ - BigRational(p(k))), prec);
    BigFloat base = BigFloat(w, prec) + BigFloat(s, prec) * alpha_f;
    base = fraction(base);

    auto check_offset = [&](const BigInt& m0) {
      BigFloat c = base + BigFloat(m0, prec) * alpha_f;
      BigFloat v = linear_min(c, theta, b, prec);
      if (v < best) best = v;
    };

    if (qk <= 16) {
      for (BigInt m0 = 0; m0 < qk; ++m0) check_offset(m0);
    } else {
      BigInt inv;
      const BigInt pk = p(k);
      mpz_invert(inv.get_mpz_t(), pk.get_mpz_t(), qk.get_mpz_t());
      BigFloat target = -(base * BigFloat(qk, prec));
      BigInt rho0;
      mpfr_get_z(rho0.get_mpz_t(), target.get(), MPFR_RNDN);
      for (int delta = -4; delta <= 4; ++delta) {
        BigInt rho = rho0 + delta;
        BigInt m0 = rho * inv;
        mpz_fdiv_r(m0.get_mpz_t(), m0.get_mpz_t(), qk.get_mpz_t());
        check_offset(m0);
      }
    }
    s += b * qk;
    remaining -= b * qk;
  }
  return best.to_double();
}

}  // namespace shrinklab
