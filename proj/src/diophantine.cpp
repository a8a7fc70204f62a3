#include "shrinklab/diophantine.hpp"

#include <sstream>

namespace shrinklab {

std::string ContinuedFraction::to_string() const {
  std::ostringstream out;
  out << '[' << integer_part.get_str() << ';';
  for (std::size_t i = 0; i < quotients.size(); ++i) {
    if (i) out << ',';
    out << quotients[i].get_str();
  }
  out << ']';
  return out.str();
}

ContinuedFractionStream::ContinuedFractionStream(const RealScalar& x) : p_prev_(1), q_prev_(0) {
  cf_.integer_part = floor_exact(x);
  remainder_ = x - RealScalar(cf_.integer_part, x.precision());
}

bool ContinuedFractionStream::advance() {
  if (finished_) return false;
  if (remainder_.is_exact() && *remainder_.exact_value() == 0) {
    finished_ = true;
    return false;
  }
  if (remainder_.contains_zero()) throw PrecisionError("continued fraction quotient undecidable after " + cf_.to_string());

  const RealScalar inverse = RealScalar(1L, remainder_.precision()) / remainder_;
  const BigInt a = floor_exact(inverse);
  remainder_ = inverse - RealScalar(a, remainder_.precision());

  const BigInt p_cur = cf_.convergents.empty() ? cf_.integer_part : cf_.convergents.back().p;
  const BigInt q_cur = cf_.convergents.empty() ? BigInt(1) : cf_.convergents.back().q;
  Convergent next{a * p_cur + p_prev_, a * q_cur + q_prev_};
  p_prev_ = p_cur;
  q_prev_ = q_cur;
  cf_.quotients.push_back(a);
  cf_.convergents.push_back(std::move(next));
  return true;
}

ContinuedFraction cf_expand(const RealScalar& x, std::size_t k) {
  if (k == 0) throw Error("cf_expand: k must be positive");
  ContinuedFractionStream stream(x);
  while (stream.expansion().size() < k) {
    if (!stream.advance())
      throw RationalInputError("expansion of a rational terminated after " + stream.expansion().to_string(),
                               stream.expansion().to_string());
  }
  return stream.expansion();
}

RealScalar dist_to_int(const RealScalar& x) {
  const long prec = x.precision();
  if (x.is_exact()) {
    const BigRational& q = *x.exact_value();
    BigInt nearest;
    // floor(q + 1/2)
    const BigRational shifted = q + BigRational(1, 2);
    mpz_fdiv_q(nearest.get_mpz_t(), shifted.get_num().get_mpz_t(), shifted.get_den().get_mpz_t());
    return RealScalar(BigRational(::abs(q - nearest)), prec);
  }

  // The endpoints are dyadic rationals; work on them exactly.
  const BigRational lo = x.lower().to_rational();
  const BigRational hi = x.upper().to_rational();
  if (hi - lo >= 1) return RealScalar::from_rational_bounds(0, BigRational(1, 2), prec);

  auto floor_of = [](const BigRational& q) {
    BigInt out;
    mpz_fdiv_q(out.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
    return out;
  };
  auto distance = [&](const BigRational& q) {
    const BigInt nearest = floor_of(q + BigRational(1, 2));
    return BigRational(::abs(q - nearest));
  };

  BigRational lower = 0;
  const BigInt k = floor_of(lo);
  if (floor_of(hi) == k && lo != k) lower = std::min(BigRational(lo - k), BigRational(k + 1 - hi));

  BigRational upper(1, 2);
  const BigRational half(1, 2);
  const bool holds_half = floor_of(lo - half) != floor_of(hi - half) || floor_of(lo - half) == lo - half;
  if (!holds_half) upper = std::max(distance(lo), distance(hi));
  return RealScalar::from_rational_bounds(lower, upper, prec);
}

RealScalar dist_to_lattice(const RealVector& v) {
  if (v.empty()) return RealScalar();
  RealScalar out = dist_to_int(v.front());
  for (std::size_t i = 1; i < v.size(); ++i) out = max(out, dist_to_int(v[i]));
  return out;
}

namespace {

std::uint64_t checked_horizon(const BigInt& q_max, std::uint64_t budget) {
  if (q_max < 1) throw Error("Q_max must be at least 1");
  if (q_max > BigInt(std::to_string(budget))) throw BudgetExceeded("Q_max = " + q_max.get_str() + " exceeds search budget");
  return std::stoull(q_max.get_str());
}

}  // namespace

SimultaneousApproximation best_sim_approx(const RealVector& alpha, const BigInt& q_max, std::uint64_t budget) {
  if (alpha.empty()) throw Error("best_sim_approx: empty vector");
  const std::uint64_t horizon = checked_horizon(q_max, budget);
  const auto d = static_cast<unsigned long>(alpha.size());
  const long prec = alpha.front().precision();

  SimultaneousApproximation out;
  RealVector multiple = alpha;
  for (std::uint64_t Q = 1; Q <= horizon; ++Q) {
    if (Q > 1)
      for (std::size_t i = 0; i < d; ++i) multiple[i] += alpha[i];
    RealScalar dist = dist_to_lattice(multiple);
    if (!out.records.empty()) {
      const RealScalar& best = out.records.back().distance;
      if (certainly_le(best, dist)) continue;
      if (!certainly_less(dist, best)) throw PrecisionError("record comparison undecidable at Q = " + std::to_string(Q));
    }
    const BigInt big_q(std::to_string(Q));
    RealScalar scaled = root(RealScalar(big_q, prec), d) * dist;
    const bool exact_zero = dist.is_exact() && *dist.exact_value() == 0;
    out.records.push_back({big_q, std::move(dist), std::move(scaled)});
    if (exact_zero) break;
  }

  // A minimiser of Q^{1/d}||Q alpha|| is always a record; ties keep the smaller Q.
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.records.size(); ++i)
    if (certainly_less(out.records[i].scaled, out.records[best].scaled)) best = i;
  out.best_scaled = out.records[best];
  return out;
}

RealScalar type_estimate(const RealVector& alpha, const BigInt& q_max, std::uint64_t budget) {
  return best_sim_approx(alpha, q_max, budget).best_scaled.scaled;
}

}  // namespace shrinklab
