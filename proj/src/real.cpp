#include "shrinklab/real.hpp"

#include <algorithm>
#include <cctype>
#include <utility>

namespace shrinklab {

// ---------------------------------------------------------------- BigFloat

BigFloat::BigFloat(long precision) {
  mpfr_init2(value_, precision);
  mpfr_set_zero(value_, 1);
}

BigFloat::BigFloat(double value, long precision) {
  mpfr_init2(value_, precision);
  mpfr_set_d(value_, value, MPFR_RNDN);
}

BigFloat::BigFloat(const BigInt& value, long precision) {
  mpfr_init2(value_, precision);
  mpfr_set_z(value_, value.get_mpz_t(), MPFR_RNDN);
}

BigFloat::BigFloat(const BigRational& value, long precision, mpfr_rnd_t rnd) {
  mpfr_init2(value_, precision);
  mpfr_set_q(value_, value.get_mpq_t(), rnd);
}

BigFloat::BigFloat(const BigFloat& other) {
  mpfr_init2(value_, mpfr_get_prec(other.value_));
  mpfr_set(value_, other.value_, MPFR_RNDN);
}

BigFloat::BigFloat(BigFloat&& other) noexcept {
  mpfr_init2(value_, MPFR_PREC_MIN);
  mpfr_swap(value_, other.value_);
}

BigFloat& BigFloat::operator=(const BigFloat& other) {
  if (this != &other) {
    mpfr_set_prec(value_, mpfr_get_prec(other.value_));
    mpfr_set(value_, other.value_, MPFR_RNDN);
  }
  return *this;
}

BigFloat& BigFloat::operator=(BigFloat&& other) noexcept {
  mpfr_swap(value_, other.value_);
  return *this;
}

BigFloat::~BigFloat() { mpfr_clear(value_); }

BigRational BigFloat::to_rational() const {
  BigRational q;
  mpfr_get_q(q.get_mpq_t(), value_);
  q.canonicalize();
  return q;
}

std::string BigFloat::to_string(int digits) const {
  char* buffer = nullptr;
  mpfr_asprintf(&buffer, "%.*Rg", digits, value_);
  std::string out(buffer);
  mpfr_free_str(buffer);
  return out;
}

BigFloat& BigFloat::operator+=(const BigFloat& rhs) {
  mpfr_add(value_, value_, rhs.value_, MPFR_RNDN);
  return *this;
}
BigFloat& BigFloat::operator-=(const BigFloat& rhs) {
  mpfr_sub(value_, value_, rhs.value_, MPFR_RNDN);
  return *this;
}
BigFloat& BigFloat::operator*=(const BigFloat& rhs) {
  mpfr_mul(value_, value_, rhs.value_, MPFR_RNDN);
  return *this;
}
BigFloat& BigFloat::operator/=(const BigFloat& rhs) {
  mpfr_div(value_, value_, rhs.value_, MPFR_RNDN);
  return *this;
}

BigFloat BigFloat::operator-() const {
  BigFloat out(precision());
  mpfr_neg(out.value_, value_, MPFR_RNDN);
  return out;
}

BigFloat abs(const BigFloat& x) {
  BigFloat out(x.precision());
  mpfr_abs(out.get(), x.get(), MPFR_RNDN);
  return out;
}

BigFloat centered_fraction(const BigFloat& x) {
  BigFloat nearest(x.precision());
  mpfr_rint(nearest.get(), x.get(), MPFR_RNDN);
  BigFloat out(x.precision());
  mpfr_sub(out.get(), x.get(), nearest.get(), MPFR_RNDN);
  if (mpfr_cmp_d(out.get(), -0.5) <= 0) mpfr_add_ui(out.get(), out.get(), 1, MPFR_RNDN);
  return out;
}

BigFloat fraction(const BigFloat& x) {
  BigFloat down(x.precision());
  mpfr_floor(down.get(), x.get());
  BigFloat out(x.precision());
  mpfr_sub(out.get(), x.get(), down.get(), MPFR_RNDN);
  return out;
}

// -------------------------------------------------------------- RealScalar

namespace {

BigFloat rounded(const BigRational& q, long precision, mpfr_rnd_t rnd) { return BigFloat(q, precision, rnd); }

long joint_precision(const RealScalar& a, const RealScalar& b) { return std::max(a.precision(), b.precision()); }

template <typename Op>
std::pair<BigFloat, BigFloat> corner_extremes(const RealScalar& a, const RealScalar& b, long precision, Op op) {
  const BigFloat* as[2] = {&a.lower(), &a.upper()};
  const BigFloat* bs[2] = {&b.lower(), &b.upper()};
  BigFloat lo(precision), hi(precision), tmp(precision);
  bool first = true;
  for (const BigFloat* x : as) {
    for (const BigFloat* y : bs) {
      op(tmp.get(), x->get(), y->get(), MPFR_RNDD);
      if (first || tmp < lo) lo = tmp;
      op(tmp.get(), x->get(), y->get(), MPFR_RNDU);
      if (first || tmp > hi) hi = tmp;
      first = false;
    }
  }
  return {std::move(lo), std::move(hi)};
}

}  // namespace

RealScalar::RealScalar() : RealScalar(BigRational(0), default_precision_bits) {}

RealScalar::RealScalar(const BigRational& exact, long precision)
    : lower_(precision), upper_(precision), exact_(exact) {
  exact_->canonicalize();
  reset_from_exact(precision);
}

RealScalar::RealScalar(const BigInt& exact, long precision) : RealScalar(BigRational(exact), precision) {}

RealScalar::RealScalar(long exact, long precision) : RealScalar(BigRational(exact), precision) {}

RealScalar::RealScalar(BigFloat lower, BigFloat upper, std::optional<BigRational> exact)
    : lower_(std::move(lower)), upper_(std::move(upper)), exact_(std::move(exact)) {}

void RealScalar::reset_from_exact(long precision) {
  lower_ = rounded(*exact_, precision, MPFR_RNDD);
  upper_ = rounded(*exact_, precision, MPFR_RNDU);
}

RealScalar RealScalar::from_bounds(BigFloat lower, BigFloat upper) {
  if (upper < lower) std::swap(lower, upper);
  std::optional<BigRational> exact;
  if (mpfr_equal_p(lower.get(), upper.get()) && mpfr_number_p(lower.get())) exact = lower.to_rational();
  return RealScalar(std::move(lower), std::move(upper), std::move(exact));
}

RealScalar RealScalar::from_rational_bounds(const BigRational& lower, const BigRational& upper, long precision) {
  if (lower == upper) return RealScalar(lower, precision);
  const BigRational& lo = lower < upper ? lower : upper;
  const BigRational& hi = lower < upper ? upper : lower;
  return RealScalar(rounded(lo, precision, MPFR_RNDD), rounded(hi, precision, MPFR_RNDU), std::nullopt);
}

RealScalar RealScalar::parse(std::string_view text, long precision) { return RealScalar(parse_rational(text), precision); }

BigFloat RealScalar::midpoint() const {
  BigFloat out(precision() + 1);
  mpfr_add(out.get(), lower_.get(), upper_.get(), MPFR_RNDN);
  mpfr_div_2ui(out.get(), out.get(), 1, MPFR_RNDN);
  return out;
}

BigFloat RealScalar::radius() const {
  BigFloat out(precision());
  mpfr_sub(out.get(), upper_.get(), lower_.get(), MPFR_RNDU);
  mpfr_div_2ui(out.get(), out.get(), 1, MPFR_RNDU);
  return out;
}

double RealScalar::to_double() const { return midpoint().to_double(); }

long double RealScalar::to_long_double() const { return midpoint().to_long_double(); }

bool RealScalar::contains_zero() const {
  return mpfr_sgn(lower_.get()) <= 0 && mpfr_sgn(upper_.get()) >= 0;
}

RealScalar RealScalar::with_precision(long precision) const {
  if (exact_) return RealScalar(*exact_, precision);
  BigFloat lo(precision), hi(precision);
  mpfr_set(lo.get(), lower_.get(), MPFR_RNDD);
  mpfr_set(hi.get(), upper_.get(), MPFR_RNDU);
  return RealScalar(std::move(lo), std::move(hi), std::nullopt);
}

RealScalar RealScalar::operator-() const {
  if (exact_) return RealScalar(BigRational(-*exact_), precision());
  BigFloat lo(precision()), hi(precision());
  mpfr_neg(lo.get(), upper_.get(), MPFR_RNDD);
  mpfr_neg(hi.get(), lower_.get(), MPFR_RNDU);
  return RealScalar(std::move(lo), std::move(hi), std::nullopt);
}

RealScalar& RealScalar::operator+=(const RealScalar& rhs) {
  const long p = joint_precision(*this, rhs);
  if (exact_ && rhs.exact_) return *this = RealScalar(BigRational(*exact_ + *rhs.exact_), p);
  BigFloat lo(p), hi(p);
  mpfr_add(lo.get(), lower_.get(), rhs.lower_.get(), MPFR_RNDD);
  mpfr_add(hi.get(), upper_.get(), rhs.upper_.get(), MPFR_RNDU);
  return *this = RealScalar(std::move(lo), std::move(hi), std::nullopt);
}

RealScalar& RealScalar::operator-=(const RealScalar& rhs) {
  const long p = joint_precision(*this, rhs);
  if (exact_ && rhs.exact_) return *this = RealScalar(BigRational(*exact_ - *rhs.exact_), p);
  BigFloat lo(p), hi(p);
  mpfr_sub(lo.get(), lower_.get(), rhs.upper_.get(), MPFR_RNDD);
  mpfr_sub(hi.get(), upper_.get(), rhs.lower_.get(), MPFR_RNDU);
  return *this = RealScalar(std::move(lo), std::move(hi), std::nullopt);
}

RealScalar& RealScalar::operator*=(const RealScalar& rhs) {
  const long p = joint_precision(*this, rhs);
  if (exact_ && rhs.exact_) return *this = RealScalar(BigRational(*exact_ * *rhs.exact_), p);
  auto [lo, hi] = corner_extremes(*this, rhs, p, mpfr_mul);
  return *this = RealScalar(std::move(lo), std::move(hi), std::nullopt);
}

RealScalar& RealScalar::operator/=(const RealScalar& rhs) {
  const long p = joint_precision(*this, rhs);
  if (rhs.contains_zero()) {
    if (rhs.exact_) throw Error("division by exact zero");
    throw PrecisionError("divisor enclosure contains zero");
  }
  if (exact_ && rhs.exact_) return *this = RealScalar(BigRational(*exact_ / *rhs.exact_), p);
  auto [lo, hi] = corner_extremes(*this, rhs, p, mpfr_div);
  return *this = RealScalar(std::move(lo), std::move(hi), std::nullopt);
}

RealScalar abs(const RealScalar& x) {
  if (x.is_exact()) return RealScalar(BigRational(::abs(*x.exact_value())), x.precision());
  if (mpfr_sgn(x.lower().get()) >= 0) return x;
  if (mpfr_sgn(x.upper().get()) <= 0) return -x;
  BigFloat hi(x.precision());
  mpfr_neg(hi.get(), x.lower().get(), MPFR_RNDU);
  if (hi < x.upper()) hi = x.upper();
  return RealScalar::from_bounds(BigFloat(x.precision()), std::move(hi));
}

RealScalar min(const RealScalar& a, const RealScalar& b) {
  if (a.is_exact() && b.is_exact())
    return RealScalar(std::min(*a.exact_value(), *b.exact_value()), joint_precision(a, b));
  BigFloat lo = a.lower() < b.lower() ? a.lower() : b.lower();
  BigFloat hi = a.upper() < b.upper() ? a.upper() : b.upper();
  return RealScalar::from_bounds(std::move(lo), std::move(hi));
}

RealScalar max(const RealScalar& a, const RealScalar& b) {
  if (a.is_exact() && b.is_exact())
    return RealScalar(std::max(*a.exact_value(), *b.exact_value()), joint_precision(a, b));
  BigFloat lo = a.lower() > b.lower() ? a.lower() : b.lower();
  BigFloat hi = a.upper() > b.upper() ? a.upper() : b.upper();
  return RealScalar::from_bounds(std::move(lo), std::move(hi));
}

RealScalar sqrt(const RealScalar& x) { return root(x, 2); }

RealScalar exp(const RealScalar& x) {
  const long p = x.precision();
  BigFloat lo(p), hi(p);
  mpfr_exp(lo.get(), x.lower().get(), MPFR_RNDD);
  mpfr_exp(hi.get(), x.upper().get(), MPFR_RNDU);
  return RealScalar::from_bounds(std::move(lo), std::move(hi));
}

RealScalar root(const RealScalar& x, unsigned long n) {
  if (n == 1) return x;
  if (x.is_exact()) {
    const BigRational& q = *x.exact_value();
    BigInt num_root, den_root;
    if (q >= 0 && is_perfect_power(q.get_num(), n, &num_root) && is_perfect_power(q.get_den(), n, &den_root))
      return RealScalar(BigRational(num_root, den_root), x.precision());
  }
  if (mpfr_sgn(x.upper().get()) < 0) throw Error("root of a negative number");
  const long p = x.precision();
  BigFloat lo(p), hi(p);
  if (mpfr_sgn(x.lower().get()) > 0) mpfr_rootn_ui(lo.get(), x.lower().get(), n, MPFR_RNDD);
  mpfr_rootn_ui(hi.get(), x.upper().get(), n, MPFR_RNDU);
  return RealScalar::from_bounds(std::move(lo), std::move(hi));
}

RealScalar pow(const RealScalar& x, unsigned long n) {
  if (x.is_exact()) {
    BigRational q = *x.exact_value();
    BigInt num, den;
    mpz_pow_ui(num.get_mpz_t(), q.get_num().get_mpz_t(), n);
    mpz_pow_ui(den.get_mpz_t(), q.get_den().get_mpz_t(), n);
    return RealScalar(BigRational(num, den), x.precision());
  }
  RealScalar out(1L, x.precision());
  for (unsigned long i = 0; i < n; ++i) out *= x;
  return out;
}

BigInt floor_exact(const RealScalar& x) {
  BigInt out;
  if (x.is_exact()) {
    const BigRational& q = *x.exact_value();
    mpz_fdiv_q(out.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
    return out;
  }
  BigInt hi;
  mpfr_get_z(out.get_mpz_t(), x.lower().get(), MPFR_RNDD);
  mpfr_get_z(hi.get_mpz_t(), x.upper().get(), MPFR_RNDD);
  if (out != hi) throw PrecisionError("floor undecidable at working precision");
  return out;
}

int compare(const RealScalar& a, const RealScalar& b) {
  if (a.is_exact() && b.is_exact()) return cmp(*a.exact_value(), *b.exact_value()) < 0 ? -1 : (*a.exact_value() == *b.exact_value() ? 0 : 1);
  if (a.upper() < b.lower()) return -1;
  if (b.upper() < a.lower()) return 1;
  throw PrecisionError("comparison undecidable at working precision");
}

bool certainly_le(const RealScalar& a, const RealScalar& b) {
  if (a.is_exact() && b.is_exact()) return *a.exact_value() <= *b.exact_value();
  return a.upper() <= b.lower();
}

bool certainly_less(const RealScalar& a, const RealScalar& b) {
  if (a.is_exact() && b.is_exact()) return *a.exact_value() < *b.exact_value();
  return a.upper() < b.lower();
}

// ---------------------------------------------------------------- decimals

namespace {

BigInt pow10(unsigned long k) {
  BigInt out;
  mpz_ui_pow_ui(out.get_mpz_t(), 10, k);
  return out;
}

}  // namespace

BigRational parse_rational(std::string_view text) {
  auto trimmed = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  text = trimmed(text);
  if (text.empty()) throw Error("empty numeric literal");

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    BigRational num = parse_rational(text.substr(0, slash));
    BigRational den = parse_rational(text.substr(slash + 1));
    if (den == 0) throw Error("zero denominator in '" + std::string(text) + "'");
    BigRational q = num / den;
    q.canonicalize();
    return q;
  }

  bool negative = false;
  std::size_t i = 0;
  if (text[i] == '+' || text[i] == '-') negative = text[i++] == '-';
  std::string digits;
  long scale = 0;
  bool seen_point = false;
  bool seen_digit = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      seen_digit = true;
      if (seen_point) ++scale;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) throw Error("malformed numeric literal '" + std::string(text) + "'");
  long exponent = 0;
  if (i < text.size()) {
    if (text[i] != 'e' && text[i] != 'E') throw Error("malformed numeric literal '" + std::string(text) + "'");
    const std::string rest(text.substr(i + 1));
    std::size_t used = 0;
    try {
      exponent = std::stol(rest, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != rest.size()) throw Error("malformed exponent in '" + std::string(text) + "'");
  }
  BigInt mantissa(digits, 10);
  if (negative) mantissa = -mantissa;
  const long shift = exponent - scale;
  BigRational q = shift >= 0 ? BigRational(mantissa * pow10(static_cast<unsigned long>(shift)))
                             : BigRational(mantissa, pow10(static_cast<unsigned long>(-shift)));
  q.canonicalize();
  return q;
}

std::string format_rational(const BigRational& value) {
  BigInt den = value.get_den();
  unsigned long twos = mpz_remove(den.get_mpz_t(), den.get_mpz_t(), BigInt(2).get_mpz_t());
  unsigned long fives = mpz_remove(den.get_mpz_t(), den.get_mpz_t(), BigInt(5).get_mpz_t());
  if (den != 1) return value.get_num().get_str() + "/" + value.get_den().get_str();

  const unsigned long k = std::max(twos, fives);
  BigInt scaled = value.get_num() * pow10(k) / value.get_den();
  const bool negative = scaled < 0;
  std::string digits = (negative ? BigInt(-scaled) : scaled).get_str();
  if (k > 0) {
    if (digits.size() <= k) digits.insert(0, k + 1 - digits.size(), '0');
    digits.insert(digits.size() - k, ".");
  }
  return negative ? "-" + digits : digits;
}

namespace {

// Returns 10^e (as rational) such that 10^(sig-1) <= |value| * 10^e < 10^sig.
BigRational decimal_scale(const BigRational& value, int significant_digits) {
  const BigRational magnitude = ::abs(value);
  long e = significant_digits - 1 -
           (static_cast<long>(mpz_sizeinbase(magnitude.get_num().get_mpz_t(), 10)) -
            static_cast<long>(mpz_sizeinbase(magnitude.get_den().get_mpz_t(), 10)));
  auto scale_of = [](long k) {
    return k >= 0 ? BigRational(pow10(static_cast<unsigned long>(k)))
                  : BigRational(BigInt(1), pow10(static_cast<unsigned long>(-k)));
  };
  const BigRational low = BigRational(pow10(static_cast<unsigned long>(significant_digits - 1)));
  const BigRational high = BigRational(pow10(static_cast<unsigned long>(significant_digits)));
  for (int guard = 0; guard < 8; ++guard) {
    const BigRational scaled = magnitude * scale_of(e);
    if (scaled < low) {
      ++e;
    } else if (scaled >= high) {
      --e;
    } else {
      break;
    }
  }
  return scale_of(e);
}

}  // namespace

BigRational floor_to_decimal(const BigRational& value, int significant_digits) {
  if (value == 0) return value;
  const BigRational scale = decimal_scale(value, significant_digits);
  const BigRational scaled = value * scale;
  BigInt fl;
  mpz_fdiv_q(fl.get_mpz_t(), scaled.get_num().get_mpz_t(), scaled.get_den().get_mpz_t());
  BigRational out = BigRational(fl) / scale;
  out.canonicalize();
  return out;
}

BigRational ceil_to_decimal(const BigRational& value, int significant_digits) {
  return -floor_to_decimal(BigRational(-value), significant_digits);
}

bool is_perfect_power(const BigInt& value, unsigned long n, BigInt* root_out) {
  if (value < 0) return false;
  BigInt r;
  const bool exact = mpz_root(r.get_mpz_t(), value.get_mpz_t(), n) != 0;
  if (root_out) *root_out = r;
  return exact;
}

}  // namespace shrinklab
