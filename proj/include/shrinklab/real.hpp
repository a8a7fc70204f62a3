#pragma once

// Arbitrary-precision scalars: big integers/rationals (GMP) and
// outward-rounded intervals over MPFR.

#include <gmpxx.h>
#include <mpfr.h>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shrinklab/errors.hpp"

namespace shrinklab {

using BigInt = mpz_class;
using BigRational = mpq_class;

inline constexpr long default_precision_bits = 512;

/// RAII owner of an mpfr_t. Arithmetic operators round to nearest at the
/// precision of the left operand; directed rounding goes through the raw
/// handle.
class BigFloat {
 public:
  explicit BigFloat(long precision = default_precision_bits);
  BigFloat(double value, long precision);
  BigFloat(const BigInt& value, long precision);
  BigFloat(const BigRational& value, long precision, mpfr_rnd_t rnd = MPFR_RNDN);
  BigFloat(const BigFloat& other);
  BigFloat(BigFloat&& other) noexcept;
  BigFloat& operator=(const BigFloat& other);
  BigFloat& operator=(BigFloat&& other) noexcept;
  ~BigFloat();

  mpfr_ptr get() { return value_; }
  mpfr_srcptr get() const { return value_; }
  long precision() const { return static_cast<long>(mpfr_get_prec(value_)); }

  double to_double(mpfr_rnd_t rnd = MPFR_RNDN) const { return mpfr_get_d(value_, rnd); }
  long double to_long_double(mpfr_rnd_t rnd = MPFR_RNDN) const { return mpfr_get_ld(value_, rnd); }
  BigRational to_rational() const;
  std::string to_string(int digits = 20) const;

  BigFloat& operator+=(const BigFloat& rhs);
  BigFloat& operator-=(const BigFloat& rhs);
  BigFloat& operator*=(const BigFloat& rhs);
  BigFloat& operator/=(const BigFloat& rhs);

  friend BigFloat operator+(BigFloat lhs, const BigFloat& rhs) { return lhs += rhs; }
  friend BigFloat operator-(BigFloat lhs, const BigFloat& rhs) { return lhs -= rhs; }
  friend BigFloat operator*(BigFloat lhs, const BigFloat& rhs) { return lhs *= rhs; }
  friend BigFloat operator/(BigFloat lhs, const BigFloat& rhs) { return lhs /= rhs; }
  BigFloat operator-() const;

  friend bool operator<(const BigFloat& a, const BigFloat& b) { return mpfr_less_p(a.value_, b.value_) != 0; }
  friend bool operator<=(const BigFloat& a, const BigFloat& b) { return mpfr_lessequal_p(a.value_, b.value_) != 0; }
  friend bool operator>(const BigFloat& a, const BigFloat& b) { return b < a; }
  friend bool operator>=(const BigFloat& a, const BigFloat& b) { return b <= a; }

 private:
  mpfr_t value_;
};

BigFloat abs(const BigFloat& x);
/// x - round(x), in (-1/2, 1/2].
BigFloat centered_fraction(const BigFloat& x);
/// x - floor(x), in [0, 1).
BigFloat fraction(const BigFloat& x);

/// A real number known to lie in [lower, upper], optionally carrying its
/// exact rational value. Exactness survives +, -, *, / between exact
/// operands; every other operation only tracks the enclosure.
class RealScalar {
 public:
  RealScalar();
  explicit RealScalar(const BigRational& exact, long precision = default_precision_bits);
  explicit RealScalar(const BigInt& exact, long precision = default_precision_bits);
  explicit RealScalar(long exact, long precision = default_precision_bits);
  // Unevaluated GMP expressions.
  template <typename U>
  explicit RealScalar(const __gmp_expr<mpz_t, U>& e, long precision = default_precision_bits)
      : RealScalar(BigInt(e), precision) {}
  template <typename U>
  explicit RealScalar(const __gmp_expr<mpq_t, U>& e, long precision = default_precision_bits)
      : RealScalar(BigRational(e), precision) {}

  static RealScalar from_bounds(BigFloat lower, BigFloat upper);
  static RealScalar from_rational_bounds(const BigRational& lower, const BigRational& upper,
                                         long precision = default_precision_bits);
  /// Exact value of a decimal literal such as "-0.125" or "3e-4", or "p/q".
  static RealScalar parse(std::string_view text, long precision = default_precision_bits);

  long precision() const { return lower_.precision(); }
  bool is_exact() const { return exact_.has_value(); }
  const std::optional<BigRational>& exact_value() const { return exact_; }

  const BigFloat& lower() const { return lower_; }
  const BigFloat& upper() const { return upper_; }
  BigFloat midpoint() const;
  /// Upper bound on half the enclosure width.
  BigFloat radius() const;

  double to_double() const;
  double lower_double() const { return lower_.to_double(MPFR_RNDD); }
  double upper_double() const { return upper_.to_double(MPFR_RNDU); }
  long double to_long_double() const;

  bool contains_zero() const;
  /// Same enclosure at a different working precision (outward rounding).
  RealScalar with_precision(long precision) const;

  RealScalar operator-() const;
  RealScalar& operator+=(const RealScalar& rhs);
  RealScalar& operator-=(const RealScalar& rhs);
  RealScalar& operator*=(const RealScalar& rhs);
  RealScalar& operator/=(const RealScalar& rhs);

  friend RealScalar operator+(RealScalar a, const RealScalar& b) { return a += b; }
  friend RealScalar operator-(RealScalar a, const RealScalar& b) { return a -= b; }
  friend RealScalar operator*(RealScalar a, const RealScalar& b) { return a *= b; }
  friend RealScalar operator/(RealScalar a, const RealScalar& b) { return a /= b; }
  friend RealScalar operator*(const BigInt& k, const RealScalar& x) { return RealScalar(k, x.precision()) * x; }

 private:
  RealScalar(BigFloat lower, BigFloat upper, std::optional<BigRational> exact);
  void reset_from_exact(long precision);

  BigFloat lower_;
  BigFloat upper_;
  std::optional<BigRational> exact_;
};

using RealVector = std::vector<RealScalar>;

RealScalar abs(const RealScalar& x);
RealScalar min(const RealScalar& a, const RealScalar& b);
RealScalar max(const RealScalar& a, const RealScalar& b);
RealScalar sqrt(const RealScalar& x);
RealScalar exp(const RealScalar& x);
/// x^(1/n) for x >= 0.
RealScalar root(const RealScalar& x, unsigned long n);
RealScalar pow(const RealScalar& x, unsigned long n);

/// floor(x); throws PrecisionError when the enclosure straddles an integer.
BigInt floor_exact(const RealScalar& x);

/// Returns -1, 0 or +1. 0 only when both operands are exact and equal;
/// overlapping enclosures throw PrecisionError.
int compare(const RealScalar& a, const RealScalar& b);
/// True when every point of a is <= every point of b.
bool certainly_le(const RealScalar& a, const RealScalar& b);
bool certainly_less(const RealScalar& a, const RealScalar& b);

// Exact decimal helpers for serialization.
BigRational parse_rational(std::string_view text);
/// Decimal expansion if the rational terminates, otherwise "p/q".
std::string format_rational(const BigRational& value);
/// Largest terminating decimal <= value with the given significant digits.
BigRational floor_to_decimal(const BigRational& value, int significant_digits);
BigRational ceil_to_decimal(const BigRational& value, int significant_digits);
bool is_perfect_power(const BigInt& value, unsigned long n, BigInt* root_out = nullptr);

}  // namespace shrinklab
