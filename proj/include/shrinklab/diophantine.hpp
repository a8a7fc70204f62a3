#pragma once

// Continued fractions, distances to the integer lattice, simultaneous
// approximation search and vectors with certified approximation speed.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "shrinklab/real.hpp"

namespace shrinklab {

struct Convergent {
  BigInt p;
  BigInt q;
};

struct ContinuedFraction {
  BigInt integer_part;
  std::vector<BigInt> quotients;      // a_1, a_2, ...
  std::vector<Convergent> convergents;  // p_k / q_k for k = 1, 2, ...

  std::size_t size() const { return quotients.size(); }
  /// "[a0;a1,a2,...]"
  std::string to_string() const;
};

/// Gauss-map expansion that can be advanced one quotient at a time.
class ContinuedFractionStream {
 public:
  explicit ContinuedFractionStream(const RealScalar& x);

  /// Computes the next quotient. Returns false once the value is known to be
  /// rational and fully expanded; throws PrecisionError if the next quotient
  /// is undecidable.
  bool advance();
  const ContinuedFraction& expansion() const { return cf_; }
  bool finished() const { return finished_; }

 private:
  RealScalar remainder_;
  ContinuedFraction cf_;
  BigInt p_prev_, q_prev_;
  bool finished_ = false;
};

/// First k partial quotients of x. Throws RationalInputError if x is an exact
/// rational with fewer than k quotients.
ContinuedFraction cf_expand(const RealScalar& x, std::size_t k);

RealScalar dist_to_int(const RealScalar& x);
RealScalar dist_to_lattice(const RealVector& v);

struct ApproxRecord {
  BigInt Q;
  RealScalar distance;  // ||Q alpha||_Z
  RealScalar scaled;    // Q^{1/d} ||Q alpha||_Z
};

struct SimultaneousApproximation {
  std::vector<ApproxRecord> records;  // strictly decreasing distance, increasing Q
  ApproxRecord best_scaled;           // minimiser of Q^{1/d} ||Q alpha||_Z over Q <= Q_max
};

inline constexpr std::uint64_t default_search_budget = 200'000'000;

/// Exhaustive scan of Q = 1..q_max.
SimultaneousApproximation best_sim_approx(const RealVector& alpha, const BigInt& q_max,
                                          std::uint64_t budget = default_search_budget);

/// min_{Q <= q_max} Q^{1/d} ||Q alpha||_Z.
RealScalar type_estimate(const RealVector& alpha, const BigInt& q_max,
                         std::uint64_t budget = default_search_budget);

// ------------------------------------------------------------ certificates

enum class DecayTag { eq3, eq7, custom };

/// Target bound psi(n, Q_n) for ||Q_n alpha||_Z.
struct DecayLaw {
  DecayTag tag = DecayTag::eq3;
  std::function<RealScalar(long n, const BigInt& Q, long precision)> custom;

  static DecayLaw eq3() { return {DecayTag::eq3, {}}; }
  static DecayLaw eq7() { return {DecayTag::eq7, {}}; }
  static DecayLaw from_function(std::function<RealScalar(long, const BigInt&, long)> psi) {
    return {DecayTag::custom, std::move(psi)};
  }
  std::string name() const;
  /// Value of the law at (n, Q) for a dimension d.
  RealScalar value(int d, long n, const BigInt& Q, long precision) const;
};

std::optional<DecayTag> parse_decay_tag(const std::string& name);

struct CertificateEntry {
  long n = 0;
  BigInt Q;
  BigRational bound;  // proven upper bound on ||Q alpha||_Z
};

struct ApproxCertificate {
  int d = 1;
  std::string tag;
  std::vector<CertificateEntry> entries;
  // Exact enclosure of each coordinate of alpha.
  std::vector<BigRational> alpha_lower;
  std::vector<BigRational> alpha_upper;

  std::size_t size() const { return entries.size(); }
  const CertificateEntry& at(long n) const;
  RealVector alpha(long precision = default_precision_bits) const;
};

struct CertifiedVector {
  RealVector alpha;
  ApproxCertificate certificate;
  /// Rational vector inside the enclosure that itself satisfies every bound.
  std::vector<BigRational> snapshot;
};

/// Nested rational construction alpha = sum_k delta^{(k)}, Q_{k+1} = m_{k+1} Q_k.
CertifiedVector build_liouville_vector(int d, const DecayLaw& law, long n_max,
                                       long precision = default_precision_bits);

/// One-dimensional construction through continued fraction quotients chosen
/// so that Q_n = q_n; keeps denominators as small as the law allows.
CertifiedVector build_liouville_cf(const DecayLaw& law, long n_max, long precision = default_precision_bits);

/// Certificate for a given x from its convergent denominators: Q_n is the first
/// q_k >= 2 Q_{n-1} with ||q_k x|| <= psi(n).
ApproxCertificate convergent_certificate(const RealScalar& x, const DecayLaw& law, long n_max,
                                         std::size_t max_terms = 4096);

/// Empty when every bound, the growth condition and the decay law re-verify.
std::vector<std::string> verify_certificate(const RealVector& alpha, const ApproxCertificate& cert);
/// Throws CertificateInvalid with the first failure.
void require_valid(const RealVector& alpha, const ApproxCertificate& cert);

std::string certificate_to_json(const ApproxCertificate& cert, int alpha_digits = 40);
ApproxCertificate certificate_from_json(const std::string& text);

}  // namespace shrinklab
