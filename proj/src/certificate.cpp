#include <algorithm>
#include <json.hpp>

#include "shrinklab/diophantine.hpp"

namespace shrinklab {

namespace {

constexpr int bound_digits = 30;

BigInt ipow(const BigInt& base, unsigned long e) {
  BigInt out;
  mpz_pow_ui(out.get_mpz_t(), base.get_mpz_t(), e);
  return out;
}

BigRational qpow(const BigRational& base, unsigned long e) {
  return BigRational(ipow(base.get_num(), e), ipow(base.get_den(), e));
}

// A rational lower bound on a law value, rounded down to a short decimal.
BigRational decimal_below(const RealScalar& value) {
  const BigRational raw = value.is_exact() ? *value.exact_value() : value.lower().to_rational();
  if (raw <= 0) throw CertificateInvalid("decay law must be positive");
  return floor_to_decimal(raw, bound_digits);
}

// Exact check of b <= law(n, Q) for the two closed-form laws.
bool satisfies_law(DecayTag tag, int d, long n, const BigInt& Q, const BigRational& b) {
  const auto ud = static_cast<unsigned long>(d);
  const BigInt big_n(std::to_string(n));
  switch (tag) {
    case DecayTag::eq3:
      return qpow(b, ud) * BigRational(ipow(big_n, (2 * ud + 3) * ud) * Q) <= 1;
    case DecayTag::eq7:
      return qpow(b, ud) * BigRational(ipow(big_n, (2 * ud + 5) * ud) * Q * Q) <= 1;
    case DecayTag::custom:
      return true;
  }
  return false;
}

BigRational midpoint(const BigRational& a, const BigRational& b) { return (a + b) / 2; }

}  // namespace

std::string DecayLaw::name() const {
  switch (tag) {
    case DecayTag::eq3:
      return "eq3";
    case DecayTag::eq7:
      return "eq7";
    case DecayTag::custom:
      return "custom";
  }
  return "custom";
}

RealScalar DecayLaw::value(int d, long n, const BigInt& Q, long precision) const {
  const auto ud = static_cast<unsigned long>(d);
  const RealScalar big_n(n, precision);
  const RealScalar q_root = root(RealScalar(Q, precision), ud);
  switch (tag) {
    case DecayTag::eq3:
      return RealScalar(1L, precision) / (pow(big_n, 2 * ud + 3) * q_root);
    case DecayTag::eq7:
      return RealScalar(1L, precision) / (pow(big_n, 2 * ud + 5) * q_root * q_root);
    case DecayTag::custom:
      if (!custom) throw Error("custom decay law without a function");
      return custom(n, Q, precision);
  }
  throw Error("unknown decay law");
}

std::optional<DecayTag> parse_decay_tag(const std::string& name) {
  if (name == "eq3") return DecayTag::eq3;
  if (name == "eq7") return DecayTag::eq7;
  if (name == "custom") return DecayTag::custom;
  return std::nullopt;
}

const CertificateEntry& ApproxCertificate::at(long n) const {
  for (const auto& e : entries)
    if (e.n == n) return e;
  throw CertificateInvalid("certificate has no entry for n = " + std::to_string(n));
}

RealVector ApproxCertificate::alpha(long precision) const {
  RealVector out;
  for (std::size_t i = 0; i < alpha_lower.size(); ++i)
    out.push_back(RealScalar::from_rational_bounds(alpha_lower[i], alpha_upper[i], precision));
  return out;
}

CertifiedVector build_liouville_vector(int d, const DecayLaw& law, long n_max, long precision) {
  if (d < 1) throw Error("dimension must be positive");
  if (n_max < 1) throw Error("n_max must be positive");
  const auto ud = static_cast<unsigned long>(d);
  const long snapshot_stage = n_max + 1;
  const long last_stage = n_max + 2;

  // Stage k adds delta_i = j_i^{(k)} / Q_k with j in [1, d]; the tail after
  // stage n is below 2d/Q_{n+1}, so m_{n+1} >= 2d/b_n gives ||Q_n alpha|| <= b_n.
  std::vector<BigInt> Q(last_stage + 1);
  std::vector<BigRational> bounds(last_stage + 1);
  std::vector<std::vector<BigRational>> stages(last_stage + 1);
  Q[1] = ipow(2, ud);
  stages[1].resize(ud);
  for (unsigned long i = 0; i < ud; ++i) stages[1][i] = BigRational(BigInt(i + 1), Q[1]);

  const BigInt step = ipow(2, ud);
  for (long k = 1; k < last_stage; ++k) {
    bounds[k] = decimal_below(law.value(d, k, Q[k], precision + 64));
    const BigRational needed = BigRational(2 * d) / bounds[k];
    BigInt m = step;
    while (BigRational(m) < needed) m *= step;
    Q[k + 1] = m * Q[k];
    stages[k + 1] = stages[k];
    for (unsigned long i = 0; i < ud; ++i) {
      const unsigned long j = (i + 1 + static_cast<unsigned long>(k + 1)) % ud + 1;
      stages[k + 1][i] += BigRational(BigInt(j), Q[k + 1]);
    }
  }

  const auto needed_bits = static_cast<long>(mpz_sizeinbase(Q[last_stage].get_mpz_t(), 2)) + 8;
  if (precision < needed_bits)
    throw PrecisionError("working precision " + std::to_string(precision) + " bits below the " +
                         std::to_string(needed_bits) + " bits needed for Q_" + std::to_string(last_stage));

  CertifiedVector out;
  out.certificate.d = d;
  out.certificate.tag = law.name();
  for (long n = 1; n <= n_max; ++n) out.certificate.entries.push_back({n, Q[n], bounds[n]});
  out.snapshot = stages[snapshot_stage];
  const BigRational tail(BigInt(2 * d), Q[last_stage]);
  for (const auto& coord : out.snapshot) {
    out.certificate.alpha_lower.push_back(coord);
    out.certificate.alpha_upper.push_back(coord + tail);
  }
  out.alpha = out.certificate.alpha(precision);
  require_valid(out.alpha, out.certificate);
  return out;
}

CertifiedVector build_liouville_cf(const DecayLaw& law, long n_max, long precision) {
  if (n_max < 1) throw Error("n_max must be positive");
  const long depth = n_max + 2;

  // ||q_n x|| < 1/q_{n+1} <= 1/(a_{n+1} q_n), so a_{n+1} >= 1/(b_n q_n) suffices.
  std::vector<BigInt> a(depth + 1), p(depth + 1), q(depth + 1);
  std::vector<BigRational> bounds(depth + 1);
  BigInt p_prev = 1, q_prev = 0, p_cur = 0, q_cur = 1;
  for (long k = 1; k <= depth; ++k) {
    if (k == 1) {
      a[k] = 2;
    } else {
      bounds[k - 1] = decimal_below(law.value(1, k - 1, q[k - 1], precision + 64));
      const BigRational inv = 1 / (bounds[k - 1] * BigRational(q[k - 1]));
      BigInt c;
      mpz_cdiv_q(c.get_mpz_t(), inv.get_num().get_mpz_t(), inv.get_den().get_mpz_t());
      a[k] = std::max(BigInt(2), c);
    }
    p[k] = a[k] * p_cur + p_prev;
    q[k] = a[k] * q_cur + q_prev;
    p_prev = p_cur;
    q_prev = q_cur;
    p_cur = p[k];
    q_cur = q[k];
  }

  const auto needed_bits = static_cast<long>(2 * mpz_sizeinbase(q[depth].get_mpz_t(), 2)) + 8;
  if (precision < needed_bits) throw PrecisionError("working precision too small for the convergent snapshot");

  CertifiedVector out;
  out.certificate.d = 1;
  out.certificate.tag = law.name();
  for (long n = 1; n <= n_max; ++n) out.certificate.entries.push_back({n, q[n], bounds[n]});
  const BigRational left(p[depth - 1], q[depth - 1]);
  const BigRational right(p[depth], q[depth]);
  out.certificate.alpha_lower.push_back(std::min(left, right));
  out.certificate.alpha_upper.push_back(std::max(left, right));
  out.snapshot.push_back(right);
  out.alpha = out.certificate.alpha(precision);
  require_valid(out.alpha, out.certificate);
  return out;
}

ApproxCertificate convergent_certificate(const RealScalar& x, const DecayLaw& law, long n_max, std::size_t max_terms) {
  ApproxCertificate cert;
  cert.d = 1;
  cert.tag = law.name();
  cert.alpha_lower.push_back(x.lower().to_rational());
  cert.alpha_upper.push_back(x.upper().to_rational());
  if (x.is_exact()) cert.alpha_lower.back() = cert.alpha_upper.back() = *x.exact_value();

  ContinuedFractionStream stream(x);
  std::size_t next = 0;
  BigInt previous = 0;
  for (long n = 1; n <= n_max; ++n) {
    bool found = false;
    while (!found) {
      if (next >= stream.expansion().size()) {
        if (stream.expansion().size() >= max_terms) throw BudgetExceeded("no convergent satisfies the law for n = " + std::to_string(n));
        if (!stream.advance()) throw RationalInputError("rational input: convergents exhausted", stream.expansion().to_string());
      }
      const BigInt& qk = stream.expansion().convergents[next++].q;
      if (qk < 2 * previous) continue;
      const RealScalar dist = dist_to_int(RealScalar(qk, x.precision()) * x);
      const BigRational bound = decimal_below(law.value(1, n, qk, x.precision()));
      if (certainly_le(dist, RealScalar(bound, x.precision()))) {
        cert.entries.push_back({n, qk, bound});
        previous = qk;
        found = true;
      }
    }
  }
  return cert;
}

std::vector<std::string> verify_certificate(const RealVector& alpha, const ApproxCertificate& cert) {
  std::vector<std::string> failures;
  if (static_cast<int>(alpha.size()) != cert.d) failures.push_back("dimension mismatch");
  const auto tag = parse_decay_tag(cert.tag);
  if (!tag) failures.push_back("unknown decay tag '" + cert.tag + "'");

  for (std::size_t i = 0; i < cert.entries.size(); ++i) {
    const auto& e = cert.entries[i];
    const std::string where = "n=" + std::to_string(e.n) + ": ";
    if (e.Q < 1) failures.push_back(where + "Q must be positive");
    if (i > 0) {
      const auto& prev = cert.entries[i - 1];
      if (e.n != prev.n + 1) failures.push_back(where + "indices not consecutive");
      if (e.Q < 2 * prev.Q) failures.push_back(where + "Q_n < 2 Q_{n-1}");
    }
    if (e.bound < 0) failures.push_back(where + "negative bound");
    if (tag && !satisfies_law(*tag, cert.d, e.n, e.Q, e.bound))
      failures.push_back(where + "bound exceeds the " + cert.tag + " law");
    if (alpha.empty() || e.Q < 1) continue;

    RealVector multiple;
    for (const auto& coord : alpha) multiple.push_back(RealScalar(e.Q, coord.precision()) * coord);
    const RealScalar dist = dist_to_lattice(multiple);
    if (!certainly_le(dist, RealScalar(e.bound, dist.precision())))
      failures.push_back(where + "||Q alpha||_Z <= " + format_rational(e.bound) + " not certified (enclosure upper " +
                         dist.upper().to_string(12) + ")");
  }
  return failures;
}

void require_valid(const RealVector& alpha, const ApproxCertificate& cert) {
  const auto failures = verify_certificate(alpha, cert);
  if (!failures.empty()) throw CertificateInvalid(failures.front());
}

std::string certificate_to_json(const ApproxCertificate& cert, int alpha_digits) {
  nlohmann::ordered_json doc;
  doc["d"] = cert.d;
  doc["tag"] = cert.tag;
  doc["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : cert.entries)
    doc["entries"].push_back({{"n", e.n}, {"Q", e.Q.get_str()}, {"bound", format_rational(e.bound)}});
  doc["alpha_digits"] = nlohmann::ordered_json::array();
  doc["alpha_bounds"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < cert.alpha_lower.size(); ++i) {
    const BigRational mid = midpoint(cert.alpha_lower[i], cert.alpha_upper[i]);
    const long bits = std::max<long>(64, static_cast<long>(alpha_digits * 3.33) + 16);
    doc["alpha_digits"].push_back(BigFloat(mid, bits).to_string(alpha_digits));
    doc["alpha_bounds"].push_back(
        {{"lower", format_rational(cert.alpha_lower[i])}, {"upper", format_rational(cert.alpha_upper[i])}});
  }
  return doc.dump(2);
}

ApproxCertificate certificate_from_json(const std::string& text) {
  ApproxCertificate cert;
  try {
    const auto doc = nlohmann::json::parse(text);
    cert.d = doc.at("d").get<int>();
    cert.tag = doc.at("tag").get<std::string>();
    for (const auto& e : doc.at("entries"))
      cert.entries.push_back({e.at("n").get<long>(), BigInt(e.at("Q").get<std::string>()),
                              parse_rational(e.at("bound").get<std::string>())});
    if (doc.contains("alpha_bounds")) {
      for (const auto& b : doc.at("alpha_bounds")) {
        cert.alpha_lower.push_back(parse_rational(b.at("lower").get<std::string>()));
        cert.alpha_upper.push_back(parse_rational(b.at("upper").get<std::string>()));
      }
    } else {
      for (const auto& digits : doc.at("alpha_digits")) {
        const BigRational v = parse_rational(digits.get<std::string>());
        cert.alpha_lower.push_back(v);
        cert.alpha_upper.push_back(v);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw CertificateInvalid(std::string("malformed certificate JSON: ") + e.what());
  }
  return cert;
}

}  // namespace shrinklab
