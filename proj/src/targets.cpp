#include "shrinklab/targets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "shrinklab/random.hpp"

namespace shrinklab {

namespace {

BigInt ipow(const BigInt& base, unsigned long e) {
  BigInt out;
  mpz_pow_ui(out.get_mpz_t(), base.get_mpz_t(), e);
  return out;
}

BigInt big(long v) { return BigInt(v); }

std::uint64_t saturate(const BigInt& v) {
  if (v <= 0) return 0;
  static const BigInt limit(std::to_string(std::numeric_limits<std::uint64_t>::max()));
  if (v >= limit) return std::numeric_limits<std::uint64_t>::max();
  return std::stoull(v.get_str());
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_string(Regime r) { return r == Regime::faithful ? "faithful" : "simulable"; }

bool RadiusSchedule::monotone() const {
  for (std::size_t i = 1; i < blocks.size(); ++i) {
    if (blocks[i].start != blocks[i - 1].end) return false;
    if (blocks[i].radius_pow_d > blocks[i - 1].radius_pow_d) return false;
  }
  return true;
}

void RadiusSchedule::validate() const {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    if (b.start < 0 || b.end <= b.start) throw Error("schedule block " + std::to_string(i) + " is empty or negative");
    if (b.radius_pow_d < 0 || b.radius < 0) throw Error("negative radius in schedule block " + std::to_string(i));
    if (i > 0 && b.start < blocks[i - 1].end) throw Error("schedule blocks overlap at " + std::to_string(i));
  }
}

double RadiusSchedule::radius_at(const BigInt& n) const {
  auto it = std::upper_bound(blocks.begin(), blocks.end(), n,
                             [](const BigInt& v, const ScheduleBlock& b) { return v < b.start; });
  if (it == blocks.begin()) return 0.0;
  --it;
  return n < it->end ? it->radius : 0.0;
}

BigRational RadiusSchedule::partial_sum(const BigInt& horizon) const {
  BigRational total = 0;
  for (const auto& b : blocks) {
    if (b.start >= horizon) break;
    const BigInt stop = std::min(b.end, horizon);
    total += BigRational(stop - b.start) * b.radius_pow_d;
  }
  return total;
}

std::string RadiusSchedule::to_json() const {
  nlohmann::ordered_json doc;
  doc["d"] = d;
  doc["monotone"] = monotone();
  doc["blocks"] = nlohmann::ordered_json::array();
  for (const auto& b : blocks)
    doc["blocks"].push_back({{"start", b.start.get_str()},
                             {"end", b.end.get_str()},
                             {"radius", b.radius},
                             {"radius_pow_d", format_rational(b.radius_pow_d)}});
  return doc.dump(2);
}

// ---------------------------------------------------------- empty lim sup

EmptyLimsupResult empty_limsup_schedule(const RealScalar& alpha1, int d, long p_max) {
  if (d < 1) throw Error("dimension must be positive");
  if (p_max < 0) throw Error("p_max must be non-negative");
  EmptyLimsupResult out;
  out.schedule.d = d;
  auto& cert = out.certificate;
  cert.d = d;
  cert.alpha1 = alpha1;
  if (p_max == 0) return out;

  const long prec = alpha1.precision();
  const auto ud = static_cast<unsigned long>(d);
  auto five_pow = [&](long p) { return ipow(5, ud * static_cast<unsigned long>(p)).get_si(); };

  for (long p = 1; p <= p_max; ++p) cert.half_width.push_back(BigRational(BigInt(1), ipow(4, static_cast<unsigned long>(p))));

  // Greedy k_p.
  cert.k.push_back(1);
  for (long p = 2; p <= p_max; ++p) {
    BigInt candidate = cert.k.back() + 1;
    for (long attempts = 0;; ++attempts, ++candidate) {
      if (attempts > 1'000'000) throw BudgetExceeded("no admissible k_" + std::to_string(p));
      bool ok = true;
      for (long r = 1; r < p && ok; ++r) {
        const RealScalar gap = dist_to_int(RealScalar(candidate - cert.k[r - 1], prec) * alpha1);
        ok = certainly_less(RealScalar(cert.half_width[p - 1] + cert.half_width[r - 1], prec), gap);
      }
      if (ok) break;
    }
    cert.k.push_back(candidate);
  }

  // q_l for l = 1 .. 5^{d(p_max+1)}.
  const long l_max = five_pow(p_max + 1);
  ContinuedFractionStream stream(alpha1);
  std::size_t next = 0;
  BigInt previous = 0;
  for (long l = 1; l <= l_max; ++l) {
    const RealScalar bound = exp(RealScalar(-l, prec));
    for (;;) {
      while (next >= stream.expansion().size())
        if (!stream.advance()) throw RationalInputError("alpha_1 is rational", stream.expansion().to_string());
      const BigInt qk = stream.expansion().convergents[next++].q;
      if (qk <= previous) continue;
      if (certainly_le(dist_to_int(RealScalar(qk, prec) * alpha1), bound)) {
        cert.q[l] = qk;
        previous = qk;
        break;
      }
    }
  }

  for (long p = 1; p <= p_max; ++p) {
    cert.V.push_back(cert.q.at(five_pow(p)) + cert.k[p - 1]);
    for (long l = five_pow(p); l <= five_pow(p + 1); ++l) {
      EmptyLimsupEntry e{p, l, cert.q.at(l) + cert.k[p - 1], BigRational(1, l)};
      out.schedule.blocks.push_back({e.n, e.n + 1, e.radius_pow_d, std::pow(static_cast<double>(l), -1.0 / d)});
      cert.entries.push_back(std::move(e));
    }
  }
  std::sort(out.schedule.blocks.begin(), out.schedule.blocks.end(),
            [](const ScheduleBlock& a, const ScheduleBlock& b) { return a.start < b.start; });
  out.schedule.validate();
  return out;
}

EmptyLimsupReport verify_empty_limsup(const EmptyLimsupCertificate& cert, long p_max) {
  EmptyLimsupReport report;
  report.p_max = p_max;
  if (static_cast<long>(cert.k.size()) < p_max || static_cast<long>(cert.half_width.size()) < p_max)
    throw CertificateInvalid("certificate covers fewer than p_max blocks");
  const long prec = cert.alpha1.precision();
  const auto ud = static_cast<unsigned long>(cert.d);
  auto decay = [&](long p) {
    return exp(-RealScalar(ipow(5, ud * static_cast<unsigned long>(p)), prec));
  };

  for (const auto& e : cert.entries) {
    if (e.p > p_max) continue;
    const BigInt& kp = cert.k[static_cast<std::size_t>(e.p - 1)];
    const RealScalar dist = dist_to_int(RealScalar(e.n - kp, prec) * cert.alpha1);
    if (!certainly_le(dist, decay(e.p)))
      throw VerificationFailure("a", "||(n - k_p) alpha_1|| <= e^{-5^{dp}} fails at n = " + e.n.get_str() +
                                         " (p = " + std::to_string(e.p) + ")");
    const BigRational limit(BigInt(1), ipow(5, ud * static_cast<unsigned long>(e.p)));
    if (e.radius_pow_d > limit)
      throw VerificationFailure("b", "r_n^d <= 5^{-dp} fails at n = " + e.n.get_str() + " (p = " + std::to_string(e.p) + ")");
    ++report.indices_checked;
  }
  report.lines.push_back("(a),(b) hold at " + std::to_string(report.indices_checked) + " active indices");

  for (long p = 1; p <= p_max; ++p) {
    const RealScalar lhs = decay(p) + RealScalar(BigRational(BigInt(1), ipow(5, static_cast<unsigned long>(p))), prec);
    if (!certainly_le(lhs, RealScalar(cert.half_width[p - 1], prec)))
      throw VerificationFailure("c", "e^{-5^{dp}} + 5^{-p} <= w_p fails for p = " + std::to_string(p));
  }
  report.lines.push_back("(c) holds for p = 1.." + std::to_string(p_max));

  for (long p = 1; p <= p_max; ++p)
    for (long r = p + 1; r <= p_max; ++r) {
      const RealScalar gap = dist_to_int(RealScalar(cert.k[r - 1] - cert.k[p - 1], prec) * cert.alpha1);
      if (!certainly_less(RealScalar(cert.half_width[p - 1] + cert.half_width[r - 1], prec), gap))
        throw VerificationFailure("d", "strips " + std::to_string(p) + " and " + std::to_string(r) + " intersect");
      ++report.strip_pairs_checked;
    }
  report.lines.push_back("(d) " + std::to_string(report.strip_pairs_checked) + " strip pairs disjoint");
  return report;
}

// ------------------------------------------------------------------ non-BC

RadiusSchedule non_bc_schedule(const ApproxCertificate& cert, long n_max) {
  if (cert.tag != "eq3") throw CertificateInvalid("non-BC schedule needs an eq3 certificate, got '" + cert.tag + "'");
  if (n_max < 1 || n_max > static_cast<long>(cert.size())) throw CertificateInvalid("n_max outside certificate range");
  require_valid(cert.alpha(), cert);

  const auto ud = static_cast<unsigned long>(cert.d);
  RadiusSchedule schedule;
  schedule.d = cert.d;
  BigInt previous = 1;
  for (long n = 1; n <= n_max; ++n) {
    const BigInt& Q = cert.at(n).Q;
    const BigInt n2d = ipow(big(n), 2 * ud);
    const BigInt U = n2d * Q;
    const RealScalar R = RealScalar(1L) / (RealScalar(n * n) * root(RealScalar(Q), ud));
    schedule.blocks.push_back({previous, U, BigRational(BigInt(1), n2d * Q), R.to_double()});
    previous = U;
  }
  schedule.validate();
  return schedule;
}

NonBcReport verify_non_bc(const RealVector& alpha, const ApproxCertificate& cert, const RadiusSchedule& schedule,
                          long n_max) {
  if (cert.tag != "eq3") throw CertificateInvalid("non-BC verification needs an eq3 certificate");
  require_valid(alpha, cert);
  if (static_cast<long>(schedule.blocks.size()) < n_max) throw CertificateInvalid("schedule shorter than n_max");

  const int d = cert.d;
  const auto ud = static_cast<unsigned long>(d);
  NonBcReport report;
  report.d = d;
  report.metric_constant = std::pow(4.0, d);
  report.tail_constant = report.metric_constant * 2.0 * d / (2.0 * d - 1.0);

  std::optional<CircleRotation> rotation;
  Eigen::VectorXd alpha_d(d);
  for (int i = 0; i < d; ++i) alpha_d[i] = alpha[static_cast<std::size_t>(i)].to_double();
  if (d == 1) rotation.emplace(CircleRotation::from_real(alpha.front(), 320));

  for (long n = 1; n <= n_max; ++n) {
    const auto& entry = cert.at(n);
    const auto& block = schedule.blocks[static_cast<std::size_t>(n - 1)];
    NonBcRow row;
    row.n = n;
    row.Q = entry.Q;
    row.U = block.end;
    row.R = block.radius;
    row.block_mass = block.mass();
    if (row.block_mass < BigRational(1, 2) || row.block_mass > 1)
      throw VerificationFailure("block-mass", "(U_n - U_{n-1}) R_n^d outside [1/2, 1] at n = " + std::to_string(n));

    // ||k Q_n alpha|| <= n^{2d} b_n <= 1/(n^3 Q_n^{1/d}) <= R_n for k <= n^{2d}.
    const BigInt big_n = big(n);
    const BigRational scaled = BigRational(ipow(big_n, 2 * ud + 3)) * entry.bound;
    BigRational lhs = 1;
    for (unsigned long i = 0; i < ud; ++i) lhs *= scaled;
    if (lhs * BigRational(entry.Q) > 1)
      throw VerificationFailure("containment", "n^{2d} b_n > 1/(n^3 Q_n^{1/d}) at n = " + std::to_string(n));
    RealVector multiple;
    for (const auto& a : alpha) multiple.push_back(RealScalar(entry.Q, a.precision()) * a);
    const RealScalar drift = RealScalar(ipow(big_n, 2 * ud)) * dist_to_lattice(multiple);
    const RealScalar limit = RealScalar(1L) / (RealScalar(ipow(big_n, 3)) * root(RealScalar(entry.Q), ud));
    if (!certainly_le(drift, limit))
      throw VerificationFailure("containment", "||k Q_n alpha|| bound not certified at n = " + std::to_string(n));

    const double radius2 = 2.0 * row.R;
    if (rotation) {
      row.hit_region.value = rotation->orbit_arc_union_measure(entry.Q, radius2);
      row.block_union.value = rotation->orbit_arc_union_measure(block.length(), row.R);
    } else if (entry.Q <= 2000) {
      std::vector<Ball> balls;
      const long count = entry.Q.get_si();
      for (long l = 0; l < count; ++l) balls.push_back({translate(Eigen::VectorXd::Zero(d), alpha_d, -l), radius2});
      row.hit_region = union_measure_boxes(balls);
      row.block_union = row.hit_region;
      row.hit_region_is_bound = true;
    } else {
      row.hit_region.value = std::min(1.0, entry.Q.get_d() * std::pow(2.0 * radius2, d));
      row.block_union = row.hit_region;
      row.hit_region_is_bound = true;
    }
    row.metric_bound = report.metric_constant / std::pow(static_cast<double>(n), 2.0 * d);
    row.measured_constant = row.hit_region.value * std::pow(static_cast<double>(n), 2.0 * d);
    if (row.hit_region.value > row.metric_bound * (1 + 1e-12))
      throw VerificationFailure("measure-bound", "hit region exceeds C/n^{2d} at n = " + std::to_string(n));
    if (row.block_union.value > row.hit_region.value * (1 + 1e-12) + 1e-15)
      throw VerificationFailure("block-in-region", "block union exceeds the hit region at n = " + std::to_string(n));
    if (n >= 2) report.fitted_constant = std::max(report.fitted_constant, row.measured_constant);
    report.rows.push_back(std::move(row));
  }
  for (std::size_t i = 2; i < report.rows.size(); ++i)
    if (report.rows[i].hit_region.value >= report.rows[i - 1].hit_region.value) report.decreasing_from_2 = false;

  // sum_{k=n}^{n_max} C/k^{2d} <= C'/n^{2d-1}, exactly; C and C' share the factor 4^d.
  const BigRational c_prime_ratio(BigInt(2 * d), BigInt(2 * d - 1));
  for (long n = 1; n <= n_max; ++n) {
    BigRational tail = 0;
    for (long k = n; k <= n_max; ++k) tail += BigRational(BigInt(1), ipow(big(k), 2 * ud));
    if (tail > c_prime_ratio / BigRational(ipow(big(n), 2 * ud - 1)))
      throw VerificationFailure("tail-sum", "tail sum bound fails at n = " + std::to_string(n));
  }
  return report;
}

// --------------------------------------------------------------- hit sets

std::string HitReport::to_csv(std::size_t sample_id) const {
  std::ostringstream out;
  for (auto n : hits) {
    out << sample_id << ',' << n;
    for (Eigen::Index i = 0; i < x.size(); ++i) out << ',' << fmt(x[i]);
    out << "\r\n";
  }
  return out.str();
}

namespace {

// Streams x + n alpha for n = 0, 1, ..., resynchronising periodically so that
// rounding does not accumulate.
class OrbitWalker {
 public:
  OrbitWalker(const Eigen::VectorXd& alpha, const TorusPoint& x) : alpha_(alpha), x_(x), pos_(reduce(x)) {}
  const TorusPoint& position() const { return pos_; }
  void step() {
    ++n_;
    if ((n_ & 4095) == 0) {
      pos_ = translate(x_, alpha_, static_cast<long long>(n_));
    } else {
      pos_ += alpha_;
      for (Eigen::Index i = 0; i < pos_.size(); ++i)
        if (pos_[i] >= 1.0) pos_[i] -= 1.0;
    }
  }

 private:
  Eigen::VectorXd alpha_;
  TorusPoint x_;
  TorusPoint pos_;
  std::uint64_t n_ = 0;
};

struct BlockCursor {
  const RadiusSchedule& schedule;
  std::vector<std::uint64_t> starts, ends;
  std::size_t b = 0;

  explicit BlockCursor(const RadiusSchedule& s) : schedule(s) {
    for (const auto& blk : s.blocks) {
      starts.push_back(saturate(blk.start));
      ends.push_back(saturate(blk.end));
    }
  }
  // Radius at n for non-decreasing n; -1 when outside every block.
  double radius(std::uint64_t n, std::size_t* index) {
    while (b < ends.size() && n >= ends[b]) ++b;
    if (b < ends.size() && n >= starts[b]) {
      *index = b;
      return schedule.blocks[b].radius;
    }
    return -1.0;
  }
};

}  // namespace

HitReport hit_set(const Eigen::VectorXd& alpha, const TargetSequence& target, const TorusPoint& x, std::uint64_t N,
                  std::size_t max_stored, std::uint64_t budget) {
  if (N > budget) throw BudgetExceeded("orbit horizon " + std::to_string(N) + " exceeds budget");
  HitReport report;
  report.x = x;
  report.horizon = N;
  report.per_block.assign(target.schedule.blocks.size(), 0);
  OrbitWalker walker(alpha, x);
  BlockCursor cursor(target.schedule);
  const Ball ball{target.center, 0.0};
  for (std::uint64_t n = 0; n < N; ++n, walker.step()) {
    std::size_t index = 0;
    const double r = cursor.radius(n, &index);
    if (r <= 0.0) continue;
    if (sup_distance(ball.center, walker.position()) < r) {
      ++report.per_block[index];
      if (report.hits.size() < max_stored)
        report.hits.push_back(n);
      else
        report.truncated = true;
    }
  }
  return report;
}

BcEstimate bc_monte_carlo(const Eigen::VectorXd& alpha, const TargetSequence& target, std::uint64_t N,
                          std::uint64_t samples, std::uint64_t seed, std::uint64_t min_hits) {
  if (samples < 1) throw Error("sample count must be positive");
  BcEstimate out;
  out.samples = samples;
  out.seed = seed;
  out.hit_counts.resize(samples);
  const auto d = alpha.size();
  std::uint64_t successes = 0;
  TorusPoint x(d);
  for (std::uint64_t chunk = 0; chunk * mc_chunk_size < samples; ++chunk) {
    auto rng = chunk_stream(seed, chunk);
    const std::uint64_t end = std::min(samples, (chunk + 1) * mc_chunk_size);
    for (std::uint64_t s = chunk * mc_chunk_size; s < end; ++s) {
      for (Eigen::Index i = 0; i < d; ++i) x[i] = uniform01(rng);
      OrbitWalker walker(alpha, x);
      BlockCursor cursor(target.schedule);
      std::uint64_t hits = 0;
      for (std::uint64_t n = 0; n < N && hits < min_hits; ++n, walker.step()) {
        std::size_t index = 0;
        const double r = cursor.radius(n, &index);
        if (r > 0.0 && sup_distance(target.center, walker.position()) < r) ++hits;
      }
      out.hit_counts[s] = hits;
      if (hits >= min_hits) ++successes;
    }
  }
  const double n = static_cast<double>(samples);
  out.fraction = static_cast<double>(successes) / n;
  out.std_error = std::sqrt(out.fraction * (1.0 - out.fraction) / n);
  return out;
}

std::vector<BcEstimate> block_hit_fraction(const CircleRotation& rotation, double x0, const RadiusSchedule& schedule,
                                           std::uint64_t samples, std::uint64_t seed) {
  if (samples < 1) throw Error("sample count must be positive");
  if (schedule.d != 1) throw Error("block_hit_fraction is one-dimensional");
  std::vector<std::uint64_t> hits(schedule.blocks.size(), 0);
  for (std::uint64_t chunk = 0; chunk * mc_chunk_size < samples; ++chunk) {
    auto rng = chunk_stream(seed, chunk);
    const std::uint64_t end = std::min(samples, (chunk + 1) * mc_chunk_size);
    for (std::uint64_t s = chunk * mc_chunk_size; s < end; ++s) {
      const double x = uniform01(rng);
      for (std::size_t b = 0; b < schedule.blocks.size(); ++b) {
        const auto& blk = schedule.blocks[b];
        if (blk.radius <= 0.0) continue;
        if (rotation.nearest_approach(x - x0, blk.start, blk.length()) < blk.radius) ++hits[b];
      }
    }
  }
  std::vector<BcEstimate> out;
  const double n = static_cast<double>(samples);
  for (auto h : hits) {
    BcEstimate e;
    e.samples = samples;
    e.seed = seed;
    e.fraction = static_cast<double>(h) / n;
    e.std_error = std::sqrt(e.fraction * (1.0 - e.fraction) / n);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace shrinklab
