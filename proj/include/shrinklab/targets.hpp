#pragma once

// Radius schedules on huge index ranges, the two translation constructions
// (empty lim sup, non-BC monotone) and hit-set experiments.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "shrinklab/diophantine.hpp"
#include "shrinklab/rotation.hpp"
#include "shrinklab/torus.hpp"

namespace shrinklab {

enum class Regime { faithful, simulable };
std::string to_string(Regime r);

/// Radius on the half-open index range [start, end). Indices outside every
/// block carry radius 0.
struct ScheduleBlock {
  BigInt start;
  BigInt end;
  BigRational radius_pow_d;  // exact r^d
  double radius = 0.0;

  BigInt length() const { return end - start; }
  /// (end - start) r^d
  BigRational mass() const { return BigRational(length()) * radius_pow_d; }
};

struct RadiusSchedule {
  int d = 1;
  std::vector<ScheduleBlock> blocks;

  /// Non-increasing radii with no zero-radius gap between blocks; indices
  /// before the first block are ignored.
  bool monotone() const;
  /// Throws if blocks overlap, are empty or out of order.
  void validate() const;
  double radius_at(const BigInt& n) const;
  /// Exact sum of r_n^d over n < horizon.
  BigRational partial_sum(const BigInt& horizon) const;
  std::string to_json() const;
};

struct TargetSequence {
  TorusPoint center;
  RadiusSchedule schedule;
};

// ---------------------------------------------------------- empty lim sup

struct EmptyLimsupEntry {
  long p = 0;
  long l = 0;
  BigInt n;                  // q_l + k_p
  BigRational radius_pow_d;  // 1/l
};

struct EmptyLimsupCertificate {
  int d = 1;
  RealScalar alpha1;
  std::vector<BigInt> k;                  // k_1, k_2, ...
  std::vector<BigRational> half_width;    // strip half-widths w_p
  std::map<long, BigInt> q;               // l -> q_l
  std::vector<BigInt> V;                  // V_p = q_{5^{dp}} + k_p
  std::vector<EmptyLimsupEntry> entries;
};

struct EmptyLimsupResult {
  RadiusSchedule schedule;
  EmptyLimsupCertificate certificate;
};

/// q_l: first convergent denominator of alpha_1 above q_{l-1} with
/// ||q_l alpha_1|| <= e^{-l}; k_p greedy so that the strips around -k_p alpha_1
/// of half-width 4^{-p} are pairwise disjoint.
EmptyLimsupResult empty_limsup_schedule(const RealScalar& alpha1, int d, long p_max);

struct EmptyLimsupReport {
  long p_max = 0;
  std::size_t indices_checked = 0;
  std::size_t strip_pairs_checked = 0;
  /// One line per check group, for reports.
  std::vector<std::string> lines;
};

/// Checks (a) ||(n - k_p) alpha_1|| <= e^{-5^{dp}}, (b) r_n^d <= 5^{-dp},
/// (c) e^{-5^{dp}} + 5^{-p} <= w_p and (d) pairwise disjoint strips, in that
/// order. Throws VerificationFailure naming "a", "b", "c" or "d".
EmptyLimsupReport verify_empty_limsup(const EmptyLimsupCertificate& cert, long p_max);

// ------------------------------------------------------------------ non-BC

/// Blocks [U_{n-1}, U_n) at R_n with U_n = n^{2d} Q_n, R_n = n^{-2} Q_n^{-1/d}, U_0 = 1.
RadiusSchedule non_bc_schedule(const ApproxCertificate& cert, long n_max);

struct NonBcRow {
  long n = 0;
  BigInt Q;
  BigInt U;
  double R = 0.0;
  BigRational block_mass;
  MeasureEstimate hit_region;   // mu(U_{l<Q_n} T^{-l} B(x_0, 2R_n))
  bool hit_region_is_bound = false;
  double metric_bound = 0.0;    // C / n^{2d} with C = 4^d
  double measured_constant = 0.0;  // hit_region * n^{2d}
  MeasureEstimate block_union;  // mu(U_{l in block} T^{-l} B(x_0, R_n))
};

struct NonBcReport {
  int d = 1;
  double metric_constant = 0.0;  // C = 4^d
  double fitted_constant = 0.0;  // max_n measured constant over n >= 2
  double tail_constant = 0.0;    // C' = C 2d / (2d - 1)
  bool decreasing_from_2 = true;
  std::vector<NonBcRow> rows;
};

/// Throws CertificateInvalid for a bad certificate and VerificationFailure
/// naming "block-mass", "containment", "measure-bound", "block-in-region" or "tail-sum".
NonBcReport verify_non_bc(const RealVector& alpha, const ApproxCertificate& cert, const RadiusSchedule& schedule,
                          long n_max);

// --------------------------------------------------------------- hit sets

struct HitReport {
  TorusPoint x;
  std::vector<std::uint64_t> hits;
  std::uint64_t horizon = 0;
  bool truncated = false;
  std::vector<std::uint64_t> per_block;  // hits in each schedule block

  std::string to_csv(std::size_t sample_id) const;
};

inline constexpr std::uint64_t default_orbit_budget = 2'000'000'000;

/// All 0 <= n < N with x + n alpha in B(x_0, r_n).
HitReport hit_set(const Eigen::VectorXd& alpha, const TargetSequence& target, const TorusPoint& x, std::uint64_t N,
                  std::size_t max_stored = 1'000'000, std::uint64_t budget = default_orbit_budget);

struct BcEstimate {
  double fraction = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> hit_counts;  // per sample, capped at min_hits
};

/// Fraction of uniform samples with at least min_hits hits before N.
BcEstimate bc_monte_carlo(const Eigen::VectorXd& alpha, const TargetSequence& target, std::uint64_t N,
                          std::uint64_t samples, std::uint64_t seed, std::uint64_t min_hits);

/// One-dimensional block experiment for astronomically long blocks: fraction
/// of uniform x whose orbit enters B(x_0, r) at some index of each block.
std::vector<BcEstimate> block_hit_fraction(const CircleRotation& rotation, double x0, const RadiusSchedule& schedule,
                                           std::uint64_t samples, std::uint64_t seed);

}  // namespace shrinklab
