#pragma once

// Constant-type side: the disjointness constant eps(alpha), the covering
// lemma as an executable check, and the doubling lower-bound experiment.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shrinklab/torus.hpp"

namespace shrinklab {

/// Volume of the unit sup-metric ball in dimension d.
double unit_ball_volume(int d);

struct EpsilonResult {
  double value = 0.0;  // eps(Q_max), rounded down
  std::uint64_t q_max = 0;
  std::uint64_t argmin_Q = 0;  // minimising Q
  std::uint64_t argmin_l = 0;  // l <= 2Q - 1 attaining min ||l alpha||
  double min_distance = 0.0;   // ||argmin_l alpha||

  std::string to_json() const;
};

inline constexpr std::uint64_t default_epsilon_budget = std::uint64_t{1} << 26;

/// eps(Q_max) = (1/2) min_{Q <= Q_max} Q^{1/d} min_{1 <= l <= 2Q-1} ||l alpha||.
/// With this value the sup balls of radius eps/Q^{1/d} around x - l alpha,
/// l <= 2Q - 1, are pairwise disjoint for every Q <= Q_max.
EpsilonResult epsilon_alpha(const RealVector& alpha, std::uint64_t q_max,
                            std::uint64_t budget = default_epsilon_budget);

struct CoveringInstance {
  int d = 1;
  std::uint64_t Q = 4;
  double epsilon = 0.0;
  std::vector<TorusPoint> points;  // 2Q points
  std::vector<double> radii;       // 2Q radii, non-increasing

  std::string to_json() const;
};

enum class Alternative { none, first, second, both };
std::string to_string(Alternative a);

struct LemmaVerdict {
  Alternative alternative = Alternative::none;
  double union_first = 0.0;   // mu(U_{l<Q} B(y_l, r_l))
  double union_all = 0.0;     // mu(U_{l<2Q} B(y_l, r_l))
  double threshold = 0.0;     // V(d) (eps/10)^d
  double gain = 0.0;          // (Q/2) mu(B(y_0, r_{2Q-1}))
  double margin_first = 0.0;  // union_first - threshold
  double margin_second = 0.0; // union_all - union_first - gain
  MeasureMethod method = MeasureMethod::exact;
  int escalations = 0;
  double error = 0.0;         // measurement error bound

  bool falsified() const { return alternative == Alternative::none; }
};

enum class LemmaMeasure { exact, grid };

struct LemmaOptions {
  LemmaMeasure measure = LemmaMeasure::exact;
  std::size_t initial_resolution = 256;
  std::uint64_t cell_budget = std::uint64_t{1} << 26;
};

/// Throws HypothesisViolated when Q < 4, the sizes are wrong, the radii
/// increase or the balls B(y_l, eps/Q^{1/d}) overlap; ResolutionInsufficient
/// when a grid cannot separate the alternatives.
LemmaVerdict covering_lemma_check(const CoveringInstance& instance, const LemmaOptions& options = {});

/// One-dimensional diagnostic for the case r_{Q-1} < eps/(10Q): every arc
/// B(y_l', r_l'), l' >= Q, meeting some B(y_l, r_l), l < Q, must have more than
/// a fifth of B(y_l', eps/Q) inside that B(y_l, r_l). Returns true when the
/// claim holds or does not apply.
bool fifth_proportion_check(const CoveringInstance& instance);

struct CampaignRow {
  std::uint64_t instance_id = 0;
  std::uint64_t Q = 0;
  int d = 1;
  LemmaVerdict verdict;
};

struct CampaignResult {
  std::vector<CampaignRow> rows;
  std::uint64_t falsifications = 0;
  std::uint64_t escalations = 0;
  std::uint64_t exact_decisions = 0;
  std::uint64_t proportion_failures = 0;
  std::vector<std::string> falsified_instances;  // JSON for replay

  std::string to_csv() const;
};

/// Random hypothesis-satisfying instance; the generator mixes uniform point
/// clouds with rotation orbits and several radius profiles.
CoveringInstance random_covering_instance(int d, std::uint64_t Q, std::uint64_t seed, std::uint64_t instance_id);

CampaignResult lemma_campaign(const std::vector<int>& dims, const std::vector<std::uint64_t>& Qs,
                              std::uint64_t instances_per_cell, std::uint64_t seed,
                              const LemmaOptions& options = {});

struct DoublingRow {
  int n = 0;
  std::uint64_t horizon = 0;      // 2^{n+1}
  double union_measure = 0.0;     // mu(U_{l < 2^{n+1}} B(x_l, r_l))
  double recurrence_bound = 0.0;  // sum_{p=2}^{n} 2^{p-1} mu(B(x_0, r_{2^{p+1}-1}))
  bool reached_eta = false;
  bool first_alternative_so_far = false;  // mu(U_{l<2^n}) >= eta at some earlier stage
  double schedule_mass = 0.0;      // sum_{l < horizon} r_l^d
};

struct MstpReport {
  int d = 1;
  double epsilon = 0.0;
  double eta = 0.0;  // V(d) (eps/10)^d with V(d) = 2^d
  std::optional<int> reached_at;
  bool monotone_unions = true;
  bool recurrence_respected = true;
  bool looks_divergent = false;  // dyadic terms 2^p r_{2^p}^d not decaying
  std::vector<DoublingRow> rows;

  std::string to_csv() const;
};

/// radii must hold r_0 .. r_{2^{N+1}-1}, non-increasing. When epsilon is not
/// given it is computed by epsilon_alpha at Q_max = 2^N.
MstpReport mstp_lower_bound(const RealVector& alpha, const TorusPoint& x0, const std::vector<double>& radii,
                            int n_doublings, std::optional<double> epsilon = std::nullopt);

/// r_l = c / (l + 1)^{1/d} for l < count.
std::vector<double> harmonic_radii(double c, int d, std::uint64_t count);

}  // namespace shrinklab
