#pragma once

// Time changes of linear flows on T^{d+1}: dx/dt = phi(x) (alpha, 1) with phi a
// positive trigonometric polynomial. The section x_{d+1} = const sees the
// rotation by alpha; return times are integrals of 1/phi along fibres.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shrinklab/diophantine.hpp"
#include "shrinklab/ode.hpp"
#include "shrinklab/random.hpp"
#include "shrinklab/targets.hpp"

namespace shrinklab {

/// a cos(2 pi k.x) + b sin(2 pi k.x) with k in Z^{d+1}.
struct FourierTerm {
  std::vector<int> k;
  double cos_coeff = 0.0;
  double sin_coeff = 0.0;
};

/// Z = int_{T^{d+1}} 1/phi by the tensor trapezoid rule, with an error
/// estimate from halving the grid.
struct Normalization {
  double value = 0.0;
  double error = 0.0;
  std::size_t points_per_axis = 0;
};

struct FlowSpec {
  int d = 1;
  RealVector alpha;
  Eigen::VectorXd alpha_float;
  std::vector<FourierTerm> terms;
  double phi_min = 0.0;  // certified: constant term - sum of term amplitudes
  double phi_max = 0.0;  // constant term + sum of term amplitudes

  /// Bounds on the return time to a section: c >= 1/phi_max, C <= 1/phi_min.
  double return_time_lower() const { return 1.0 / phi_max; }
  double return_time_upper() const { return 1.0 / phi_min; }

  double phi(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// Vector field phi(x) (alpha, 1).
  OdeState velocity(const OdeState& x) const;

  std::string to_json(int alpha_digits = 40) const;

  mutable std::optional<Normalization> normalization_cache;
};

/// Validates the terms and certifies positivity; throws ConfigInvalid.
FlowSpec make_flow_spec(const RealVector& alpha, std::vector<FourierTerm> terms);
FlowSpec flow_spec_from_json(const std::string& text);

/// T^t x reduced mod 1.
Eigen::VectorXd flow_integrate(const FlowSpec& spec, const Eigen::VectorXd& x, double t, double tol = 1e-9);

/// int_0^1 ds / phi(x + s alpha, s) by adaptive Gauss-Kronrod quadrature.
double return_time_quadrature(const FlowSpec& spec, const Eigen::VectorXd& x_section);

struct SectionData {
  Eigen::VectorXd start;  // point of T^d on the section x_{d+1} = 0
  Eigen::VectorXd image;  // first return, reduced mod 1
  double time = 0.0;
  double quadrature_time = 0.0;
  double image_error = 0.0;  // sup distance between image and start + alpha
  double time_error = 0.0;   // |time - quadrature_time|
};

/// First return to x_{d+1} = 0 mod 1. Throws CrossingFailure when the
/// crossing cannot be located or the image disagrees with the translation.
SectionData return_map(const FlowSpec& spec, const Eigen::VectorXd& x_section, double tol = 1e-9);

/// Density of mu_phi at x: (1/phi(x)) / Z with Z = int 1/phi.
double mu_phi_weight(const FlowSpec& spec, const Eigen::VectorXd& x);
const Normalization& phi_normalization(const FlowSpec& spec);

/// Draws from mu_phi by rejection against the uniform measure.
Eigen::VectorXd sample_mu_phi(const FlowSpec& spec, std::mt19937_64& rng);

struct InvarianceReport {
  std::uint64_t samples = 0;
  std::size_t bins = 0;
  /// Chi-square distance between the pushed-forward histogram and the exact
  /// bin masses, worst over the tested coordinates.
  double chi2 = 0.0;
  /// Mean plus three standard deviations of chi-square with bins - 1 degrees.
  double threshold = 0.0;
  bool within_three_sigma = false;
  double sample_chi2 = 0.0;  // same statistic before the push, checks the sampler
};

/// Pushes mu_phi samples through the time-1 map and compares the histograms
/// of the first and last coordinates with the exact mu_phi bin masses.
InvarianceReport time1_invariance_check(const FlowSpec& spec, std::uint64_t samples, std::uint64_t seed,
                                        std::size_t bins = 8, double tol = 1e-8);

// ------------------------------------------------------------ no-MSTP run

struct NostpOptions {
  Regime regime = Regime::faithful;
  bool direct_simulation = false;
  std::uint64_t samples = 200;
  std::uint64_t seed = 0;
  double max_simulated_time = 40000.0;  // simulate blocks with U_n up to this
  double tol = 1e-8;
};

struct NostpRow {
  long n = 0;
  BigInt Q;
  BigInt U;
  double R = 0.0;
  double block_mass = 0.0;          // (U_n - U_{n-1}) R_n^{d+1}
  bool block_mass_certified = false;  // >= 1/2 proved in interval arithmetic
  BigInt crossings;                 // L_n: section crossings within flow time U_n
  BigInt wraps;                     // K_n = max(1, floor(L_n / Q_n))
  double rho = 0.0;                 // R_n (1 + |alpha|) + K_n b_n
  double nominal_bound = 0.0;       // (Q_n + 1) (4 R_n)^d
  double haar_bound = 0.0;          // min(1, Q_n (2 rho_n)^d)
  double measure_bound = 0.0;       // mu_phi bound: (phi_max/phi_min) haar_bound
  std::optional<double> simulated_fraction;
  std::optional<double> simulated_error;
  std::uint64_t containment_checked = 0;  // simulated hits traced back into the section set
};

struct NostpReport {
  int d = 2;
  double phi_min = 0.0, phi_max = 0.0;
  std::vector<NostpRow> rows;
  std::optional<double> fitted_exponent;  // slope of -log bound vs log n over unsaturated rows
  std::vector<double> consecutive_ratios; // bound_{n+1} / bound_n

  std::string to_csv() const;
};

/// Requires a certificate tagged "eq7" enclosing spec.alpha. Throws
/// CertificateInvalid, RegimeInfeasible (direct simulation in the faithful
/// regime) or VerificationFailure naming "block-mass" or "containment".
NostpReport nostp_experiment(const FlowSpec& spec, const ApproxCertificate& cert, long n_max,
                             const Eigen::VectorXd& center, const NostpOptions& options = {});

}  // namespace shrinklab
