#include "shrinklab/ode.hpp"

#include <algorithm>
#include <cmath>

#include "shrinklab/errors.hpp"

namespace shrinklab {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// Fifth minus fourth order weights.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

}  // namespace

OdeState dopri_step(const OdeRhs& f, const OdeState& y, double h, OdeState* error) {
  const OdeState k1 = f(y);
  const OdeState k2 = f(y + h * a21 * k1);
  const OdeState k3 = f(y + h * (a31 * k1 + a32 * k2));
  const OdeState k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
  const OdeState k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
  const OdeState k6 = f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
  OdeState out = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  if (error) {
    const OdeState k7 = f(out);
    *error = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
  }
  return out;
}

DormandPrince::DormandPrince(OdeRhs f, OdeOptions options)
    : f_(std::move(f)), options_(options), h_(options.initial_step) {
  if (!(options_.tolerance > 0.0)) throw Error("integrator tolerance must be positive");
}

double DormandPrince::error_norm(const OdeState&, const OdeState&, const OdeState& err) const {
  return err.cwiseAbs().maxCoeff() / options_.tolerance;
}

double DormandPrince::step(OdeState& y, double max_h) {
  if (max_h == 0.0) return 0.0;
  const double sign = max_h > 0 ? 1.0 : -1.0;
  const double limit = std::abs(max_h);
  OdeState err;
  for (;;) {
    double h = std::min({h_, limit, options_.max_step});
    if (h < options_.min_step && h < limit) throw StepUnderflow("step size fell below the minimum");
    const OdeState y_new = dopri_step(f_, y, sign * h, &err);
    const double norm = error_norm(y, y_new, err);
    const double factor = norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
    if (norm <= 1.0) {
      ++stats_.accepted;
      y = y_new;
      // Do not let a short final step shrink the proposal.
      if (h == h_ || factor < 1.0) h_ = h * factor;
      return sign * h;
    }
    ++stats_.rejected;
    if (stats_.rejected > options_.max_steps) throw StepUnderflow("too many rejected steps");
    h_ = h * factor;
  }
}

OdeState DormandPrince::integrate(const OdeState& y0, double t) {
  OdeState y = y0;
  double remaining = t;
  std::uint64_t steps = 0;
  while (std::abs(remaining) > 0.0) {
    remaining -= step(y, remaining);
    if (++steps > options_.max_steps) throw StepUnderflow("step budget exhausted");
    if (std::abs(remaining) < 1e-15 * std::max(1.0, std::abs(t))) break;
  }
  return y;
}

double DormandPrince::advance_to_level(OdeState& y, Eigen::Index index, double level, double t_max,
                                       double time_tolerance) {
  double elapsed = 0.0;
  std::uint64_t steps = 0;
  while (y[index] < level) {
    if (elapsed >= t_max) throw CrossingFailure("level not reached within the time limit");
    const OdeState start = y;
    const double h = step(y, t_max - elapsed);
    if (++steps > options_.max_steps) throw StepUnderflow("step budget exhausted");
    if (y[index] < level) {
      elapsed += h;
      continue;
    }
    // Bisection on the sub-step length; each trial is a single step from the
    // accepted start point, hence no less accurate than the accepted step.
    double lo = 0.0, hi = h;
    OdeState trial;
    while (hi - lo > time_tolerance) {
      const double mid = 0.5 * (lo + hi);
      trial = dopri_step(f_, start, mid, nullptr);
      if (trial[index] < level)
        lo = mid;
      else
        hi = mid;
      if (mid == lo && mid == hi) break;
    }
    const double tau = 0.5 * (lo + hi);
    y = dopri_step(f_, start, tau, nullptr);
    if (!(start[index] <= level + 1e-9 && std::abs(y[index] - level) < 1e-6))
      throw CrossingFailure("crossing bisection did not converge");
    return elapsed + tau;
  }
  return elapsed;
}

}  // namespace shrinklab
