#pragma once

// Adaptive Dormand-Prince 5(4) integration of autonomous systems y' = f(y).

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

namespace shrinklab {

/// Stack-allocated state for systems of up to eight equations.
using OdeState = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 8, 1>;
using OdeRhs = std::function<OdeState(const OdeState&)>;

struct OdeOptions {
  double tolerance = 1e-9;  // absolute local error per step
  double initial_step = 0.05;
  double min_step = 1e-14;
  double max_step = 0.5;
  std::uint64_t max_steps = 100'000'000;
};

struct OdeStats {
  std::uint64_t accepted = 0;
  std::uint64_t rejected = 0;
};

/// One Dormand-Prince step of size h (negative h integrates backwards).
/// Returns the fifth-order solution and writes the embedded error estimate.
OdeState dopri_step(const OdeRhs& f, const OdeState& y, double h, OdeState* error);

class DormandPrince {
 public:
  DormandPrince(OdeRhs f, OdeOptions options = {});

  /// Integrates from y over duration t (either sign).
  OdeState integrate(const OdeState& y, double t);

  /// Advances y by one accepted step of at most max_h in the direction of
  /// max_h; returns the step taken.
  double step(OdeState& y, double max_h);

  /// First time at which component `index` of the solution, assumed strictly
  /// increasing, reaches `level`; y is advanced to that point. Throws
  /// CrossingFailure when the level is not reached before t_max.
  double advance_to_level(OdeState& y, Eigen::Index index, double level, double t_max,
                          double time_tolerance = 1e-12);

  const OdeStats& stats() const { return stats_; }
  const OdeOptions& options() const { return options_; }

 private:
  double error_norm(const OdeState& y, const OdeState& y_new, const OdeState& err) const;

  OdeRhs f_;
  OdeOptions options_;
  double h_;
  OdeStats stats_;
};

}  // namespace shrinklab
