#pragma once

// Orbit geometry of a circle rotation x -> x + alpha driven by the continued
// fraction of alpha: gap lengths of finite orbits (three-distance theorem) and
// closest approaches over astronomically long index ranges.

#include <vector>

#include "shrinklab/real.hpp"

namespace shrinklab {

class CircleRotation {
 public:
  struct Gap {
    BigRational length;
    BigInt multiplicity;
  };

  /// alpha is reduced mod 1. Irrational angles are handled through a rational
  /// inside their enclosure; orbits shorter than its denominator behave exactly
  /// as for any angle with the same leading quotients.
  explicit CircleRotation(const BigRational& alpha, long precision = 256);
  static CircleRotation from_real(const RealScalar& alpha, long precision = 256);

  const BigRational& alpha() const { return alpha_; }
  /// Convergent denominators q_0, q_1, ...
  std::vector<BigInt> denominators() const;

  /// Gaps between consecutive points of {j alpha : 0 <= j < points}.
  std::vector<Gap> gap_spectrum(const BigInt& points) const;
  /// Measure of the union of open arcs of the given radius around those points.
  double orbit_arc_union_measure(const BigInt& points, double radius) const;
  /// min over start <= j < start + length of ||w + j alpha||.
  double nearest_approach(double w, const BigInt& start, const BigInt& length) const;

 private:
  BigInt q(long k) const { return q_[static_cast<std::size_t>(k + 1)]; }
  BigInt p(long k) const { return p_[static_cast<std::size_t>(k + 1)]; }
  long last_index() const { return static_cast<long>(q_.size()) - 2; }
  BigRational eta(long k) const;

  BigRational alpha_;
  long precision_;
  // Index shifted by one so that entry 0 holds k = -1.
  std::vector<BigInt> a_, p_, q_;
};

}  // namespace shrinklab
