#pragma once

// Points, sup-metric balls and union measures on T^d = R^d / Z^d.

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shrinklab/real.hpp"

namespace shrinklab {

using TorusPoint = Eigen::VectorXd;

/// Coordinates reduced into [0, 1).
TorusPoint reduce(const TorusPoint& x);
double wrap01(double x);

/// ||a - b|| on the circle.
double circle_distance(double a, double b);
double sup_distance(const TorusPoint& a, const TorusPoint& b);

struct Ball {
  TorusPoint center;
  double radius = 0.0;
};

/// Open sup-metric ball membership.
bool ball_contains(const Ball& ball, const TorusPoint& p);

enum class MeasureMethod { exact, grid, monte_carlo };
std::string to_string(MeasureMethod m);

struct MeasureEstimate {
  double value = 0.0;
  MeasureMethod method = MeasureMethod::exact;
  /// Rigorous bound for exact/grid, standard error for monte-carlo.
  double error = 0.0;
  std::uint64_t samples = 0;
  std::optional<std::uint64_t> seed;
  std::size_t resolution = 0;

  std::string to_json() const;
};

/// x + n alpha mod 1, with n alpha reduced in extended precision.
TorusPoint translate(const TorusPoint& x, const Eigen::VectorXd& alpha, long long n);
/// Certificate mode: exact/interval arithmetic, any n.
RealVector translate(const RealVector& x, const RealVector& alpha, const BigInt& n);

struct Arc {
  double center = 0.0;
  double radius = 0.0;
};

MeasureEstimate union_measure_1d(const std::vector<Arc>& arcs);

struct GridMethod {
  std::size_t resolution = 256;
  std::uint64_t cell_budget = std::uint64_t{1} << 26;
};

struct MonteCarloMethod {
  std::uint64_t samples = 10000;
  std::uint64_t seed = 0;
};

MeasureEstimate union_measure_md(const std::vector<Ball>& balls, const GridMethod& method);
MeasureEstimate union_measure_md(const std::vector<Ball>& balls, const MonteCarloMethod& method);
/// Exact measure of a union of sup-metric balls (axis-aligned boxes) by a
/// recursive coordinate sweep; intended for a few hundred balls.
MeasureEstimate union_measure_boxes(const std::vector<Ball>& balls);

/// True iff all pairwise sup distances are >= 2 radius, i.e. the open balls
/// of that radius are pairwise disjoint.
bool disjointness_check(const std::vector<TorusPoint>& centers, double radius);

std::string balls_to_csv(const std::vector<Ball>& balls);

}  // namespace shrinklab
