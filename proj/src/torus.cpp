#include "shrinklab/torus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <json.hpp>
#include <sstream>

#include "shrinklab/random.hpp"

namespace shrinklab {

namespace {

MeasureEstimate estimate(double value, MeasureMethod method, double error = 0.0) {
  MeasureEstimate out;
  out.value = value;
  out.method = method;
  out.error = error;
  return out;
}

}  // namespace

double wrap01(double x) {
  double out = x - std::floor(x);
  return out >= 1.0 ? 0.0 : out;
}

TorusPoint reduce(const TorusPoint& x) { return x.unaryExpr([](double v) { return wrap01(v); }); }

double circle_distance(double a, double b) {
  double t = std::fabs(a - b);
  t -= std::floor(t);
  return std::min(t, 1.0 - t);
}

double sup_distance(const TorusPoint& a, const TorusPoint& b) {
  double out = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) out = std::max(out, circle_distance(a[i], b[i]));
  return out;
}

bool ball_contains(const Ball& ball, const TorusPoint& p) { return sup_distance(ball.center, p) < ball.radius; }

std::string to_string(MeasureMethod m) {
  switch (m) {
    case MeasureMethod::exact:
      return "exact";
    case MeasureMethod::grid:
      return "grid";
    case MeasureMethod::monte_carlo:
      return "monte-carlo";
  }
  return "exact";
}

std::string MeasureEstimate::to_json() const {
  nlohmann::ordered_json doc;
  doc["value"] = value;
  doc["method"] = to_string(method);
  doc["error"] = error;
  if (method == MeasureMethod::monte_carlo) {
    doc["samples"] = samples;
    doc["seed"] = seed ? nlohmann::ordered_json(*seed) : nlohmann::ordered_json(nullptr);
  }
  if (method == MeasureMethod::grid) doc["resolution"] = resolution;
  return doc.dump();
}

TorusPoint translate(const TorusPoint& x, const Eigen::VectorXd& alpha, long long n) {
  TorusPoint out(x.size());
  BigFloat shift(192);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    mpfr_set_d(shift.get(), alpha[i], MPFR_RNDN);
    mpfr_mul_si(shift.get(), shift.get(), static_cast<long>(n), MPFR_RNDN);  // exact at 192 bits
    out[i] = wrap01(x[i] + fraction(shift).to_double());
  }
  return out;
}

RealVector translate(const RealVector& x, const RealVector& alpha, const BigInt& n) {
  RealVector out;
  out.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    RealScalar v = x[i] + RealScalar(n, alpha[i].precision()) * alpha[i];
    const BigInt k = floor_exact(v);
    out.push_back(v - RealScalar(k, v.precision()));
  }
  return out;
}

MeasureEstimate union_measure_1d(const std::vector<Arc>& arcs) {
  std::vector<std::pair<double, double>> pieces;
  for (const auto& a : arcs) {
    if (a.radius <= 0.0) continue;
    if (a.radius >= 0.5) return estimate(1.0, MeasureMethod::exact);
    const double c = wrap01(a.center);
    const double lo = c - a.radius;
    const double hi = c + a.radius;
    if (lo < 0.0) {
      pieces.emplace_back(lo + 1.0, 1.0);
      pieces.emplace_back(0.0, hi);
    } else if (hi > 1.0) {
      pieces.emplace_back(lo, 1.0);
      pieces.emplace_back(0.0, hi - 1.0);
    } else {
      pieces.emplace_back(lo, hi);
    }
  }
  std::sort(pieces.begin(), pieces.end());
  double total = 0.0;
  double cur_lo = 0.0, cur_hi = -1.0;
  for (const auto& [lo, hi] : pieces) {
    if (lo > cur_hi) {
      if (cur_hi > cur_lo) total += cur_hi - cur_lo;
      cur_lo = lo;
      cur_hi = hi;
    } else {
      cur_hi = std::max(cur_hi, hi);
    }
  }
  if (cur_hi > cur_lo) total += cur_hi - cur_lo;
  return estimate(std::min(total, 1.0), MeasureMethod::exact);
}

namespace {

// Grid indices i whose cell centre (i + 1/2)/res lies in the open arc.
std::vector<std::size_t> covered_indices(double center, double radius, std::size_t res) {
  std::vector<std::size_t> out;
  if (radius <= 0.0) return out;
  const auto n = static_cast<long long>(res);
  if (radius >= 0.5) {
    out.resize(res);
    for (std::size_t i = 0; i < res; ++i) out[i] = i;
    return out;
  }
  const auto first = static_cast<long long>(std::floor((center - radius) * n - 0.5)) - 1;
  const auto last = static_cast<long long>(std::ceil((center + radius) * n - 0.5)) + 1;
  for (long long i = first; i <= last && i - first < n; ++i) {
    const long long idx = ((i % n) + n) % n;
    if (circle_distance((static_cast<double>(idx) + 0.5) / n, center) < radius)
      out.push_back(static_cast<std::size_t>(idx));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

MeasureEstimate union_measure_md(const std::vector<Ball>& balls, const GridMethod& method) {
  if (method.resolution < 1) throw Error("grid resolution must be positive");
  if (balls.empty()) {
    auto out = estimate(0.0, MeasureMethod::grid);
    out.resolution = method.resolution;
    return out;
  }
  const auto d = static_cast<std::size_t>(balls.front().center.size());
  const std::size_t res = method.resolution;
  const double cells = std::pow(static_cast<double>(res), static_cast<double>(d));
  if (cells > static_cast<double>(method.cell_budget))
    throw BudgetExceeded("grid of " + std::to_string(res) + "^" + std::to_string(d) + " cells exceeds budget");

  std::vector<std::uint8_t> marked(static_cast<std::size_t>(cells), 0);
  double error = 0.0;
  for (const auto& b : balls) {
    std::vector<std::vector<std::size_t>> ranges(d);
    bool empty = false;
    for (std::size_t k = 0; k < d; ++k) {
      ranges[k] = covered_indices(b.center[static_cast<Eigen::Index>(k)], b.radius, res);
      empty = empty || ranges[k].empty();
    }
    // Each of the 2d faces meets at most (2r res + 2)^{d-1} cells.
    const double side = std::min(2.0 * b.radius, 1.0) * static_cast<double>(res) + 2.0;
    if (b.radius > 0.0 && b.radius < 0.5)
      error += 2.0 * static_cast<double>(d) * std::pow(side, static_cast<double>(d - 1)) / cells;
    if (empty) continue;
    std::function<void(std::size_t, std::size_t)> mark = [&](std::size_t k, std::size_t offset) {
      if (k == d) {
        marked[offset] = 1;
        return;
      }
      for (std::size_t i : ranges[k]) mark(k + 1, offset * res + i);
    };
    mark(0, 0);
  }
  std::size_t count = 0;
  for (auto m : marked) count += m;
  auto out = estimate(static_cast<double>(count) / cells, MeasureMethod::grid, std::min(error, 1.0));
  out.resolution = res;
  return out;
}

MeasureEstimate union_measure_md(const std::vector<Ball>& balls, const MonteCarloMethod& method) {
  if (method.samples < 1) throw Error("sample count must be positive");
  auto out = estimate(0.0, MeasureMethod::monte_carlo);
  out.samples = method.samples;
  out.seed = method.seed;
  if (balls.empty()) return out;
  const auto d = balls.front().center.size();
  std::uint64_t hits = 0;
  TorusPoint p(d);
  for (std::uint64_t chunk = 0; chunk * mc_chunk_size < method.samples; ++chunk) {
    auto rng = chunk_stream(method.seed, chunk);
    const std::uint64_t end = std::min(method.samples, (chunk + 1) * mc_chunk_size);
    for (std::uint64_t s = chunk * mc_chunk_size; s < end; ++s) {
      for (Eigen::Index i = 0; i < d; ++i) p[i] = uniform01(rng);
      for (const auto& b : balls)
        if (ball_contains(b, p)) {
          ++hits;
          break;
        }
    }
  }
  const double n = static_cast<double>(method.samples);
  out.value = static_cast<double>(hits) / n;
  out.error = std::sqrt(out.value * (1.0 - out.value) / n);
  return out;
}

namespace {

struct Box {
  std::vector<double> lo, hi;
};

double box_union_volume(const std::vector<const Box*>& boxes, std::size_t k, std::size_t d) {
  if (boxes.empty()) return 0.0;
  if (k + 1 == d) {
    std::vector<std::pair<double, double>> iv;
    for (const Box* b : boxes) iv.emplace_back(b->lo[k], b->hi[k]);
    std::sort(iv.begin(), iv.end());
    double total = 0.0, cur_lo = iv.front().first, cur_hi = iv.front().second;
    for (const auto& [lo, hi] : iv) {
      if (lo > cur_hi) {
        total += cur_hi - cur_lo;
        cur_lo = lo;
        cur_hi = hi;
      } else {
        cur_hi = std::max(cur_hi, hi);
      }
    }
    return total + (cur_hi - cur_lo);
  }
  std::vector<double> cuts;
  for (const Box* b : boxes) {
    cuts.push_back(b->lo[k]);
    cuts.push_back(b->hi[k]);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double total = 0.0;
  std::vector<const Box*> active;
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
    active.clear();
    for (const Box* b : boxes)
      if (b->lo[k] <= cuts[j] && b->hi[k] >= cuts[j + 1]) active.push_back(b);
    total += (cuts[j + 1] - cuts[j]) * box_union_volume(active, k + 1, d);
  }
  return total;
}

}  // namespace

MeasureEstimate union_measure_boxes(const std::vector<Ball>& balls) {
  if (balls.empty()) return estimate(0.0, MeasureMethod::exact);
  const auto d = static_cast<std::size_t>(balls.front().center.size());
  std::vector<Box> boxes;
  for (const auto& b : balls) {
    if (b.radius <= 0.0) continue;
    // Split every side at the wrap point; a ball becomes up to 2^d boxes.
    std::vector<std::vector<std::pair<double, double>>> sides(d);
    for (std::size_t k = 0; k < d; ++k) {
      if (b.radius >= 0.5) {
        sides[k] = {{0.0, 1.0}};
        continue;
      }
      const double c = wrap01(b.center[static_cast<Eigen::Index>(k)]);
      const double lo = c - b.radius, hi = c + b.radius;
      if (lo < 0.0)
        sides[k] = {{lo + 1.0, 1.0}, {0.0, hi}};
      else if (hi > 1.0)
        sides[k] = {{lo, 1.0}, {0.0, hi - 1.0}};
      else
        sides[k] = {{lo, hi}};
    }
    std::function<void(std::size_t, Box&)> expand = [&](std::size_t k, Box& cur) {
      if (k == d) {
        boxes.push_back(cur);
        return;
      }
      for (const auto& [lo, hi] : sides[k]) {
        cur.lo[k] = lo;
        cur.hi[k] = hi;
        expand(k + 1, cur);
      }
    };
    Box cur{std::vector<double>(d), std::vector<double>(d)};
    expand(0, cur);
  }
  if (boxes.size() > 20000) throw BudgetExceeded("too many boxes for the exact sweep");
  std::vector<const Box*> ptrs;
  for (const auto& b : boxes) ptrs.push_back(&b);
  return estimate(std::min(1.0, box_union_volume(ptrs, 0, d)), MeasureMethod::exact);
}

bool disjointness_check(const std::vector<TorusPoint>& centers, double radius) {
  for (std::size_t i = 0; i < centers.size(); ++i)
    for (std::size_t j = i + 1; j < centers.size(); ++j)
      if (sup_distance(centers[i], centers[j]) < 2.0 * radius) return false;
  return true;
}

std::string balls_to_csv(const std::vector<Ball>& balls) {
  std::ostringstream out;
  const auto d = balls.empty() ? 0 : balls.front().center.size();
  out << "index";
  for (Eigen::Index k = 0; k < d; ++k) out << ",c" << k;
  out << ",radius\r\n";
  char buf[32];
  for (std::size_t i = 0; i < balls.size(); ++i) {
    out << i;
    for (Eigen::Index k = 0; k < d; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", balls[i].center[k]);
      out << ',' << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", balls[i].radius);
    out << ',' << buf << "\r\n";
  }
  return out.str();
}

}  // namespace shrinklab
