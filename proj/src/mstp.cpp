#include "shrinklab/mstp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "shrinklab/diophantine.hpp"
#include "shrinklab/random.hpp"

namespace shrinklab {

namespace {

// Rounding slack when comparing measures that are exact up to floating error.
constexpr double measure_slack = 1e-12;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double ball_measure(double r, int d) { return r >= 0.5 ? 1.0 : std::pow(2.0 * std::max(r, 0.0), d); }

Eigen::VectorXd to_eigen(const RealVector& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i].to_double();
  return out;
}

struct Measured {
  double first = 0.0;
  double all = 0.0;
  double error_first = 0.0;
  double error_all = 0.0;
  MeasureMethod method = MeasureMethod::exact;
};

std::vector<Ball> balls_of(const CoveringInstance& in, std::size_t count) {
  std::vector<Ball> out;
  for (std::size_t l = 0; l < count; ++l) out.push_back({in.points[l], in.radii[l]});
  return out;
}

Measured measure_exact(const CoveringInstance& in) {
  const std::size_t Q = in.Q;
  Measured m;
  if (in.d == 1) {
    std::vector<Arc> arcs;
    for (std::size_t l = 0; l < 2 * Q; ++l) arcs.push_back({in.points[l][0], in.radii[l]});
    m.first = union_measure_1d({arcs.begin(), arcs.begin() + static_cast<long>(Q)}).value;
    m.all = union_measure_1d(arcs).value;
  } else {
    m.first = union_measure_boxes(balls_of(in, Q)).value;
    m.all = union_measure_boxes(balls_of(in, 2 * Q)).value;
  }
  return m;
}

Measured measure_grid(const CoveringInstance& in, std::size_t resolution, std::uint64_t budget) {
  const GridMethod grid{resolution, budget};
  const auto first = union_measure_md(balls_of(in, in.Q), grid);
  const auto all = union_measure_md(balls_of(in, 2 * in.Q), grid);
  return {first.value, all.value, first.error, all.error, MeasureMethod::grid};
}

}  // namespace

double unit_ball_volume(int d) { return std::pow(2.0, d); }

std::string EpsilonResult::to_json() const {
  nlohmann::ordered_json doc{{"epsilon", value},
                             {"q_max", q_max},
                             {"argmin_Q", argmin_Q},
                             {"argmin_l", argmin_l},
                             {"min_distance", min_distance}};
  return doc.dump(2);
}

EpsilonResult epsilon_alpha(const RealVector& alpha, std::uint64_t q_max, std::uint64_t budget) {
  if (q_max < 1) throw Error("Q_max must be at least 1");
  if (alpha.empty()) throw Error("alpha must have at least one coordinate");
  if (2 * q_max - 1 > budget) throw BudgetExceeded("epsilon scan over " + std::to_string(2 * q_max - 1) + " multiples");
  const int d = static_cast<int>(alpha.size());
  EpsilonResult out;
  out.q_max = q_max;

  RealVector pos = alpha;
  double prefix_min = 1.0;
  std::uint64_t prefix_arg = 0;
  std::uint64_t l = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t Q = 1; Q <= q_max; ++Q) {
    while (l < 2 * Q - 1) {
      ++l;
      if (l > 1)
        for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = pos[i] + alpha[i];
      const double dist = dist_to_lattice(pos).lower_double();
      if (dist < prefix_min) {
        prefix_min = dist;
        prefix_arg = l;
      }
    }
    const double value = 0.5 * std::pow(static_cast<double>(Q), 1.0 / d) * prefix_min;
    if (value < best) {
      best = value;
      out.argmin_Q = Q;
      out.argmin_l = prefix_arg;
      out.min_distance = prefix_min;
    }
  }
  out.value = std::max(0.0, best * (1.0 - 1e-9));
  return out;
}

std::string CoveringInstance::to_json() const {
  nlohmann::ordered_json doc{{"d", d}, {"Q", Q}, {"epsilon", epsilon}};
  doc["points"] = nlohmann::ordered_json::array();
  for (const auto& p : points) doc["points"].push_back(std::vector<double>(p.data(), p.data() + p.size()));
  doc["radii"] = radii;
  return doc.dump();
}

std::string to_string(Alternative a) {
  switch (a) {
    case Alternative::first: return "i";
    case Alternative::second: return "ii";
    case Alternative::both: return "both";
    case Alternative::none: break;
  }
  return "none";
}

LemmaVerdict covering_lemma_check(const CoveringInstance& in, const LemmaOptions& options) {
  if (in.Q < 4) throw HypothesisViolated("the covering lemma needs Q >= 4");
  if (in.d < 1) throw HypothesisViolated("dimension must be positive");
  if (!(in.epsilon > 0.0)) throw HypothesisViolated("epsilon must be positive");
  if (in.points.size() != 2 * in.Q || in.radii.size() != 2 * in.Q)
    throw HypothesisViolated("expected 2Q points and radii");
  for (std::size_t l = 0; l < in.radii.size(); ++l) {
    if (in.radii[l] < 0.0) throw HypothesisViolated("negative radius");
    if (l > 0 && in.radii[l] > in.radii[l - 1]) throw HypothesisViolated("radii increase at index " + std::to_string(l));
    if (in.points[l].size() != in.d) throw HypothesisViolated("point dimension mismatch");
  }
  const double rho = in.epsilon / std::pow(static_cast<double>(in.Q), 1.0 / in.d);
  if (!disjointness_check(in.points, rho)) throw HypothesisViolated("balls B(y_l, eps/Q^{1/d}) are not disjoint");

  LemmaVerdict v;
  v.threshold = unit_ball_volume(in.d) * std::pow(in.epsilon / 10.0, in.d);
  v.gain = 0.5 * static_cast<double>(in.Q) * ball_measure(in.radii.back(), in.d);

  auto decide = [&](const Measured& m, double slack_first, double slack_second) {
    v.union_first = m.first;
    v.union_all = m.all;
    v.margin_first = m.first - v.threshold;
    v.margin_second = m.all - m.first - v.gain;
    v.method = m.method;
    const bool first = v.margin_first >= -slack_first;
    const bool second = v.margin_second >= -slack_second;
    v.alternative = first && second ? Alternative::both
                    : first         ? Alternative::first
                    : second        ? Alternative::second
                                    : Alternative::none;
  };

  const bool exact = in.d == 1 || (options.measure == LemmaMeasure::exact && (in.points.size() << in.d) <= 20000);
  if (exact) {
    decide(measure_exact(in), measure_slack, measure_slack);
    return v;
  }

  // Grid: a holding alternative counts only when its margin beats 3x the
  // grid error; refine until that happens or both certainly fail.
  for (std::size_t res = options.initial_resolution;; res *= 2, ++v.escalations) {
    if (std::pow(static_cast<double>(res), in.d) > static_cast<double>(options.cell_budget))
      throw ResolutionInsufficient("grid cannot separate the lemma alternatives within the cell budget");
    const Measured m = measure_grid(in, res, options.cell_budget);
    v.error = m.error_first + m.error_all;
    const double e1 = 3.0 * m.error_first, e2 = 3.0 * (m.error_first + m.error_all);
    decide(m, -e1, -e2);
    if (v.alternative != Alternative::none) return v;
    const bool first_fails = m.first - v.threshold < -e1;
    const bool second_fails = m.all - m.first - v.gain < -e2;
    if (first_fails && second_fails) return v;
  }
}

bool fifth_proportion_check(const CoveringInstance& in) {
  if (in.d != 1) return true;
  const double Q = static_cast<double>(in.Q);
  const double big = in.epsilon / Q;
  if (in.radii[in.Q - 1] >= in.epsilon / (10.0 * Q)) return true;
  // Length of [-a, a] intersected with the arc of radius b centred at delta.
  auto overlap = [](double a, double b, double delta) {
    if (a >= 0.5) return 2.0 * b;
    double total = 0.0;
    for (double shift : {0.0, -1.0, 1.0}) {
      const double c = delta + shift;
      total += std::max(0.0, std::min(a, c + b) - std::max(-a, c - b));
    }
    return std::min(total, 2.0 * b);
  };
  for (std::size_t lp = in.Q; lp < 2 * in.Q; ++lp)
    for (std::size_t l = 0; l < in.Q; ++l) {
      const double delta = circle_distance(in.points[l][0], in.points[lp][0]);
      if (delta >= in.radii[l] + in.radii[lp]) continue;
      if (!(overlap(in.radii[l], big, delta) > 0.2 * 2.0 * big)) return false;
    }
  return true;
}

std::string CampaignResult::to_csv() const {
  std::ostringstream out;
  out << "instance_id,Q,d,alternative,margin_i,margin_ii\r\n";
  for (const auto& r : rows)
    out << r.instance_id << ',' << r.Q << ',' << r.d << ',' << to_string(r.verdict.alternative) << ','
        << fmt(r.verdict.margin_first) << ',' << fmt(r.verdict.margin_second) << "\r\n";
  return out.str();
}

CoveringInstance random_covering_instance(int d, std::uint64_t Q, std::uint64_t seed, std::uint64_t instance_id) {
  auto rng = chunk_stream(seed, instance_id);
  auto u = [&] { return uniform01(rng); };
  auto log_uniform = [&](double lo, double hi) { return lo * std::pow(hi / lo, u()); };
  const auto n = static_cast<std::size_t>(2 * Q);
  const double qroot = std::pow(static_cast<double>(Q), 1.0 / d);

  CoveringInstance in;
  in.d = d;
  in.Q = Q;
  in.points.assign(n, TorusPoint::Zero(d));

  if (u() < 0.5) {
    // Orbit of a random rotation with the largest admissible epsilon.
    TorusPoint alpha(d), x0(d);
    for (int i = 0; i < d; ++i) {
      alpha[i] = u();
      x0[i] = u();
    }
    double min_dist = 1.0;
    for (std::size_t l = 1; l < n; ++l) {
      const TorusPoint p = translate(TorusPoint::Zero(d), alpha, static_cast<long long>(l));
      double dist = 0.0;
      for (int i = 0; i < d; ++i) dist = std::max(dist, std::min(p[i], 1.0 - p[i]));
      min_dist = std::min(min_dist, dist);
    }
    for (std::size_t l = 0; l < n; ++l) in.points[l] = translate(x0, alpha, -static_cast<long long>(l));
    in.epsilon = 0.5 * qroot * min_dist * (1.0 - 1e-9) * (0.5 + 0.5 * u());
  }
  if (in.epsilon <= 0.0) {
    // Random sequential packing of the eps/Q^{1/d} balls.
    double eps = log_uniform(0.02, 0.4);
    for (;;) {
      const double rho = eps / qroot;
      bool placed_all = true;
      for (std::size_t l = 0; l < n && placed_all; ++l) {
        bool placed = false;
        for (int attempt = 0; attempt < 2000 && !placed; ++attempt) {
          for (int i = 0; i < d; ++i) in.points[l][i] = u();
          placed = true;
          for (std::size_t m = 0; m < l && placed; ++m)
            placed = sup_distance(in.points[l], in.points[m]) >= 2.0 * rho;
        }
        placed_all = placed;
      }
      if (placed_all) break;
      eps *= 0.5;
    }
    in.epsilon = eps;
  }

  const double rho = in.epsilon / qroot;
  in.radii.assign(n, 0.0);
  switch (rng() % 4) {
    case 0: {
      const double scale = log_uniform(1e-4 * rho, 3.0 * rho);
      for (auto& r : in.radii) r = scale * u();
      break;
    }
    case 1: {
      const double pivot = rho / 10.0;
      for (auto& r : in.radii) r = pivot * log_uniform(0.5, 2.0);
      break;
    }
    case 2: {
      const std::size_t k = rng() % (n + 1);
      const bool zeros = u() < 0.3;
      for (std::size_t l = 0; l < n; ++l)
        in.radii[l] = l < k ? rho * log_uniform(0.5, 4.0) : (zeros ? 0.0 : rho * log_uniform(1e-4, 0.05));
      break;
    }
    default: {
      const double c = log_uniform(1e-3, 1.0) * rho * qroot;
      for (std::size_t l = 0; l < n; ++l) in.radii[l] = c / std::pow(static_cast<double>(l + 1), 1.0 / d);
      break;
    }
  }
  std::sort(in.radii.begin(), in.radii.end(), std::greater<>());
  return in;
}

CampaignResult lemma_campaign(const std::vector<int>& dims, const std::vector<std::uint64_t>& Qs,
                              std::uint64_t instances_per_cell, std::uint64_t seed, const LemmaOptions& options) {
  CampaignResult out;
  std::uint64_t id = 0;
  for (int d : dims)
    for (auto Q : Qs)
      for (std::uint64_t i = 0; i < instances_per_cell; ++i, ++id) {
        const auto instance = random_covering_instance(d, Q, seed, id);
        CampaignRow row{id, Q, d, covering_lemma_check(instance, options)};
        if (row.verdict.falsified()) {
          ++out.falsifications;
          out.falsified_instances.push_back(instance.to_json());
        }
        if (row.verdict.method == MeasureMethod::exact) ++out.exact_decisions;
        out.escalations += static_cast<std::uint64_t>(row.verdict.escalations);
        if (!fifth_proportion_check(instance)) ++out.proportion_failures;
        out.rows.push_back(std::move(row));
      }
  return out;
}

std::string MstpReport::to_csv() const {
  std::ostringstream out;
  out << "n,horizon,union_measure,recurrence_bound,eta,reached_eta,schedule_mass\r\n";
  for (const auto& r : rows)
    out << r.n << ',' << r.horizon << ',' << fmt(r.union_measure) << ',' << fmt(r.recurrence_bound) << ','
        << fmt(eta) << ',' << (r.reached_eta ? 1 : 0) << ',' << fmt(r.schedule_mass) << "\r\n";
  return out.str();
}

MstpReport mstp_lower_bound(const RealVector& alpha, const TorusPoint& x0, const std::vector<double>& radii,
                            int n_doublings, std::optional<double> epsilon) {
  if (n_doublings < 0 || n_doublings > 40) throw Error("N_doublings must lie in [0, 40]");
  const int d = static_cast<int>(alpha.size());
  if (d < 1 || x0.size() != d) throw Error("alpha and x_0 dimensions differ");
  const std::uint64_t total = std::uint64_t{2} << n_doublings;
  if (radii.size() < total) throw Error("schedule shorter than 2^{N+1}");
  for (std::size_t l = 0; l < total; ++l) {
    if (radii[l] < 0.0) throw NonMonotoneSchedule("negative radius at index " + std::to_string(l));
    if (l > 0 && radii[l] > radii[l - 1]) throw NonMonotoneSchedule("radius increases at index " + std::to_string(l));
  }

  MstpReport report;
  report.d = d;
  report.epsilon = epsilon ? *epsilon : epsilon_alpha(alpha, std::uint64_t{1} << n_doublings).value;
  if (!(report.epsilon > 0.0)) throw EpsilonZero("eps(alpha) vanishes at this horizon");
  report.eta = unit_ball_volume(d) * std::pow(report.epsilon / 10.0, d);

  const Eigen::VectorXd alpha_d = to_eigen(alpha);
  std::vector<TorusPoint> centers(total);
  for (std::uint64_t l = 0; l < total; ++l) centers[l] = translate(x0, alpha_d, -static_cast<long long>(l));

  auto union_upto = [&](std::uint64_t horizon) {
    if (d == 1) {
      std::vector<Arc> arcs;
      for (std::uint64_t l = 0; l < horizon; ++l) arcs.push_back({centers[l][0], radii[l]});
      return union_measure_1d(arcs).value;
    }
    std::vector<Ball> balls;
    for (std::uint64_t l = 0; l < horizon; ++l) balls.push_back({centers[l], radii[l]});
    if ((horizon << d) <= 2000) return union_measure_boxes(balls).value;
    return union_measure_md(balls, GridMethod{1024, std::uint64_t{1} << 26}).value;
  };

  double previous = union_upto(1);  // horizon 2^0
  bool first_seen = false;
  double mass = 0.0;
  std::uint64_t counted = 0;
  for (int n = 0; n <= n_doublings; ++n) {
    DoublingRow row;
    row.n = n;
    row.horizon = std::uint64_t{2} << n;
    row.union_measure = union_upto(row.horizon);
    for (int p = 2; p <= n; ++p)
      row.recurrence_bound += std::ldexp(1.0, p - 1) * ball_measure(radii[(std::size_t{2} << p) - 1], d);
    // The lemma at Q = 2^n (n >= 2) takes its first alternative when the
    // union up to 2^n already reaches eta.
    if (n >= 2 && previous >= report.eta) first_seen = true;
    row.first_alternative_so_far = first_seen;
    row.reached_eta = row.union_measure >= report.eta;
    if (row.reached_eta && !report.reached_at) report.reached_at = n;
    if (row.union_measure + measure_slack < previous) report.monotone_unions = false;
    if (!first_seen && row.union_measure + measure_slack < row.recurrence_bound) report.recurrence_respected = false;
    for (; counted < row.horizon; ++counted) mass += std::pow(radii[counted], d);
    row.schedule_mass = mass;
    previous = row.union_measure;
    report.rows.push_back(row);
  }

  // Cauchy condensation terms 2^p r_{2^{p+1}-1}^d: a convergent schedule
  // makes them decay, a divergent monotone one keeps them bounded below.
  double peak = 0.0, last = 0.0;
  for (int p = 0; p <= n_doublings; ++p) {
    last = std::ldexp(1.0, p) * std::pow(radii[(std::size_t{2} << p) - 1], d);
    peak = std::max(peak, last);
  }
  report.looks_divergent = n_doublings >= 3 && peak > 0.0 && last >= 0.25 * peak;
  return report;
}

std::vector<double> harmonic_radii(double c, int d, std::uint64_t count) {
  std::vector<double> out(count);
  for (std::uint64_t l = 0; l < count; ++l) out[l] = c / std::pow(static_cast<double>(l + 1), 1.0 / d);
  return out;
}

}  // namespace shrinklab
