#include "shrinklab/flow.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <numeric>
#include <sstream>

namespace shrinklab {

namespace {

constexpr double two_pi = 6.283185307179586476925286766559;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class V>
V reduce_all(V y) {
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = wrap01(y[i]);
  return y;
}

double torus_sup(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  double out = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) out = std::max(out, circle_distance(a[i], b[i]));
  return out;
}

BigInt floor_of_upper(const RealScalar& x) {
  const BigRational u = x.upper().to_rational();
  BigInt out;
  mpz_fdiv_q(out.get_mpz_t(), u.get_num().get_mpz_t(), u.get_den().get_mpz_t());
  return out;
}

BigInt ipow(const BigInt& base, unsigned long e) {
  BigInt out;
  mpz_pow_ui(out.get_mpz_t(), base.get_mpz_t(), e);
  return out;
}

// Chi-square of observed counts against expected masses.
double chi_square(const std::vector<std::uint64_t>& counts, const std::vector<double>& masses, double n) {
  double chi2 = 0.0;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    const double expected = masses[b] * n;
    chi2 += (static_cast<double>(counts[b]) - expected) * (static_cast<double>(counts[b]) - expected) / expected;
  }
  return chi2;
}

// Calls fn(point) over the midpoint grid with `per_axis` points per axis.
template <class Fn>
void for_each_grid_point(int dims, std::size_t per_axis, Fn&& fn) {
  Eigen::VectorXd x(dims);
  std::vector<std::size_t> idx(static_cast<std::size_t>(dims), 0);
  const double h = 1.0 / static_cast<double>(per_axis);
  for (;;) {
    for (int i = 0; i < dims; ++i) x[i] = (static_cast<double>(idx[static_cast<std::size_t>(i)]) + 0.5) * h;
    fn(x, idx);
    int k = 0;
    while (k < dims && ++idx[static_cast<std::size_t>(k)] == per_axis) idx[static_cast<std::size_t>(k++)] = 0;
    if (k == dims) return;
  }
}

}  // namespace

double FlowSpec::phi(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  double out = 0.0;
  for (const auto& t : terms) {
    double arg = 0.0;
    for (std::size_t i = 0; i < t.k.size(); ++i) arg += t.k[i] * x[static_cast<Eigen::Index>(i)];
    arg *= two_pi;
    out += t.cos_coeff * std::cos(arg) + t.sin_coeff * std::sin(arg);
  }
  return out;
}

OdeState FlowSpec::velocity(const OdeState& x) const {
  OdeState v(d + 1);
  v.head(d) = alpha_float;
  v[d] = 1.0;
  return phi(x) * v;
}

std::string FlowSpec::to_json(int alpha_digits) const {
  nlohmann::ordered_json doc;
  doc["d"] = d;
  doc["alpha_digits"] = nlohmann::ordered_json::array();
  for (const auto& a : alpha) doc["alpha_digits"].push_back(a.midpoint().to_string(alpha_digits));
  doc["fourier"] = nlohmann::ordered_json::array();
  for (const auto& t : terms) doc["fourier"].push_back({{"k", t.k}, {"cos_coeff", t.cos_coeff}, {"sin_coeff", t.sin_coeff}});
  doc["phi_min"] = phi_min;
  doc["phi_max"] = phi_max;
  return doc.dump(2);
}

FlowSpec make_flow_spec(const RealVector& alpha, std::vector<FourierTerm> terms) {
  if (alpha.empty()) throw ConfigInvalid("flow: alpha must have at least one coordinate");
  FlowSpec spec;
  spec.d = static_cast<int>(alpha.size());
  spec.alpha = alpha;
  spec.alpha_float.resize(spec.d);
  for (int i = 0; i < spec.d; ++i) spec.alpha_float[i] = alpha[static_cast<std::size_t>(i)].to_double();
  double constant = 0.0, amplitude = 0.0;
  for (const auto& t : terms) {
    if (static_cast<int>(t.k.size()) != spec.d + 1)
      throw ConfigInvalid("flow: Fourier mode needs " + std::to_string(spec.d + 1) + " integer entries");
    if (!std::isfinite(t.cos_coeff) || !std::isfinite(t.sin_coeff)) throw ConfigInvalid("flow: non-finite coefficient");
    const bool zero = std::all_of(t.k.begin(), t.k.end(), [](int k) { return k == 0; });
    if (zero)
      constant += t.cos_coeff;
    else
      amplitude += std::hypot(t.cos_coeff, t.sin_coeff);
  }
  // Widen by a few ulps so that rounding in phi never escapes the bounds.
  spec.phi_min = (constant - amplitude) * (1 - 1e-14);
  spec.phi_max = (constant + amplitude) * (1 + 1e-14);
  if (!(spec.phi_min > 0.0)) throw ConfigInvalid("flow: positivity of phi is not certified by its coefficients");
  spec.terms = std::move(terms);
  return spec;
}

FlowSpec flow_spec_from_json(const std::string& text) {
  const auto doc = nlohmann::json::parse(text);
  RealVector alpha;
  for (const auto& a : doc.at("alpha_digits")) alpha.push_back(RealScalar::parse(a.get<std::string>()));
  std::vector<FourierTerm> terms;
  for (const auto& t : doc.at("fourier"))
    terms.push_back({t.at("k").get<std::vector<int>>(), t.value("cos_coeff", 0.0), t.value("sin_coeff", 0.0)});
  auto spec = make_flow_spec(alpha, std::move(terms));
  if (doc.contains("d") && doc["d"].get<int>() != spec.d) throw ConfigInvalid("flow: d disagrees with alpha");
  return spec;
}

Eigen::VectorXd flow_integrate(const FlowSpec& spec, const Eigen::VectorXd& x, double t, double tol) {
  if (x.size() != spec.d + 1) throw Error("flow: point must have d + 1 coordinates");
  OdeOptions options;
  options.tolerance = tol;
  DormandPrince solver([&spec](const OdeState& y) { return spec.velocity(y); }, options);
  return reduce_all(Eigen::VectorXd(solver.integrate(x, t)));
}

double return_time_quadrature(const FlowSpec& spec, const Eigen::VectorXd& x_section) {
  Eigen::VectorXd point(spec.d + 1);
  auto integrand = [&](double s) {
    point.head(spec.d) = x_section + s * spec.alpha_float;
    point[spec.d] = s;
    return 1.0 / spec.phi(point);
  };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, 1.0, 15, 1e-14);
}

SectionData return_map(const FlowSpec& spec, const Eigen::VectorXd& x_section, double tol) {
  if (x_section.size() != spec.d) throw Error("flow: section point must have d coordinates");
  OdeOptions options;
  options.tolerance = tol;
  DormandPrince solver([&spec](const OdeState& y) { return spec.velocity(y); }, options);
  OdeState y(spec.d + 1);
  y.head(spec.d) = x_section;
  y[spec.d] = 0.0;

  SectionData out;
  out.start = x_section;
  out.time = solver.advance_to_level(y, spec.d, 1.0, 2.0 * spec.return_time_upper() + 1.0);
  out.image = reduce_all(Eigen::VectorXd(y.head(spec.d)));
  out.quadrature_time = return_time_quadrature(spec, x_section);
  out.image_error = torus_sup(out.image, reduce_all(Eigen::VectorXd(x_section + spec.alpha_float)));
  out.time_error = std::abs(out.time - out.quadrature_time);
  const double allowed = 1e3 * tol + 1e-9;
  if (out.image_error > allowed) throw CrossingFailure("return image differs from the translation by alpha");
  if (out.time_error > allowed) throw CrossingFailure("return time differs from the fibre integral");
  return out;
}

const Normalization& phi_normalization(const FlowSpec& spec) {
  if (spec.normalization_cache) return *spec.normalization_cache;
  const int dims = spec.d + 1;
  const std::size_t fine = dims <= 2 ? 128 : dims == 3 ? 48 : 16;
  auto mean_inverse = [&](std::size_t per_axis) {
    long double sum = 0.0L;
    std::size_t count = 0;
    for_each_grid_point(dims, per_axis, [&](const Eigen::VectorXd& x, const std::vector<std::size_t>&) {
      sum += 1.0L / spec.phi(x);
      ++count;
    });
    return static_cast<double>(sum / static_cast<long double>(count));
  };
  Normalization n;
  n.points_per_axis = fine;
  n.value = mean_inverse(fine);
  n.error = std::abs(n.value - mean_inverse(fine / 2));
  spec.normalization_cache = n;
  return *spec.normalization_cache;
}

double mu_phi_weight(const FlowSpec& spec, const Eigen::VectorXd& x) {
  return 1.0 / (spec.phi(x) * phi_normalization(spec).value);
}

Eigen::VectorXd sample_mu_phi(const FlowSpec& spec, std::mt19937_64& rng) {
  Eigen::VectorXd x(spec.d + 1);
  for (;;) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = uniform01(rng);
    if (uniform01(rng) * spec.phi(x) < spec.phi_min) return x;
  }
}

InvarianceReport time1_invariance_check(const FlowSpec& spec, std::uint64_t samples, std::uint64_t seed,
                                        std::size_t bins, double tol) {
  if (bins < 2 || samples < 1) throw Error("invariance check needs at least two bins and one sample");
  const int dims = spec.d + 1;
  const std::vector<Eigen::Index> coords = {0, spec.d};

  // Exact marginal bin masses on a grid refining the bins.
  const std::size_t per_axis = bins * (dims <= 2 ? 16 : 6);
  std::vector<std::vector<double>> masses(coords.size(), std::vector<double>(bins, 0.0));
  double total = 0.0;
  for_each_grid_point(dims, per_axis, [&](const Eigen::VectorXd& x, const std::vector<std::size_t>& idx) {
    const double w = 1.0 / spec.phi(x);
    total += w;
    for (std::size_t c = 0; c < coords.size(); ++c)
      masses[c][idx[static_cast<std::size_t>(coords[c])] * bins / per_axis] += w;
  });
  for (auto& m : masses)
    for (auto& v : m) v /= total;

  std::vector<std::vector<std::uint64_t>> before(coords.size(), std::vector<std::uint64_t>(bins, 0));
  auto after = before;
  auto bin_of = [&](double v) { return std::min(bins - 1, static_cast<std::size_t>(wrap01(v) * static_cast<double>(bins))); };
  for (std::uint64_t chunk = 0; chunk * mc_chunk_size < samples; ++chunk) {
    auto rng = chunk_stream(seed, chunk);
    const std::uint64_t end = std::min(samples, (chunk + 1) * mc_chunk_size);
    for (std::uint64_t s = chunk * mc_chunk_size; s < end; ++s) {
      const Eigen::VectorXd x = sample_mu_phi(spec, rng);
      const Eigen::VectorXd y = flow_integrate(spec, x, 1.0, tol);
      for (std::size_t c = 0; c < coords.size(); ++c) {
        ++before[c][bin_of(x[coords[c]])];
        ++after[c][bin_of(y[coords[c]])];
      }
    }
  }
  InvarianceReport report;
  report.samples = samples;
  report.bins = bins;
  const double n = static_cast<double>(samples);
  for (std::size_t c = 0; c < coords.size(); ++c) {
    report.chi2 = std::max(report.chi2, chi_square(after[c], masses[c], n));
    report.sample_chi2 = std::max(report.sample_chi2, chi_square(before[c], masses[c], n));
  }
  const double dof = static_cast<double>(bins - 1);
  report.threshold = dof + 3.0 * std::sqrt(2.0 * dof);
  report.within_three_sigma = report.chi2 <= report.threshold;
  return report;
}

// ------------------------------------------------------------ no-MSTP run

std::string NostpReport::to_csv() const {
  std::ostringstream out;
  out << "n,Q_n,U_n,R_n,block_mass,measure_bound,regime,simulated_fraction\r\n";
  for (const auto& r : rows) {
    out << r.n << ',' << r.Q.get_str() << ',' << r.U.get_str() << ',' << fmt(r.R) << ',' << fmt(r.block_mass) << ','
        << fmt(r.measure_bound) << ',' << (r.simulated_fraction ? "simulable" : "faithful") << ','
        << (r.simulated_fraction ? fmt(*r.simulated_fraction) : "") << "\r\n";
  }
  return out.str();
}

NostpReport nostp_experiment(const FlowSpec& spec, const ApproxCertificate& cert, long n_max,
                             const Eigen::VectorXd& center, const NostpOptions& options) {
  if (cert.tag != "eq7") throw CertificateInvalid("the flow experiment needs an eq7 certificate, got '" + cert.tag + "'");
  if (cert.d != spec.d) throw CertificateInvalid("certificate dimension differs from the flow");
  if (n_max < 1 || n_max > static_cast<long>(cert.size())) throw CertificateInvalid("n_max outside certificate range");
  if (center.size() != spec.d + 1) throw Error("center must lie in T^{d+1}");
  require_valid(spec.alpha, cert);
  if (options.direct_simulation && options.regime == Regime::faithful)
    throw RegimeInfeasible("direct time-1 simulation is not available at faithful constants");

  const int d = spec.d;
  const auto ud = static_cast<unsigned long>(d);
  const long prec = spec.alpha.front().precision();
  NostpReport report;
  report.d = d;
  report.phi_min = spec.phi_min;
  report.phi_max = spec.phi_max;

  RealScalar alpha_norm(0L, prec);
  for (const auto& a : spec.alpha) alpha_norm = max(alpha_norm, abs(a));
  const RealScalar phi_max(BigRational(spec.phi_max), prec);
  const double density_ratio = spec.phi_max / spec.phi_min;

  BigInt previous = 1;
  for (long n = 1; n <= n_max; ++n) {
    const auto& entry = cert.at(n);
    NostpRow row;
    row.n = n;
    row.Q = entry.Q;
    const BigInt big_n(n);
    // U_n = n^{2d+2} floor(Q^{(d+1)/d}).
    BigInt q_power;
    mpz_root(q_power.get_mpz_t(), ipow(entry.Q, ud + 1).get_mpz_t(), ud);
    row.U = ipow(big_n, 2 * ud + 2) * q_power;
    const RealScalar q_root = root(RealScalar(entry.Q, prec), ud);
    const RealScalar R = RealScalar(1L, prec) / (RealScalar(n * n, prec) * q_root);
    row.R = R.to_double();
    const RealScalar mass = RealScalar(row.U - previous, prec) * pow(R, ud + 1);
    row.block_mass = mass.to_double();
    row.block_mass_certified = certainly_le(RealScalar(BigRational(1, 2), prec), mass);
    if (!row.block_mass_certified)
      throw VerificationFailure("block-mass", "(U_n - U_{n-1}) R_n^{d+1} >= 1/2 fails at n = " + std::to_string(n));

    // Section crossings within flow time U_n from a ball of radius R_n:
    // heights advance by at most phi_max U_n over a window of width 2 R_n.
    row.crossings = floor_of_upper(RealScalar(row.U, prec) * phi_max + RealScalar(2L, prec) * R) + 1;
    row.wraps = std::max(BigInt(1), BigInt(row.crossings / entry.Q));
    // Projecting the ball to the section moves it by at most |alpha| R_n; each
    // wrap by Q_n moves the orbit by at most b_n >= ||Q_n alpha||.
    const RealScalar rho = R * (RealScalar(1L, prec) + alpha_norm) + RealScalar(row.wraps, prec) * RealScalar(entry.bound, prec);
    row.rho = rho.upper_double();
    const RealScalar haar = RealScalar(entry.Q, prec) * pow(RealScalar(2L, prec) * rho, ud);
    row.haar_bound = std::min(1.0, haar.upper_double());
    row.nominal_bound = (RealScalar(entry.Q + 1, prec) * pow(RealScalar(4L, prec) * R, ud)).upper_double();
    row.measure_bound = std::min(1.0, density_ratio * row.haar_bound * (1 + 1e-15));
    report.rows.push_back(std::move(row));
    previous = report.rows.back().U;
  }

  if (options.direct_simulation) {
    // Blocks short enough to follow the time-1 map directly.
    std::vector<std::size_t> blocks;
    std::uint64_t horizon = 0;
    for (std::size_t i = 0; i < report.rows.size(); ++i)
      if (report.rows[i].U <= BigInt(static_cast<long>(options.max_simulated_time))) {
        blocks.push_back(i);
        horizon = report.rows[i].U.get_ui();
      }
    if (blocks.empty()) throw RegimeInfeasible("no block is short enough for direct simulation");

    OdeOptions ode;
    ode.tolerance = options.tol;
    DormandPrince solver([&spec](const OdeState& y) { return spec.velocity(y); }, ode);
    std::vector<std::uint64_t> hits(report.rows.size(), 0);
    std::vector<std::uint64_t> starts(report.rows.size());
    for (std::size_t i = 0; i < report.rows.size(); ++i)
      starts[i] = i == 0 ? 1 : report.rows[i - 1].U.get_ui();

    for (std::uint64_t chunk = 0; chunk * mc_chunk_size < options.samples; ++chunk) {
      auto rng = chunk_stream(options.seed, chunk);
      const std::uint64_t end = std::min(options.samples, (chunk + 1) * mc_chunk_size);
      for (std::uint64_t s = chunk * mc_chunk_size; s < end; ++s) {
        const Eigen::VectorXd x = sample_mu_phi(spec, rng);
        std::vector<bool> hit(report.rows.size(), false);
        OdeState y = x;
        for (std::uint64_t l = 0; l < horizon; ++l) {
          for (std::size_t i : blocks) {
            const auto& row = report.rows[i];
            if (!hit[i] && l >= starts[i] && BigInt(static_cast<unsigned long>(l)) < row.U &&
                torus_sup(y, center) < row.R)
              hit[i] = true;
          }
          y = reduce_all(solver.integrate(y, 1.0));
        }
        for (std::size_t i : blocks) {
          if (!hit[i]) continue;
          ++hits[i];
          auto& row = report.rows[i];
          // The hit must come from the section set U_{j<Q_n} B(c - j alpha, rho_n).
          if (row.Q > 1'000'000) continue;
          OdeState z = x;
          const double level = center[d] >= x[d] ? center[d] : center[d] + 1.0;
          solver.advance_to_level(z, d, level, 2.0 * spec.return_time_upper() + 1.0);
          Eigen::VectorXd section = reduce_all(Eigen::VectorXd(z.head(d)));
          const Eigen::VectorXd c = center.head(d);
          double best = 1.0;
          const long q = row.Q.get_si();
          for (long j = 0; j < q && best >= row.rho; ++j) {
            best = std::min(best, torus_sup(section, c));
            section = reduce_all(Eigen::VectorXd(section + spec.alpha_float));
          }
          if (!(best < row.rho + 1e-9))
            throw VerificationFailure("containment", "a simulated hit escapes the section set at n = " +
                                                         std::to_string(row.n));
          ++row.containment_checked;
        }
      }
    }
    const double n = static_cast<double>(options.samples);
    for (std::size_t i : blocks) {
      const double f = static_cast<double>(hits[i]) / n;
      report.rows[i].simulated_fraction = f;
      report.rows[i].simulated_error = std::sqrt(f * (1 - f) / n);
    }
  }

  // Least squares of log bound against log n over unsaturated blocks.
  std::vector<double> xs, ys;
  for (const auto& r : report.rows)
    if (r.measure_bound < 1.0) {
      xs.push_back(std::log(static_cast<double>(r.n)));
      ys.push_back(std::log(r.measure_bound));
    }
  if (xs.size() >= 2) {
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    report.fitted_exponent = -sxy / sxx;
  }
  for (std::size_t i = 1; i < report.rows.size(); ++i)
    report.consecutive_ratios.push_back(report.rows[i].measure_bound / report.rows[i - 1].measure_bound);
  return report;
}

}  // namespace shrinklab
