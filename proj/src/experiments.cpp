#include "shrinklab/experiments.hpp"

#include <gmp.h>
#include <mpfr.h>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "shrinklab/errors.hpp"
#include "shrinklab/flow.hpp"
#include "shrinklab/mstp.hpp"
#include "shrinklab/rotation.hpp"

#ifndef SHRINKLAB_VERSION
#define SHRINKLAB_VERSION "0.0.0"
#endif

namespace shrinklab {

using nlohmann::json;

namespace {

constexpr std::int64_t max_precision_bits = 1 << 20;
constexpr int max_doublings = 22;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string big(const BigInt& v) { return v.get_str(); }

bool non_negative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

const std::vector<std::pair<ExperimentKind, std::string>>& kind_names() {
  static const std::vector<std::pair<ExperimentKind, std::string>> names = {
      {ExperimentKind::approx, "approx"},
      {ExperimentKind::empty_limsup, "empty-limsup"},
      {ExperimentKind::non_bc, "non-bc"},
      {ExperimentKind::mstp_bound, "mstp-bound"},
      {ExperimentKind::lemma_campaign, "lemma-campaign"},
      {ExperimentKind::flow_nostp, "flow-nostp"},
      {ExperimentKind::ergodic_demo, "ergodic-demo"},
  };
  return names;
}

// ------------------------------------------------------------- validation

// Field-by-field checks on one JSON object; every problem becomes a
// "<path>.<key>: <reason>" line.
class Fields {
 public:
  Fields(const json& obj, std::string prefix, std::vector<std::string>& out)
      : obj_(obj), prefix_(std::move(prefix)), out_(out) {}

  const json* find(const std::string& key) {
    known_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void fail(const std::string& key, const std::string& reason) { out_.push_back(prefix_ + key + ": " + reason); }

  std::string path(const std::string& key) const { return prefix_ + key; }

  const json* present(const std::string& key, bool required) {
    const json* v = find(key);
    if (!v && required) fail(key, "is required");
    return v;
  }

  std::optional<std::int64_t> integer(const std::string& key, bool required, std::int64_t lo, std::int64_t hi) {
    const json* v = present(key, required);
    if (!v) return std::nullopt;
    const bool ok = v->is_number_integer() &&
                    (v->is_number_unsigned() ? v->get<std::uint64_t>() <= static_cast<std::uint64_t>(hi)
                                             : v->get<std::int64_t>() >= lo && v->get<std::int64_t>() <= hi);
    if (!ok || v->get<std::int64_t>() < lo) {
      fail(key, "must be an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      return std::nullopt;
    }
    return v->get<std::int64_t>();
  }

  std::optional<double> number(const std::string& key, bool required, double lo, double hi, bool open_lo = false) {
    const json* v = present(key, required);
    if (!v) return std::nullopt;
    if (!v->is_number()) {
      fail(key, "must be a number");
      return std::nullopt;
    }
    const double x = v->get<double>();
    if (!(open_lo ? x > lo : x >= lo) || !(x <= hi)) {
      fail(key, std::string("must lie in ") + (open_lo ? "(" : "[") + fmt(lo) + ", " + fmt(hi) + "]");
      return std::nullopt;
    }
    return x;
  }

  std::optional<bool> boolean(const std::string& key, bool required) {
    const json* v = present(key, required);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) {
      fail(key, "must be true or false");
      return std::nullopt;
    }
    return v->get<bool>();
  }

  std::optional<std::string> choice(const std::string& key, bool required, const std::vector<std::string>& options) {
    const json* v = present(key, required);
    if (!v) return std::nullopt;
    if (v->is_string())
      for (const auto& o : options)
        if (v->get<std::string>() == o) return o;
    std::string list;
    for (const auto& o : options) list += (list.empty() ? "" : ", ") + o;
    fail(key, "must be one of " + list);
    return std::nullopt;
  }

  const json* typed(const std::string& key, bool required, json::value_t type, const char* noun) {
    const json* v = present(key, required);
    if (v && v->type() != type) {
      fail(key, std::string("must be ") + noun);
      return nullptr;
    }
    return v;
  }

  void reject_unknown() {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!known_.count(it.key())) fail(it.key(), "unknown field");
  }

 private:
  const json& obj_;
  std::string prefix_;
  std::vector<std::string>& out_;
  std::set<std::string> known_;
};

// Dimension of a valid alpha specification.
std::optional<int> check_alpha(Fields& f, const std::string& key, bool required, long precision) {
  const json* v = f.present(key, required);
  if (!v) return std::nullopt;
  try {
    return static_cast<int>(parse_alpha(*v, precision).size());
  } catch (const std::exception& e) {
    f.fail(key, e.what());
    return std::nullopt;
  }
}

struct CertificateShape {
  int d = 1;
  std::string law;
  long n_max = 1;
};

std::optional<CertificateShape> check_certificate(Fields& parent, const std::string& key,
                                                  std::vector<std::string>& out) {
  const json* v = parent.typed(key, true, json::value_t::object, "an object");
  if (!v) return std::nullopt;
  Fields f(*v, parent.path(key) + ".", out);
  const auto construction = f.choice("construction", false, {"nested", "cf"});
  const auto d = f.integer("d", true, 1, 4);
  const auto law = f.choice("law", true, {"eq3", "eq7"});
  const auto n_max = f.integer("n_max", true, 1, 8);
  f.reject_unknown();
  if (construction && *construction == "cf" && d && *d != 1) f.fail("construction", "cf requires d = 1");
  if (!d || !law || !n_max) return std::nullopt;
  return CertificateShape{static_cast<int>(*d), *law, static_cast<long>(*n_max)};
}

std::optional<long> check_n_max(Fields& f, const std::optional<CertificateShape>& cert) {
  const auto n = f.integer("n_max", false, 1, 8);
  if (n && cert && *n > cert->n_max) {
    f.fail("n_max", "exceeds certificate.n_max");
    return std::nullopt;
  }
  if (n) return *n;
  if (cert) return cert->n_max;
  return std::nullopt;
}

void check_point(Fields& f, const std::string& key, std::optional<int> dim) {
  const json* v = f.typed(key, false, json::value_t::array, "an array of numbers");
  if (!v) return;
  for (const auto& x : *v)
    if (!x.is_number() || !std::isfinite(x.get<double>())) {
      f.fail(key, "must be an array of numbers");
      return;
    }
  if (dim && static_cast<int>(v->size()) != *dim) f.fail(key, "must have " + std::to_string(*dim) + " coordinates");
}

void check_fourier(Fields& f, const std::string& key, std::optional<int> d, std::vector<std::string>& out) {
  const json* v = f.typed(key, true, json::value_t::array, "an array of terms");
  if (!v) return;
  if (v->empty()) {
    f.fail(key, "must contain at least the constant term");
    return;
  }
  double constant = 0.0, amplitude = 0.0;
  bool complete = true;
  for (std::size_t i = 0; i < v->size(); ++i) {
    const auto& term = (*v)[i];
    const std::string where = f.path(key) + "[" + std::to_string(i) + "].";
    if (!term.is_object()) {
      out.push_back(f.path(key) + "[" + std::to_string(i) + "]: must be an object");
      complete = false;
      continue;
    }
    Fields t(term, where, out);
    const json* k = t.typed("k", true, json::value_t::array, "an integer array");
    const auto a = t.number("a", false, -1e6, 1e6);
    const auto b = t.number("b", false, -1e6, 1e6);
    t.reject_unknown();
    bool zero = true;
    if (k) {
      for (const auto& c : *k) {
        if (!c.is_number_integer()) {
          t.fail("k", "must be an integer array");
          complete = false;
          break;
        }
        if (c.get<std::int64_t>() != 0) zero = false;
      }
      if (d && static_cast<int>(k->size()) != *d + 1) t.fail("k", "must have d + 1 = " + std::to_string(*d + 1) + " entries");
    } else {
      complete = false;
    }
    if (zero) {
      constant += a.value_or(0.0);
      if (b.value_or(0.0) != 0.0) t.fail("b", "must be 0 for the constant term");
    } else {
      amplitude += std::hypot(a.value_or(0.0), b.value_or(0.0));
    }
  }
  if (complete && !(constant - amplitude > 0.0))
    f.fail(key, "phi is not certified positive (constant term must exceed the sum of amplitudes)");
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kind_names())
    if (k == kind) return name;
  return "unknown";
}

std::optional<ExperimentKind> parse_experiment_kind(std::string_view name) {
  for (const auto& [k, n] : kind_names())
    if (n == name) return k;
  return std::nullopt;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string ExperimentConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical.dump())));
  return buf;
}

RealVector parse_alpha(const json& spec, long precision) {
  if (spec.is_array()) {
    if (spec.empty()) throw ConfigInvalid("alpha needs at least one coordinate");
    RealVector out;
    for (const auto& c : spec) {
      if (c.is_array()) throw ConfigInvalid("alpha coordinates must be scalars");
      out.push_back(parse_alpha(c, precision).front());
    }
    return out;
  }
  if (spec.is_number()) return {RealScalar(BigRational(spec.get<double>()), precision)};
  if (!spec.is_string()) throw ConfigInvalid("alpha must be a string, a number or an array of them");
  const auto text = spec.get<std::string>();
  const auto root = [&](long n) { return sqrt(RealScalar(n, precision)); };
  if (text == "golden") return {(root(5) - RealScalar(1L, precision)) / RealScalar(2L, precision)};
  if (text == "sqrt2") return {root(2) - RealScalar(1L, precision)};
  if (text == "sqrt3") return {root(3) - RealScalar(1L, precision)};
  try {
    return {RealScalar(parse_rational(text), precision)};
  } catch (const Error&) {
    throw ConfigInvalid("cannot read alpha coordinate '" + text + "'");
  }
}

std::vector<std::string> validate_config(const json& doc, std::optional<std::uint64_t> seed_override) {
  std::vector<std::string> out;
  if (!doc.is_object()) return {"config: must be a JSON object"};
  Fields top(doc, "", out);

  if (const json* name = top.typed("name", false, json::value_t::string, "a string")) {
    const auto s = name->get<std::string>();
    bool ok = !s.empty();
    for (char c : s) ok = ok && (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.');
    if (!ok) top.fail("name", "must be non-empty and use only letters, digits, '-', '_' and '.'");
  }
  std::optional<ExperimentKind> kind;
  if (const json* k = top.present("kind", true)) {
    if (k->is_string()) kind = parse_experiment_kind(k->get<std::string>());
    if (!kind) {
      std::string list;
      for (const auto& [_, n] : kind_names()) list += (list.empty() ? "" : ", ") + n;
      top.fail("kind", "must be one of " + list);
    }
  }
  const auto regime = top.choice("regime", false, {"faithful", "simulable"}).value_or("faithful");
  bool has_seed = seed_override.has_value();
  if (const json* s = top.present("seed", false)) {
    if (!non_negative_integer(*s))
      top.fail("seed", "must be a non-negative integer");
    else
      has_seed = true;
  }
  const long precision =
      static_cast<long>(top.integer("precision_bits", false, 64, max_precision_bits).value_or(default_precision_bits));
  if (const json* o = top.typed("output", false, json::value_t::object, "an object")) {
    Fields f(*o, "output.", out);
    f.typed("dir", false, json::value_t::string, "a string");
    f.reject_unknown();
  }
  const json* params = top.typed("params", true, json::value_t::object, "an object");
  top.reject_unknown();
  if (!kind || !params) return out;

  Fields p(*params, "params.", out);
  bool stochastic = false;
  switch (*kind) {
    case ExperimentKind::approx:
      check_alpha(p, "alpha", true, precision);
      p.integer("q_max", true, 1, 1'000'000'000);
      p.integer("budget", false, 1, std::int64_t{1} << 40);
      break;
    case ExperimentKind::empty_limsup:
      if (auto d = check_alpha(p, "alpha", true, precision); d && *d != 1)
        p.fail("alpha", "must be a single coordinate (alpha_1)");
      p.integer("d", false, 1, 3);
      p.integer("p_max", true, 1, 4);
      break;
    case ExperimentKind::non_bc: {
      const auto cert = check_certificate(p, "certificate", out);
      check_n_max(p, cert);
      p.number("center", false, 0.0, 1.0);
      if (const json* mc = p.typed("monte_carlo", false, json::value_t::object, "an object")) {
        Fields m(*mc, "params.monte_carlo.", out);
        m.integer("samples", true, 1, 100'000'000);
        m.reject_unknown();
        stochastic = true;
        if (cert && cert->d != 1) p.fail("monte_carlo", "block sampling is available for d = 1 only");
      }
      if (cert && cert->law != "eq3") p.fail("certificate.law", "the non-BC construction needs eq3");
      break;
    }
    case ExperimentKind::mstp_bound: {
      const auto d = check_alpha(p, "alpha", true, precision);
      check_point(p, "x0", d);
      if (const json* r = p.typed("radii", true, json::value_t::object, "an object")) {
        Fields f(*r, "params.radii.", out);
        const auto profile = f.choice("profile", true, {"harmonic", "constant"});
        if (profile == "harmonic") f.number("c", true, 0.0, 0.5, true);
        if (profile == "constant") f.number("r", true, 0.0, 0.5, true);
        f.reject_unknown();
      }
      p.integer("n_doublings", true, 0, max_doublings);
      p.integer("epsilon_q_max", false, 1, std::int64_t{1} << 24);
      break;
    }
    case ExperimentKind::lemma_campaign: {
      stochastic = true;
      if (const json* dims = p.typed("dims", true, json::value_t::array, "an array of dimensions")) {
        if (dims->empty()) p.fail("dims", "must not be empty");
        for (const auto& x : *dims)
          if (!non_negative_integer(x) || x.get<std::uint64_t>() < 1 || x.get<std::uint64_t>() > 3) {
            p.fail("dims", "entries must be integers in [1, 3]");
            break;
          }
      }
      if (const json* qs = p.typed("Q", true, json::value_t::array, "an array of integers")) {
        if (qs->empty()) p.fail("Q", "must not be empty");
        for (const auto& x : *qs)
          if (!non_negative_integer(x) || x.get<std::uint64_t>() < 4 || x.get<std::uint64_t>() > 4096) {
            p.fail("Q", "entries must be integers in [4, 4096]");
            break;
          }
      }
      p.integer("instances_per_cell", true, 1, 10'000'000);
      p.choice("measure", false, {"exact", "grid"});
      p.integer("initial_resolution", false, 8, 1 << 16);
      break;
    }
    case ExperimentKind::flow_nostp: {
      const auto cert = check_certificate(p, "certificate", out);
      if (cert && cert->law != "eq7") p.fail("certificate.law", "the flow construction needs eq7");
      check_n_max(p, cert);
      const std::optional<int> d = cert ? std::optional<int>(cert->d) : std::nullopt;
      check_fourier(p, "fourier", d, out);
      check_point(p, "center", d ? std::optional<int>(*d + 1) : std::nullopt);
      const bool direct = p.boolean("direct_simulation", false).value_or(false);
      if (direct && regime == "faithful")
        p.fail("direct_simulation", "incompatible with the faithful regime (set regime to simulable)");
      p.integer("samples", false, 1, 10'000'000);
      p.number("tol", false, 1e-14, 1e-3);
      p.number("max_simulated_time", false, 0.0, 1e9);
      const auto inv = p.integer("invariance_samples", false, 1, 10'000'000);
      stochastic = direct || inv.has_value();
      break;
    }
    case ExperimentKind::ergodic_demo: {
      stochastic = true;
      const auto d = check_alpha(p, "alpha", true, precision);
      check_point(p, "center", d);
      p.number("radius", true, 0.0, 0.5, true);
      p.integer("horizon", true, 1, 10'000'000'000);
      p.integer("samples", true, 1, 100'000'000);
      p.integer("min_hits", false, 0, 1'000'000'000);
      break;
    }
  }
  p.reject_unknown();
  if (stochastic && !has_seed) out.push_back("seed: required for a stochastic experiment");
  return out;
}

std::vector<std::string> validate_config_text(const std::string& text, std::optional<std::uint64_t> seed_override) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    return {std::string("config: not valid JSON (") + e.what() + ")"};
  }
  return validate_config(doc, seed_override);
}

ExperimentConfig parse_config(const std::string& text, std::optional<std::uint64_t> seed_override) {
  const auto violations = validate_config_text(text, seed_override);
  if (!violations.empty()) {
    std::string msg = "invalid config";
    for (const auto& v : violations) msg += "\n  " + v;
    throw ConfigInvalid(msg);
  }
  const json doc = json::parse(text);
  ExperimentConfig c;
  c.kind = *parse_experiment_kind(doc.at("kind").get<std::string>());
  c.name = doc.value("name", to_string(c.kind));
  c.regime = doc.value("regime", std::string("faithful")) == "simulable" ? Regime::simulable : Regime::faithful;
  if (doc.contains("seed")) c.seed = doc.at("seed").get<std::uint64_t>();
  if (seed_override) c.seed = seed_override;
  c.precision = doc.value("precision_bits", static_cast<long>(default_precision_bits));
  if (doc.contains("output")) c.output_dir = doc["output"].value("dir", std::string("reports"));
  c.params = doc.at("params");

  c.canonical = doc;
  c.canonical.erase("output");
  c.canonical["name"] = c.name;
  c.canonical["regime"] = to_string(c.regime);
  c.canonical["precision_bits"] = c.precision;
  if (c.seed)
    c.canonical["seed"] = *c.seed;
  else
    c.canonical.erase("seed");
  return c;
}

// -------------------------------------------------------------- execution

namespace {

CertifiedVector make_certificate(const json& spec, long precision) {
  const auto law = spec.at("law").get<std::string>() == "eq7" ? DecayLaw::eq7() : DecayLaw::eq3();
  const int d = spec.at("d").get<int>();
  const long n_max = spec.at("n_max").get<long>();
  if (spec.value("construction", std::string("nested")) == "cf") return build_liouville_cf(law, n_max, precision);
  return build_liouville_vector(d, law, n_max, precision);
}

Eigen::VectorXd point_or(const json& params, const std::string& key, int dim, double fill) {
  Eigen::VectorXd out = Eigen::VectorXd::Constant(dim, fill);
  if (params.contains(key))
    for (int i = 0; i < dim; ++i) out[i] = params[key][i].get<double>();
  return reduce(out);
}

Eigen::VectorXd to_float(const RealVector& alpha) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(alpha.size()));
  for (std::size_t i = 0; i < alpha.size(); ++i) out[static_cast<Eigen::Index>(i)] = alpha[i].to_double();
  return out;
}

json rationals(const std::vector<BigRational>& values) {
  json out = json::array();
  for (const auto& v : values) out.push_back(format_rational(v));
  return out;
}

ExperimentOutcome run_approx(const ExperimentConfig& c) {
  const auto alpha = parse_alpha(c.params.at("alpha"), c.precision);
  const BigInt q_max(c.params.at("q_max").get<std::uint64_t>());
  const auto budget = c.params.value("budget", default_search_budget);
  const auto result = best_sim_approx(alpha, q_max, budget);

  std::ostringstream csv;
  csv << "Q,distance,scaled\r\n";
  for (const auto& r : result.records)
    csv << big(r.Q) << ',' << fmt(r.distance.to_double()) << ',' << fmt(r.scaled.to_double()) << "\r\n";

  ExperimentOutcome out;
  out.reports.push_back({"", csv.str()});
  out.summary = {{"records", result.records.size()},
                 {"best_scaled_Q", big(result.best_scaled.Q)},
                 {"best_scaled", result.best_scaled.scaled.to_double()}};
  return out;
}

ExperimentOutcome run_empty_limsup(const ExperimentConfig& c) {
  const auto alpha = parse_alpha(c.params.at("alpha"), c.precision);
  const int d = c.params.value("d", 1);
  const long p_max = c.params.at("p_max").get<long>();
  const auto result = empty_limsup_schedule(alpha.front(), d, p_max);
  const auto report = verify_empty_limsup(result.certificate, p_max);

  std::ostringstream csv;
  csv << "p,l,n,radius_pow_d\r\n";
  for (const auto& e : result.certificate.entries)
    csv << e.p << ',' << e.l << ',' << big(e.n) << ',' << format_rational(e.radius_pow_d) << "\r\n";

  ExperimentOutcome out;
  out.reports.push_back({"", csv.str()});
  json k = json::array(), v = json::array();
  for (const auto& x : result.certificate.k) k.push_back(big(x));
  for (const auto& x : result.certificate.V) v.push_back(big(x));
  out.summary = {{"checks", "a,b,c,d passed"},
                 {"k", k},
                 {"V", v},
                 {"half_width", rationals(result.certificate.half_width)},
                 {"entries", result.certificate.entries.size()},
                 {"indices_checked", report.indices_checked},
                 {"strip_pairs_checked", report.strip_pairs_checked},
                 {"lines", report.lines}};
  return out;
}

ExperimentOutcome run_non_bc(const ExperimentConfig& c) {
  const auto cv = make_certificate(c.params.at("certificate"), c.precision);
  const long n_max = c.params.value("n_max", cv.certificate.size() > 0 ? static_cast<long>(cv.certificate.size()) : 1L);
  const auto schedule = non_bc_schedule(cv.certificate, n_max);
  const auto report = verify_non_bc(cv.alpha, cv.certificate, schedule, n_max);

  std::vector<BcEstimate> mc;
  if (c.params.contains("monte_carlo")) {
    const CircleRotation rotation(cv.snapshot.front(), c.precision);
    mc = block_hit_fraction(rotation, c.params.value("center", 0.0), schedule,
                            c.params["monte_carlo"].at("samples").get<std::uint64_t>(), *c.seed);
  }

  std::ostringstream csv;
  csv << "n,Q_n,U_n,R_n,block_mass,hit_region,hit_region_is_bound,metric_bound,measured_constant,block_union,"
         "mc_fraction,mc_std_error\r\n";
  double worst_ratio = 0.0;
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    csv << r.n << ',' << big(r.Q) << ',' << big(r.U) << ',' << fmt(r.R) << ',' << format_rational(r.block_mass) << ','
        << fmt(r.hit_region.value) << ',' << (r.hit_region_is_bound ? 1 : 0) << ',' << fmt(r.metric_bound) << ','
        << fmt(r.measured_constant) << ',' << fmt(r.block_union.value) << ',';
    if (i < mc.size()) {
      csv << fmt(mc[i].fraction) << ',' << fmt(mc[i].std_error);
      if (r.n >= 2) worst_ratio = std::max(worst_ratio, mc[i].fraction / r.metric_bound);
    } else {
      csv << ',';
    }
    csv << "\r\n";
  }

  ExperimentOutcome out;
  out.reports.push_back({"", csv.str()});
  out.summary = {{"metric_constant", report.metric_constant},
                 {"fitted_constant", report.fitted_constant},
                 {"tail_constant", report.tail_constant},
                 {"decreasing_from_2", report.decreasing_from_2},
                 {"certificate", json::parse(certificate_to_json(cv.certificate))}};
  if (!mc.empty()) out.summary["mc_worst_fraction_over_bound"] = worst_ratio;
  return out;
}

ExperimentOutcome run_mstp(const ExperimentConfig& c) {
  const auto alpha = parse_alpha(c.params.at("alpha"), c.precision);
  const int d = static_cast<int>(alpha.size());
  const int n = c.params.at("n_doublings").get<int>();
  const std::uint64_t count = std::uint64_t{2} << n;
  const auto& r = c.params.at("radii");
  const auto radii = r.at("profile") == "harmonic" ? harmonic_radii(r.at("c").get<double>(), d, count)
                                                   : std::vector<double>(count, r.at("r").get<double>());
  std::optional<double> epsilon;
  json eps_json;
  if (c.params.contains("epsilon_q_max")) {
    const auto e = epsilon_alpha(alpha, c.params["epsilon_q_max"].get<std::uint64_t>());
    epsilon = e.value;
    eps_json = json::parse(e.to_json());
  }
  const auto report = mstp_lower_bound(alpha, point_or(c.params, "x0", d, 0.0), radii, n, epsilon);

  ExperimentOutcome out;
  out.reports.push_back({"", report.to_csv()});
  out.summary = {{"epsilon", report.epsilon},
                 {"eta", report.eta},
                 {"reached_at", report.reached_at ? json(*report.reached_at) : json(nullptr)},
                 {"monotone_unions", report.monotone_unions},
                 {"recurrence_respected", report.recurrence_respected},
                 {"looks_divergent", report.looks_divergent}};
  if (!eps_json.is_null()) out.summary["epsilon_search"] = eps_json;
  out.falsified = !report.monotone_unions || !report.recurrence_respected;
  return out;
}

ExperimentOutcome run_lemma(const ExperimentConfig& c) {
  const auto dims = c.params.at("dims").get<std::vector<int>>();
  const auto qs = c.params.at("Q").get<std::vector<std::uint64_t>>();
  LemmaOptions options;
  options.measure = c.params.value("measure", std::string("exact")) == "grid" ? LemmaMeasure::grid : LemmaMeasure::exact;
  options.initial_resolution = c.params.value("initial_resolution", options.initial_resolution);
  const auto result = lemma_campaign(dims, qs, c.params.at("instances_per_cell").get<std::uint64_t>(), *c.seed, options);

  ExperimentOutcome out;
  out.reports.push_back({"", result.to_csv()});
  json counts = json::object();
  for (const auto& row : result.rows) counts[to_string(row.verdict.alternative)] = counts.value(to_string(row.verdict.alternative), 0) + 1;
  out.summary = {{"instances", result.rows.size()},
                 {"falsifications", result.falsifications},
                 {"escalations", result.escalations},
                 {"exact_decisions", result.exact_decisions},
                 {"proportion_failures", result.proportion_failures},
                 {"alternatives", counts}};
  if (!result.falsified_instances.empty()) {
    json replay = json::array();
    for (const auto& s : result.falsified_instances) replay.push_back(json::parse(s));
    out.summary["falsified_instances"] = replay;
  }
  out.falsified = result.falsifications > 0;
  return out;
}

ExperimentOutcome run_flow(const ExperimentConfig& c) {
  const auto cv = make_certificate(c.params.at("certificate"), c.precision);
  const int d = cv.certificate.d;
  std::vector<FourierTerm> terms;
  for (const auto& t : c.params.at("fourier"))
    terms.push_back({t.at("k").get<std::vector<int>>(), t.value("a", 0.0), t.value("b", 0.0)});
  const auto spec = make_flow_spec(cv.alpha, terms);
  const long n_max = c.params.value("n_max", static_cast<long>(cv.certificate.size()));

  NostpOptions options;
  options.regime = c.regime;
  options.direct_simulation = c.params.value("direct_simulation", false);
  options.samples = c.params.value("samples", options.samples);
  options.seed = c.seed.value_or(0);
  options.tol = c.params.value("tol", options.tol);
  options.max_simulated_time = c.params.value("max_simulated_time", options.max_simulated_time);
  const auto report = nostp_experiment(spec, cv.certificate, n_max, point_or(c.params, "center", d + 1, 0.5), options);

  std::ostringstream extra;
  extra << "n,crossings,wraps,rho,nominal_bound,haar_bound,measure_bound,simulated_error,containment_checked\r\n";
  for (const auto& r : report.rows)
    extra << r.n << ',' << big(r.crossings) << ',' << big(r.wraps) << ',' << fmt(r.rho) << ',' << fmt(r.nominal_bound)
          << ',' << fmt(r.haar_bound) << ',' << fmt(r.measure_bound) << ','
          << (r.simulated_error ? fmt(*r.simulated_error) : "") << ',' << r.containment_checked << "\r\n";

  ExperimentOutcome out;
  out.reports.push_back({"", report.to_csv()});
  out.reports.push_back({"bounds", extra.str()});
  out.summary = {{"phi_min", report.phi_min},
                 {"phi_max", report.phi_max},
                 {"fitted_exponent", report.fitted_exponent ? json(*report.fitted_exponent) : json(nullptr)},
                 {"target_exponent", 2 * d},
                 {"consecutive_ratios", report.consecutive_ratios},
                 {"flow", json::parse(spec.to_json())}};
  for (const auto& r : report.rows)
    if (r.simulated_fraction && *r.simulated_fraction > r.measure_bound + 3 * r.simulated_error.value_or(0.0))
      out.falsified = true;
  if (c.params.contains("invariance_samples")) {
    const auto inv = time1_invariance_check(spec, c.params["invariance_samples"].get<std::uint64_t>(), *c.seed);
    out.summary["invariance"] = {{"samples", inv.samples},     {"bins", inv.bins},
                                 {"chi2", inv.chi2},           {"threshold", inv.threshold},
                                 {"sample_chi2", inv.sample_chi2}, {"within_three_sigma", inv.within_three_sigma}};
    if (!inv.within_three_sigma) out.falsified = true;
  }
  return out;
}

ExperimentOutcome run_ergodic(const ExperimentConfig& c) {
  const auto alpha = parse_alpha(c.params.at("alpha"), c.precision);
  const int d = static_cast<int>(alpha.size());
  const double r = c.params.at("radius").get<double>();
  const auto horizon = c.params.at("horizon").get<std::uint64_t>();
  const auto min_hits = c.params.value("min_hits", std::uint64_t{10});

  TargetSequence target;
  target.center = point_or(c.params, "center", d, 0.0);
  target.schedule.d = d;
  BigRational rd = 1;
  for (int i = 0; i < d; ++i) rd *= BigRational(r);
  target.schedule.blocks.push_back({BigInt(0), BigInt(static_cast<unsigned long>(horizon)), rd, r});
  const auto est = bc_monte_carlo(to_float(alpha), target, horizon, c.params.at("samples").get<std::uint64_t>(),
                                  *c.seed, min_hits);

  std::ostringstream csv;
  csv << "sample_id,hits_capped\r\n";
  for (std::size_t i = 0; i < est.hit_counts.size(); ++i) csv << i << ',' << est.hit_counts[i] << "\r\n";

  ExperimentOutcome out;
  out.reports.push_back({"", csv.str()});
  out.summary = {{"fraction_with_min_hits", est.fraction},
                 {"std_error", est.std_error},
                 {"min_hits", min_hits},
                 {"samples", est.samples},
                 {"expected_hits", static_cast<double>(horizon) * std::pow(2.0 * r, d)}};
  return out;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json versions() {
  return {{"shrinklab", SHRINKLAB_VERSION},
          {"gmp", gmp_version},
          {"mpfr", mpfr_get_version()},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", BOOST_LIB_VERSION},
          {"compiler", __VERSION__}};
}

}  // namespace

ExperimentOutcome execute_experiment(const ExperimentConfig& config) {
  switch (config.kind) {
    case ExperimentKind::approx: return run_approx(config);
    case ExperimentKind::empty_limsup: return run_empty_limsup(config);
    case ExperimentKind::non_bc: return run_non_bc(config);
    case ExperimentKind::mstp_bound: return run_mstp(config);
    case ExperimentKind::lemma_campaign: return run_lemma(config);
    case ExperimentKind::flow_nostp: return run_flow(config);
    case ExperimentKind::ergodic_demo: return run_ergodic(config);
  }
  throw ConfigInvalid("kind: unsupported");
}

int exit_status_for(const std::exception& error) {
  if (dynamic_cast<const ConfigInvalid*>(&error) || dynamic_cast<const RegimeInfeasible*>(&error) ||
      dynamic_cast<const NonMonotoneSchedule*>(&error) || dynamic_cast<const EpsilonZero*>(&error) ||
      dynamic_cast<const RationalInputError*>(&error))
    return exit_config_invalid;
  if (dynamic_cast<const VerificationFailure*>(&error) || dynamic_cast<const CertificateInvalid*>(&error) ||
      dynamic_cast<const HypothesisViolated*>(&error))
    return exit_verification_failure;
  return exit_resource;
}

RunResult run_experiment(const ExperimentConfig& config, std::ostream* log) {
  RunResult result;
  result.hash = config.hash();
  const std::string stem = config.name + "." + result.hash.substr(0, 12);
  const auto started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();

  ExperimentOutcome outcome;
  std::string status = "ok";
  try {
    outcome = execute_experiment(config);
    if (outcome.falsified) {
      result.exit_code = exit_verification_failure;
      status = "falsified";
      result.message = "a checked inequality or lemma alternative failed; see the summary";
    }
  } catch (const std::exception& e) {
    result.exit_code = exit_status_for(e);
    status = "error";
    result.message = e.what();
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) {
    result.exit_code = exit_resource;
    result.message = "cannot create output directory " + config.output_dir.string() + ": " + ec.message();
    return result;
  }
  json files = json::array();
  for (const auto& r : outcome.reports) {
    const auto path = config.output_dir / (stem + (r.suffix.empty() ? "" : "." + r.suffix) + ".csv");
    std::ofstream f(path, std::ios::binary);
    f << r.csv;
    if (!f) {
      result.exit_code = exit_resource;
      result.message = "cannot write " + path.string();
      return result;
    }
    result.reports.push_back(path);
    files.push_back(path.filename().string());
  }

  const json manifest = {{"config_hash", result.hash},
                         {"config", config.canonical},
                         {"kind", to_string(config.kind)},
                         {"seed", config.seed ? json(*config.seed) : json(nullptr)},
                         {"versions", versions()},
                         {"started_utc", started},
                         {"wall_time_seconds", wall},
                         {"reports", files},
                         {"status", status},
                         {"exit_code", result.exit_code},
                         {"message", result.message},
                         {"summary", outcome.summary}};
  result.manifest = config.output_dir / (stem + ".manifest.json");
  std::ofstream m(result.manifest, std::ios::binary);
  m << manifest.dump(2) << '\n';
  if (!m) {
    result.exit_code = exit_resource;
    result.message = "cannot write " + result.manifest.string();
  }
  if (log) {
    *log << to_string(config.kind) << " [" << result.hash << "] " << status << " in " << std::fixed << std::setprecision(2) << wall << " s\n";
    for (const auto& p : result.reports) *log << "  report   " << p.string() << '\n';
    *log << "  manifest " << result.manifest.string() << '\n';
    if (!result.message.empty()) *log << "  " << result.message << '\n';
  }
  return result;
}

}  // namespace shrinklab
