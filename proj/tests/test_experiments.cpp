#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "shrinklab/errors.hpp"
#include "shrinklab/experiments.hpp"

using namespace shrinklab;
using nlohmann::json;

namespace {

json approx_doc() { return json::parse(R"({"kind": "approx", "params": {"alpha": "golden", "q_max": 1000}})"); }

json flow_doc() {
  return json::parse(R"({
    "kind": "flow-nostp", "regime": "faithful",
    "params": {
      "certificate": {"d": 2, "law": "eq7", "n_max": 2},
      "fourier": [{"k": [0, 0, 0], "a": 1.0}, {"k": [0, 0, 1], "a": 0.25}]
    }})");
}

json ergodic_doc() {
  return json::parse(R"({
    "name": "ergo", "kind": "ergodic-demo", "seed": 4,
    "params": {"alpha": "golden", "radius": 0.1, "horizon": 2000, "samples": 300, "min_hits": 100000}})");
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("shrinklab-test-" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("validation lists violations by field") {
  CHECK(validate_config(approx_doc()).empty());
  CHECK(validate_config(flow_doc()).empty());

  auto negative = approx_doc();
  negative["params"]["q_max"] = -5;
  auto v = validate_config(negative);
  REQUIRE(v.size() == 1);
  CHECK(v[0].rfind("params.q_max:", 0) == 0);

  auto direct = flow_doc();
  direct["params"]["direct_simulation"] = true;
  direct["seed"] = 1;
  v = validate_config(direct);
  REQUIRE(v.size() == 1);
  CHECK(v[0].rfind("params.direct_simulation:", 0) == 0);
  direct["regime"] = "simulable";
  CHECK(validate_config(direct).empty());

  auto unseeded = ergodic_doc();
  unseeded.erase("seed");
  v = validate_config(unseeded);
  REQUIRE(v.size() == 1);
  CHECK(v[0].rfind("seed:", 0) == 0);
  CHECK(validate_config(unseeded, 9).empty());

  auto sloppy = approx_doc();
  sloppy["params"]["qmax"] = 3;
  sloppy["kind"] = "approximate";
  CHECK(validate_config(sloppy).size() == 1);  // the unknown kind stops parameter checks
  sloppy["kind"] = "approx";
  v = validate_config(sloppy);
  REQUIRE(v.size() == 1);
  CHECK(v[0] == "params.qmax: unknown field");

  auto bad_alpha = approx_doc();
  bad_alpha["params"]["alpha"] = "phi";
  v = validate_config(bad_alpha);
  REQUIRE(v.size() == 1);
  CHECK(v[0].rfind("params.alpha:", 0) == 0);

  auto negative_phi = flow_doc();
  negative_phi["params"]["fourier"][1]["a"] = 1.5;
  v = validate_config(negative_phi);
  REQUIRE(v.size() == 1);
  CHECK(v[0].rfind("params.fourier:", 0) == 0);

  auto wrong_law = flow_doc();
  wrong_law["params"]["certificate"]["law"] = "eq3";
  CHECK(validate_config(wrong_law).size() == 1);

  CHECK(validate_config_text("{\"kind\": ").size() == 1);
  CHECK(validate_config(json::array()).size() == 1);
  CHECK(validate_config(json::object()).size() == 2);  // kind and params
}

TEST_CASE("parse_config and the config hash") {
  CHECK_THROWS_AS(parse_config(R"({"kind": "approx", "params": {"alpha": "golden", "q_max": 0}})"), ConfigInvalid);
  try {
    parse_config(R"({"kind": "approx", "params": {"alpha": "golden", "q_max": 0}})");
  } catch (const ConfigInvalid& e) {
    CHECK(std::string(e.what()).find("params.q_max") != std::string::npos);
  }

  const auto a = parse_config(R"({"kind":"approx","params":{"q_max":1000,"alpha":"golden"}})");
  const auto b = parse_config(
      "{\n  \"params\": {\"alpha\": \"golden\", \"q_max\": 1000},\n  \"kind\": \"approx\",\n"
      "  \"output\": {\"dir\": \"elsewhere\"}\n}");
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  CHECK(a.name == "approx");
  CHECK(b.output_dir == "elsewhere");

  const auto seeded = parse_config(ergodic_doc().dump());
  const auto overridden = parse_config(ergodic_doc().dump(), 5);
  CHECK(*seeded.seed == 4);
  CHECK(*overridden.seed == 5);
  CHECK(seeded.hash() != overridden.hash());
  CHECK(overridden.canonical["seed"] == 5);
}

TEST_CASE("alpha specifications") {
  CHECK(parse_alpha("golden").front().to_double() == doctest::Approx(0.6180339887498949));
  CHECK(parse_alpha("sqrt2").front().to_double() == doctest::Approx(0.41421356237309503));
  const auto v = parse_alpha(json::parse(R"(["1/3", "0.25", "sqrt3"])"));
  REQUIRE(v.size() == 3);
  CHECK(v[0].is_exact());
  CHECK(*v[0].exact_value() == BigRational(1, 3));
  CHECK(*v[1].exact_value() == BigRational(1, 4));
  CHECK_THROWS_AS(parse_alpha("pi"), ConfigInvalid);
  CHECK_THROWS_AS(parse_alpha(json::array()), ConfigInvalid);
}

TEST_CASE("approx experiment reports the Fibonacci records") {
  const auto outcome = execute_experiment(parse_config(approx_doc().dump()));
  REQUIRE(outcome.reports.size() == 1);
  const auto& csv = outcome.reports[0].csv;
  CHECK(csv.rfind("Q,distance,scaled\r\n", 0) == 0);
  std::vector<std::string> qs;
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) qs.push_back(line.substr(0, line.find(',')));
  const std::vector<std::string> fib = {"1", "2", "3", "5", "8", "13", "21", "34", "55", "89", "144", "233", "377", "610", "987"};
  CHECK(qs == fib);
  CHECK_FALSE(outcome.falsified);
}

TEST_CASE("runs write reports and a manifest keyed by the hash") {
  const auto dir = scratch("run");
  auto config = parse_config(ergodic_doc().dump());
  config.output_dir = dir;
  const auto first = run_experiment(config);
  REQUIRE(first.exit_code == exit_ok);
  REQUIRE(first.reports.size() == 1);
  CHECK(first.reports[0].filename() == "ergo." + first.hash.substr(0, 12) + ".csv");
  const auto manifest = json::parse(slurp(first.manifest));
  CHECK(manifest["config_hash"] == first.hash);
  CHECK(manifest["seed"] == 4);
  CHECK(manifest["status"] == "ok");
  CHECK(manifest["reports"][0] == first.reports[0].filename().string());
  CHECK(manifest["versions"].contains("gmp"));
  CHECK(manifest["summary"]["fraction_with_min_hits"].is_number());

  const auto body = slurp(first.reports[0]);
  const auto second = run_experiment(config);
  CHECK(slurp(second.reports[0]) == body);

  const auto other = parse_config(ergodic_doc().dump(), 99);
  CHECK(execute_experiment(other).reports[0].csv != body);
  std::filesystem::remove_all(dir);
}

TEST_CASE("error classes map to exit statuses") {
  CHECK(exit_status_for(ConfigInvalid("x")) == exit_config_invalid);
  CHECK(exit_status_for(RegimeInfeasible("x")) == exit_config_invalid);
  CHECK(exit_status_for(VerificationFailure("a", "x")) == exit_verification_failure);
  CHECK(exit_status_for(CertificateInvalid("x")) == exit_verification_failure);
  CHECK(exit_status_for(PrecisionError("x")) == exit_resource);
  CHECK(exit_status_for(BudgetExceeded("x")) == exit_resource);
  CHECK(exit_status_for(StepUnderflow("x")) == exit_resource);

  const auto dir = scratch("errors");
  auto deep = parse_config(R"({"kind": "empty-limsup", "params": {"alpha": "golden", "p_max": 3}})");
  deep.output_dir = dir;
  const auto r = run_experiment(deep);
  CHECK(r.exit_code == exit_resource);
  CHECK(r.reports.empty());
  CHECK(json::parse(slurp(r.manifest))["status"] == "error");

  auto doc = flow_doc();
  doc["regime"] = "simulable";
  doc["seed"] = 1;
  doc["params"]["direct_simulation"] = true;
  doc["params"]["max_simulated_time"] = 0.0;
  auto none_short = parse_config(doc.dump());
  none_short.output_dir = dir;
  CHECK(run_experiment(none_short).exit_code == exit_config_invalid);
  std::filesystem::remove_all(dir);
}

TEST_CASE("lemma campaign and empty lim sup through the runner") {
  const auto campaign = execute_experiment(parse_config(
      R"({"kind": "lemma-campaign", "seed": 7, "params": {"dims": [1], "Q": [4, 8], "instances_per_cell": 20}})"));
  CHECK(campaign.summary["falsifications"] == 0);
  CHECK(campaign.summary["instances"] == 40);
  CHECK_FALSE(campaign.falsified);

  const auto limsup =
      execute_experiment(parse_config(R"({"kind": "empty-limsup", "params": {"alpha": "golden", "p_max": 2}})"));
  CHECK(limsup.summary["k"] == json::parse(R"(["1", "2"])"));
  CHECK(limsup.reports[0].csv.find("\r\n2,25,32951280101,0.04\r\n") != std::string::npos);
}
