#pragma once

// Declarative experiment runs. A JSON document names the experiment kind and
// its parameters; validation lists every problem with the field it concerns;
// a run writes plot-ready CSV reports and a manifest keyed by the config hash.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shrinklab/diophantine.hpp"
#include "shrinklab/targets.hpp"

namespace shrinklab {

enum class ExperimentKind { approx, empty_limsup, non_bc, mstp_bound, lemma_campaign, flow_nostp, ergodic_demo };

std::string to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_kind(std::string_view name);

/// Exit statuses shared by the runner and the command line tool.
enum ExitStatus : int { exit_ok = 0, exit_config_invalid = 1, exit_verification_failure = 2, exit_resource = 3 };

struct ExperimentConfig {
  std::string name;
  ExperimentKind kind = ExperimentKind::approx;
  Regime regime = Regime::faithful;
  std::optional<std::uint64_t> seed;
  long precision = default_precision_bits;
  std::filesystem::path output_dir = "reports";
  nlohmann::json params;
  /// Effective configuration (seed override applied, output section removed);
  /// this is what the hash covers.
  nlohmann::json canonical;

  /// FNV-1a 64 of the canonical dump, 16 hex digits.
  std::string hash() const;
};

std::uint64_t fnv1a64(std::string_view bytes);

/// All violations of the document, each prefixed by the offending field.
/// Empty iff a run would start.
std::vector<std::string> validate_config(const nlohmann::json& doc,
                                         std::optional<std::uint64_t> seed_override = std::nullopt);
/// Same for raw text; a JSON syntax error is reported as a single violation.
std::vector<std::string> validate_config_text(const std::string& text,
                                              std::optional<std::uint64_t> seed_override = std::nullopt);

/// Throws ConfigInvalid listing the violations.
ExperimentConfig parse_config(const std::string& text, std::optional<std::uint64_t> seed_override = std::nullopt);

/// Coordinates of alpha: "golden", "sqrt2", "sqrt3" (fractional parts of the
/// named quadratic irrationals), decimal or p/q literals, or an array of them.
RealVector parse_alpha(const nlohmann::json& spec, long precision = default_precision_bits);

struct ReportBody {
  std::string suffix;  // empty for the main report
  std::string csv;
};

struct ExperimentOutcome {
  std::vector<ReportBody> reports;
  nlohmann::json summary;
  /// A verification chain failed or a campaign produced a counterexample.
  bool falsified = false;
};

/// Runs the experiment in memory. Module errors propagate unchanged.
ExperimentOutcome execute_experiment(const ExperimentConfig& config);

/// Exit status for an exception escaping execute_experiment.
int exit_status_for(const std::exception& error);

struct RunResult {
  int exit_code = exit_ok;
  std::string hash;
  std::filesystem::path manifest;
  std::vector<std::filesystem::path> reports;
  std::string message;
};

/// Executes and writes <name>.<hash12>[.<suffix>].csv plus
/// <name>.<hash12>.manifest.json into the output directory. Never throws for
/// experiment errors; they are recorded in the manifest and mapped to the
/// exit code.
RunResult run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);

}  // namespace shrinklab
