#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "crelay/mc_sim.hpp"
#include "crelay/policy_opt.hpp"

namespace crelay {

inline constexpr std::string_view kToolVersion = "1.0.0";

/// Invalid or unparsable configuration; carries every issue found.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  std::vector<ConfigIssue> issues;
};

// ---------------------------------------------------------------------------
// Config files: one flat JSON object whose keys are the SystemConfig field
// names. Per-link fields are suffixed with the link (distance_pd,
// mean_gain_sr, ...); mean gains may instead be given in dB via a `_db`
// suffix (mean_gain_pd_db = -10). Unset keys keep the documented defaults.
// ---------------------------------------------------------------------------

/// Throws ConfigError listing unknown keys, type errors and violated invariants.
SystemConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SystemConfig& config);

struct ConfigValidation {
  std::optional<SystemConfig> config;
  std::vector<ConfigIssue> issues;  // parse errors carry line/column in `message`
};

ConfigValidation validate_config(const std::filesystem::path& path);
/// Like validate_config but throws ConfigError on any issue.
SystemConfig load_config(const std::filesystem::path& path);

/// Applies "key=value" using config-file key names; throws ConfigError.
void apply_override(SystemConfig& config, std::string_view assignment);

/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const SystemConfig& config);

// ---------------------------------------------------------------------------
// Sweeps.
// ---------------------------------------------------------------------------

enum class SweepVariable { LambdaP, NP, NS, RPs, Beta, Alpha, SigmaPd };

std::string_view sweep_variable_name(SweepVariable v);
std::optional<SweepVariable> parse_sweep_variable(std::string_view name);

struct SimulationRequest {
  bool enabled = false;
  std::uint64_t n_slots = 1000000;
  std::vector<std::uint64_t> seeds{1};
};

struct ExperimentSpec {
  SystemConfig base;
  SweepVariable sweep_variable = SweepVariable::LambdaP;
  std::vector<double> sweep_values;
  std::vector<Method> methods{Method::Lp, Method::Cpt, Method::St};
  SimulationRequest simulate;
  OptimizerOptions optimizer;
  // r_ps sweeps: place S between P and D so r_sd = r_sr = r_pd - r_ps.
  bool couple_relay_distances = false;
  std::filesystem::path output_path;
};

/// Sets the swept field (sigma_pd is in dB). Throws ConfigError when the
/// value is outside the variable's domain.
void apply_sweep_value(SystemConfig& config, SweepVariable variable, double value,
                       bool couple_relay_distances = false);

/// Parses a spec file. `base` is an inline config object or `config` a path
/// relative to the spec file. Throws ConfigError.
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);
ExperimentSpec experiment_spec_from_json(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir = {});

struct SweepRow {
  double sweep_value = 0.0;
  Method method = Method::Lp;
  double mu_s = 0.0;
  double mu_p = 0.0;
  std::optional<double> mu_p_bar;
  bool feasible = false;
  std::optional<double> sim_mu_s;  // mean over seeds
  std::optional<double> sim_mu_p;
};

/// Rows ordered by sweep value ascending, then methods in lp, cpt, st order.
std::vector<SweepRow> sweep_rows(const ExperimentSpec& spec);

/// Metadata line starting with '#', CSV header, one line per row. Numbers
/// use 9 significant digits and '\n' line endings.
void write_sweep_csv(std::ostream& out, const ExperimentSpec& spec, const std::vector<SweepRow>& rows);

/// sweep_rows + write_sweep_csv to spec.output_path; throws std::runtime_error
/// if the file cannot be written.
std::vector<SweepRow> run_sweep(const ExperimentSpec& spec);

/// printf("%.9g") with "inf"/"nan" spelled out.
std::string format_number(double v);

// ---------------------------------------------------------------------------
// Single-point reports.
// ---------------------------------------------------------------------------

void print_evaluation(std::ostream& out, const SystemModel& model, const AccessPolicy& policy,
                      const PolicyEvaluation& ev);
void print_optimization(std::ostream& out, const SystemModel& model, const OptimizationResult& res);
void print_comparison(std::ostream& out, const ComparisonReport& report);

}  // namespace crelay
