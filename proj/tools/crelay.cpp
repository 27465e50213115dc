// crelay: evaluate, optimize, simulate and sweep cognitive-relay access policies.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "crelay/experiments.hpp"

using namespace crelay;

namespace {

// Single machine-readable line on stderr.
int report_error(const std::string& kind, const std::string& message, const std::string& field = {}) {
  nlohmann::json j{{"error", kind}, {"message", message}};
  if (!field.empty()) j["field"] = field;
  std::cerr << j.dump() << '\n';
  return 1;
}

struct PolicyChoice {
  std::string explicit_probs;  // "1,0.5,0.5"
  std::optional<double> constant;
  std::optional<int> step;
  std::string method;

  void add_to(CLI::App* app, bool allow_method) {
    app->add_option("--policy", explicit_probs, "Comma-separated p_0..p_N (p_0 = 1)");
    app->add_option("--constant", constant, "Constant access probability for n >= 1");
    app->add_option("--step", step, "Step policy threshold N_th");
    if (allow_method) app->add_option("--method", method, "Use the policy optimized by lp, cpt or st");
  }

  std::optional<AccessPolicy> resolve(const SystemModel& model) const {
    const int n_s = model.config.relay_queue_capacity;
    if (!explicit_probs.empty()) {
      std::vector<double> values;
      std::stringstream ss(explicit_probs);
      std::string item;
      while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
      if (static_cast<int>(values.size()) != n_s + 1)
        throw std::invalid_argument("--policy needs relay_queue_capacity + 1 = " + std::to_string(n_s + 1) +
                                    " entries");
      return AccessPolicy(Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
    }
    if (constant) return AccessPolicy::constant(n_s, *constant);
    if (step) return AccessPolicy::step(n_s, *step);
    if (!method.empty()) {
      const auto m = parse_method(method);
      if (!m) throw std::invalid_argument("--method must be lp, cpt or st");
      return optimize(model, *m).policy;
    }
    return std::nullopt;
  }
};

std::vector<std::uint64_t> seed_list(std::uint64_t seed, const std::vector<std::uint64_t>& seeds) {
  return seeds.empty() ? std::vector<std::uint64_t>{seed} : seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectrum-access policies for a cognitive relay with finite buffers"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "Config file (JSON, flat keys)");
  app.add_option("--set", overrides, "Override a config key: key=value (repeatable)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score an explicit policy");
  PolicyChoice eval_policy;
  eval_policy.add_to(evaluate, false);
  bool eval_simulate = false;
  std::uint64_t eval_slots = 1000000;
  std::vector<std::uint64_t> eval_seeds;
  evaluate->add_flag("--simulate", eval_simulate, "Also compare against simulation");
  evaluate->add_option("--slots", eval_slots, "Simulated slots");
  evaluate->add_option("--seeds", eval_seeds, "Simulation seeds")->delimiter(',');

  // optimize
  auto* optimize_cmd = app.add_subcommand("optimize", "Compute the best policy of a method");
  std::string method_name_arg = "lp";
  int grid_points = OptimizerOptions{}.grid_points;
  std::string mode = "fixed_point";
  bool opt_simulate = false;
  std::uint64_t opt_slots = 1000000;
  std::vector<std::uint64_t> opt_seeds;
  optimize_cmd->add_option("--method", method_name_arg, "lp | cpt | st")
      ->check(CLI::IsMember({"lp", "cpt", "st"}));
  optimize_cmd->add_option("--grid", grid_points, "Interior mu_P grid points");
  optimize_cmd->add_option("--mode", mode, "fixed_point | mu_sweep")
      ->check(CLI::IsMember({"fixed_point", "mu_sweep"}));
  optimize_cmd->add_flag("--simulate", opt_simulate, "Also compare against simulation");
  optimize_cmd->add_option("--slots", opt_slots, "Simulated slots");
  optimize_cmd->add_option("--seeds", opt_seeds, "Simulation seeds")->delimiter(',');

  // simulate
  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo run against the analytic model");
  PolicyChoice sim_policy;
  sim_policy.method = "lp";
  sim_policy.add_to(simulate_cmd, true);
  std::uint64_t slots = 1000000;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds;
  std::uint64_t warmup = SimOptions{}.warmup_slots;
  simulate_cmd->add_option("--slots", slots, "Measured slots")->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--seed", seed, "RNG seed");
  simulate_cmd->add_option("--seeds", seeds, "Several seeds (comma separated)")->delimiter(',');
  simulate_cmd->add_option("--warmup", warmup, "Discarded warm-up slots");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run an experiment spec and write CSV");
  std::string spec_path;
  std::string output_override;
  sweep->add_option("--spec", spec_path, "Experiment spec (JSON)")->required();
  sweep->add_option("--output", output_override, "Write CSV here instead of the spec's output_path ('-' = stdout)");

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "Check a config file and print it normalized");
  std::string validate_path;
  validate_cmd->add_option("file", validate_path, "Config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return 2;
  }

  try {
    if (*validate_cmd) {
      const ConfigValidation v = validate_config(validate_path);
      if (!v.issues.empty()) {
        for (const auto& issue : v.issues) report_error("config", issue.message, issue.field);
        return 1;
      }
      std::cout << config_to_json(*v.config).dump(2) << '\n';
      return 0;
    }

    if (*sweep) {
      ExperimentSpec spec = load_experiment_spec(spec_path);
      for (const auto& o : overrides) apply_override(spec.base, o);
      if (output_override == "-") {
        write_sweep_csv(std::cout, spec, sweep_rows(spec));
        return 0;
      }
      if (!output_override.empty()) spec.output_path = output_override;
      run_sweep(spec);
      std::cout << "wrote " << spec.output_path.string() << '\n';
      return 0;
    }

    SystemConfig config = config_path.empty() ? SystemConfig{} : load_config(config_path);
    for (const auto& o : overrides) apply_override(config, o);
    const SystemModel model(config);

    if (*evaluate) {
      const auto policy = eval_policy.resolve(model);
      if (!policy) return report_error("usage", "evaluate needs --policy, --constant or --step");
      print_evaluation(std::cout, model, *policy, evaluate_policy(model, *policy));
      if (eval_simulate) print_comparison(std::cout, compare(config, *policy, eval_slots, seed_list(1, eval_seeds)));
      return 0;
    }

    if (*optimize_cmd) {
      OptimizerOptions options;
      options.grid_points = grid_points;
      options.mode = mode == "mu_sweep" ? SearchMode::MuSweep : SearchMode::FixedPoint;
      const OptimizationResult res = optimize(model, *parse_method(method_name_arg), options);
      print_optimization(std::cout, model, res);
      if (opt_simulate)
        print_comparison(std::cout, compare(config, res.policy, opt_slots, seed_list(1, opt_seeds)));
      return 0;
    }

    if (*simulate_cmd) {
      const auto policy = sim_policy.resolve(model);
      SimOptions options;
      options.warmup_slots = warmup;
      print_comparison(std::cout, compare(config, *policy, slots, seed_list(seed, seeds), options));
      return 0;
    }
  } catch (const ConfigError& e) {
    for (const auto& issue : e.issues) report_error("config", issue.message, issue.field);
    return 1;
  } catch (const ConvergenceError& e) {
    return report_error("convergence", e.what());
  } catch (const std::exception& e) {
    return report_error("runtime", e.what());
  }
  return 0;
}
