#include "crelay/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

namespace crelay {

using nlohmann::json;

namespace {

struct Field {
  std::function<double&(SystemConfig&)> real;
  std::function<int&(SystemConfig&)> integer;
  bool decibel = false;  // value given in dB, stored linear
};

const std::map<std::string, Field, std::less<>>& fields() {
  static const auto table = [] {
    std::map<std::string, Field, std::less<>> t;
    auto real = [&](const char* name, double SystemConfig::*m) {
      t[name].real = [m](SystemConfig& c) -> double& { return c.*m; };
    };
    auto integer = [&](const char* name, int SystemConfig::*m) {
      t[name].integer = [m](SystemConfig& c) -> int& { return c.*m; };
    };
    real("pu_power", &SystemConfig::pu_power);
    real("su_power", &SystemConfig::su_power);
    real("slot_duration", &SystemConfig::slot_duration);
    real("beta", &SystemConfig::beta);
    real("alpha", &SystemConfig::alpha);
    real("bits_per_bandwidth", &SystemConfig::bits_per_bandwidth);
    real("noise_power", &SystemConfig::noise_power);
    real("path_loss_exponent", &SystemConfig::path_loss_exponent);
    real("pu_arrival_rate", &SystemConfig::pu_arrival_rate);
    real("loss_threshold", &SystemConfig::loss_threshold);
    integer("pu_queue_capacity", &SystemConfig::pu_queue_capacity);
    integer("relay_queue_capacity", &SystemConfig::relay_queue_capacity);
    for (Link l : kAllLinks) {
      const std::string suffix(link_name(l));
      t["distance_" + suffix].real = [l](SystemConfig& c) -> double& { return c.distance[l]; };
      t["mean_gain_" + suffix].real = [l](SystemConfig& c) -> double& { return c.mean_gain[l]; };
      Field db;
      db.real = t["mean_gain_" + suffix].real;
      db.decibel = true;
      t["mean_gain_" + suffix + "_db"] = db;
    }
    return t;
  }();
  return table;
}

void set_field(SystemConfig& config, const std::string& key, double value,
               std::vector<ConfigIssue>& issues) {
  const auto it = fields().find(key);
  if (it == fields().end()) {
    issues.push_back({key, "unknown key"});
    return;
  }
  const Field& f = it->second;
  if (!std::isfinite(value)) {
    issues.push_back({key, "must be a finite number"});
    return;
  }
  if (f.integer) {
    if (value != std::floor(value) || std::abs(value) > 1e9) {
      issues.push_back({key, "must be an integer"});
      return;
    }
    f.integer(config) = static_cast<int>(value);
  } else {
    f.real(config) = f.decibel ? db_to_linear(value) : value;
  }
}

void append_invariants(const SystemConfig& config, std::vector<ConfigIssue>& issues) {
  for (auto& issue : validate(config)) issues.push_back(std::move(issue));
}

std::optional<double> parse_double(std::string_view text) {
  std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

[[noreturn]] void fail(const std::string& field, const std::string& message) {
  throw ConfigError({{field, message}});
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> list)
    : std::runtime_error(list.empty() ? std::string("invalid configuration")
                                      : list.front().field + ": " + list.front().message),
      issues(std::move(list)) {}

SystemConfig config_from_json(const json& j) {
  if (!j.is_object()) fail("<root>", "config must be a JSON object");
  SystemConfig config;
  std::vector<ConfigIssue> issues;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number()) {
      issues.push_back({key, fields().count(key) ? "must be a number" : "unknown key"});
      continue;
    }
    set_field(config, key, value.get<double>(), issues);
  }
  append_invariants(config, issues);
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return config;
}

json config_to_json(const SystemConfig& c) {
  json j;
  j["pu_power"] = c.pu_power;
  j["su_power"] = c.su_power;
  j["slot_duration"] = c.slot_duration;
  j["beta"] = c.beta;
  j["alpha"] = c.alpha;
  j["bits_per_bandwidth"] = c.bits_per_bandwidth;
  j["noise_power"] = c.noise_power;
  j["path_loss_exponent"] = c.path_loss_exponent;
  for (Link l : kAllLinks) {
    j["distance_" + std::string(link_name(l))] = c.distance[l];
    j["mean_gain_" + std::string(link_name(l))] = c.mean_gain[l];
  }
  j["pu_arrival_rate"] = c.pu_arrival_rate;
  j["pu_queue_capacity"] = c.pu_queue_capacity;
  j["relay_queue_capacity"] = c.relay_queue_capacity;
  j["loss_threshold"] = c.loss_threshold;
  return j;
}

ConfigValidation validate_config(const std::filesystem::path& path) {
  ConfigValidation out;
  std::ifstream in(path);
  if (!in) {
    out.issues.push_back({path.string(), "cannot open file"});
    return out;
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    out.issues.push_back({path.string(), e.what()});
    return out;
  }
  try {
    out.config = config_from_json(j);
  } catch (const ConfigError& e) {
    out.issues = e.issues;
  }
  return out;
}

SystemConfig load_config(const std::filesystem::path& path) {
  ConfigValidation v = validate_config(path);
  if (!v.issues.empty()) throw ConfigError(std::move(v.issues));
  return *v.config;
}

void apply_override(SystemConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) fail(std::string(assignment), "override must look like key=value");
  const std::string key(assignment.substr(0, eq));
  const auto value = parse_double(assignment.substr(eq + 1));
  if (!value) fail(key, "value is not a number");
  std::vector<ConfigIssue> issues;
  SystemConfig updated = config;
  set_field(updated, key, *value, issues);
  append_invariants(updated, issues);
  if (!issues.empty()) throw ConfigError(std::move(issues));
  config = updated;
}

std::string config_hash(const SystemConfig& config) { return fnv1a_hex(config_to_json(config).dump()); }

std::string_view sweep_variable_name(SweepVariable v) {
  switch (v) {
    case SweepVariable::LambdaP: return "lambda_p";
    case SweepVariable::NP: return "n_p";
    case SweepVariable::NS: return "n_s";
    case SweepVariable::RPs: return "r_ps";
    case SweepVariable::Beta: return "beta";
    case SweepVariable::Alpha: return "alpha";
    case SweepVariable::SigmaPd: return "sigma_pd";
  }
  return "?";
}

std::optional<SweepVariable> parse_sweep_variable(std::string_view name) {
  for (auto v : {SweepVariable::LambdaP, SweepVariable::NP, SweepVariable::NS, SweepVariable::RPs,
                 SweepVariable::Beta, SweepVariable::Alpha, SweepVariable::SigmaPd})
    if (sweep_variable_name(v) == name) return v;
  return std::nullopt;
}

void apply_sweep_value(SystemConfig& config, SweepVariable variable, double value,
                       bool couple_relay_distances) {
  const std::string name(sweep_variable_name(variable));
  if (!std::isfinite(value)) fail(name, "sweep value must be finite");
  auto integral = [&] {
    if (value != std::floor(value) || value < 1 || value > 1e8) fail(name, "sweep value must be a positive integer");
    return static_cast<int>(value);
  };
  switch (variable) {
    case SweepVariable::LambdaP: config.pu_arrival_rate = value; break;
    case SweepVariable::NP: config.pu_queue_capacity = integral(); break;
    case SweepVariable::NS: config.relay_queue_capacity = integral(); break;
    case SweepVariable::RPs:
      config.distance[Link::PS] = value;
      if (couple_relay_distances) {
        const double rest = config.distance[Link::PD] - value;
        if (!(rest > 0.0)) fail(name, "r_ps must be below distance_pd when relay distances are coupled");
        config.distance[Link::SD] = rest;
        config.distance[Link::SR] = rest;
      }
      break;
    case SweepVariable::Beta: config.beta = value; break;
    case SweepVariable::Alpha: config.alpha = value; break;
    case SweepVariable::SigmaPd: config.mean_gain[Link::PD] = db_to_linear(value); break;
  }
  std::vector<ConfigIssue> issues;
  append_invariants(config, issues);
  if (!issues.empty()) {
    for (auto& i : issues) i.message += " (sweep " + name + " = " + format_number(value) + ")";
    throw ConfigError(std::move(issues));
  }
}

ExperimentSpec experiment_spec_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) fail("<root>", "spec must be a JSON object");
  static const std::vector<std::string> known{"base", "config", "overrides", "sweep_variable",
                                              "sweep_values", "sweep_range", "methods", "simulate",
                                              "grid_points", "search_mode", "couple_relay_distances",
                                              "output_path", "description"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) fail(key, "unknown spec key");

  ExperimentSpec spec;
  try {
    if (j.contains("base") && j.contains("config")) fail("base", "give either base or config, not both");
    if (j.contains("base")) spec.base = config_from_json(j.at("base"));
    if (j.contains("config")) spec.base = load_config(base_dir / j.at("config").get<std::string>());
    if (j.contains("overrides"))
      for (const auto& o : j.at("overrides")) apply_override(spec.base, o.get<std::string>());

    if (!j.contains("sweep_variable")) fail("sweep_variable", "missing");
    const auto variable = parse_sweep_variable(j.at("sweep_variable").get<std::string>());
    if (!variable) fail("sweep_variable", "must be one of lambda_p, n_p, n_s, r_ps, beta, alpha, sigma_pd");
    spec.sweep_variable = *variable;

    if (j.contains("sweep_values")) spec.sweep_values = j.at("sweep_values").get<std::vector<double>>();
    if (j.contains("sweep_range")) {
      const auto& r = j.at("sweep_range");
      const double start = r.at("start").get<double>();
      const double stop = r.at("stop").get<double>();
      const int count = r.at("count").get<int>();
      if (count < 1) fail("sweep_range", "count must be >= 1");
      for (int k = 0; k < count; ++k)
        spec.sweep_values.push_back(count == 1 ? start : start + (stop - start) * k / (count - 1));
    }
    if (spec.sweep_values.empty()) fail("sweep_values", "must be nonempty");
    std::sort(spec.sweep_values.begin(), spec.sweep_values.end());
    spec.sweep_values.erase(std::unique(spec.sweep_values.begin(), spec.sweep_values.end()),
                            spec.sweep_values.end());

    if (j.contains("methods")) {
      spec.methods.clear();
      for (const auto& m : j.at("methods")) {
        const auto method = parse_method(m.get<std::string>());
        if (!method) fail("methods", "unknown method " + m.get<std::string>());
        spec.methods.push_back(*method);
      }
      if (spec.methods.empty()) fail("methods", "must be nonempty");
      std::sort(spec.methods.begin(), spec.methods.end());
      spec.methods.erase(std::unique(spec.methods.begin(), spec.methods.end()), spec.methods.end());
    }

    if (j.contains("simulate")) {
      const auto& s = j.at("simulate");
      spec.simulate.enabled = s.value("enabled", true);
      spec.simulate.n_slots = s.value("n_slots", spec.simulate.n_slots);
      if (s.contains("seeds")) spec.simulate.seeds = s.at("seeds").get<std::vector<std::uint64_t>>();
      if (spec.simulate.n_slots < 1) fail("simulate.n_slots", "must be >= 1");
      if (spec.simulate.seeds.empty()) fail("simulate.seeds", "must be nonempty");
    }
    spec.optimizer.grid_points = j.value("grid_points", spec.optimizer.grid_points);
    if (spec.optimizer.grid_points < 1) fail("grid_points", "must be >= 1");
    const std::string mode = j.value("search_mode", std::string("fixed_point"));
    if (mode == "fixed_point")
      spec.optimizer.mode = SearchMode::FixedPoint;
    else if (mode == "mu_sweep")
      spec.optimizer.mode = SearchMode::MuSweep;
    else
      fail("search_mode", "must be fixed_point or mu_sweep");
    spec.couple_relay_distances = j.value("couple_relay_distances", false);
    if (j.contains("output_path")) spec.output_path = base_dir / j.at("output_path").get<std::string>();
  } catch (const json::exception& e) {
    fail("<spec>", e.what());
  }

  // Every sweep value must produce a valid config.
  for (double v : spec.sweep_values) {
    SystemConfig probe = spec.base;
    apply_sweep_value(probe, spec.sweep_variable, v, spec.couple_relay_distances);
  }
  return spec;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(path.string(), "cannot open file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(path.string(), e.what());
  }
  return experiment_spec_from_json(j, path.parent_path());
}

std::vector<SweepRow> sweep_rows(const ExperimentSpec& spec) {
  std::vector<double> values = spec.sweep_values;
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<Method> methods = spec.methods;
  std::sort(methods.begin(), methods.end());
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());

  std::vector<SweepRow> rows;
  for (double v : values) {
    SystemConfig config = spec.base;
    apply_sweep_value(config, spec.sweep_variable, v, spec.couple_relay_distances);
    const SystemModel model(config);
    for (Method m : methods) {
      const OptimizationResult res = optimize(model, m, spec.optimizer);
      SweepRow row;
      row.sweep_value = v;
      row.method = m;
      row.feasible = !res.pu_infeasible && res.evaluation.feasible;
      row.mu_s = row.feasible ? res.mu_s : 0.0;
      row.mu_p = res.evaluation.mu_p;
      row.mu_p_bar = model.mu_p_bar;
      if (spec.simulate.enabled && row.feasible) {
        double mu_s = 0.0;
        double mu_p = 0.0;
        for (std::uint64_t seed : spec.simulate.seeds) {
          const SimStats st = simulate(config, model.budget, res.policy, spec.simulate.n_slots, seed);
          mu_s += st.measured_mu_s;
          mu_p += st.measured_mu_p;
        }
        row.sim_mu_s = mu_s / static_cast<double>(spec.simulate.seeds.size());
        row.sim_mu_p = mu_p / static_cast<double>(spec.simulate.seeds.size());
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_sweep_csv(std::ostream& out, const ExperimentSpec& spec, const std::vector<SweepRow>& rows) {
  out << "# crelay " << kToolVersion << " config_hash=" << config_hash(spec.base)
      << " sweep=" << sweep_variable_name(spec.sweep_variable)
      << " grid_points=" << spec.optimizer.grid_points
      << " search_mode=" << (spec.optimizer.mode == SearchMode::MuSweep ? "mu_sweep" : "fixed_point");
  if (spec.simulate.enabled) {
    out << " n_slots=" << spec.simulate.n_slots << " seeds=";
    for (std::size_t k = 0; k < spec.simulate.seeds.size(); ++k)
      out << (k ? ";" : "") << spec.simulate.seeds[k];
  }
  out << '\n';

  out << "sweep_value,method,mu_s,mu_p,mu_p_bar,feasible";
  if (spec.simulate.enabled) out << ",sim_mu_s,sim_mu_p,gap_mu_s,gap_mu_p";
  out << '\n';

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  for (const SweepRow& r : rows) {
    out << format_number(r.sweep_value) << ',' << method_name(r.method) << ',' << format_number(r.mu_s)
        << ',' << format_number(r.mu_p) << ',' << format_number(r.mu_p_bar.value_or(inf)) << ','
        << (r.feasible ? "true" : "false");
    if (spec.simulate.enabled) {
      const double sim_s = r.sim_mu_s.value_or(nan);
      const double sim_p = r.sim_mu_p.value_or(nan);
      out << ',' << format_number(sim_s) << ',' << format_number(sim_p) << ','
          << format_number(std::abs(sim_s - r.mu_s)) << ',' << format_number(std::abs(sim_p - r.mu_p));
    }
    out << '\n';
  }
}

std::vector<SweepRow> run_sweep(const ExperimentSpec& spec) {
  if (spec.output_path.empty()) throw std::runtime_error("run_sweep: no output path");
  std::vector<SweepRow> rows = sweep_rows(spec);
  std::ostringstream buffer;
  write_sweep_csv(buffer, spec, rows);
  std::ofstream out(spec.output_path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + spec.output_path.string());
  out << buffer.str();
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + spec.output_path.string());
  return rows;
}

namespace {

void print_vector(std::ostream& out, const char* name, const Eigen::VectorXd& v) {
  out << name << ':';
  for (Eigen::Index k = 0; k < v.size(); ++k) out << ' ' << format_number(v(k));
  out << '\n';
}

}  // namespace

void print_evaluation(std::ostream& out, const SystemModel& model, const AccessPolicy& policy,
                      const PolicyEvaluation& ev) {
  const LinkBudget& b = model.budget;
  out << "theta_pd: " << format_number(b.theta_pd) << '\n'
      << "theta_ps: " << format_number(b.theta_ps) << '\n'
      << "theta_sd: " << format_number(b.theta_sd) << '\n'
      << "theta_sd_shared: " << format_number(b.theta_sd_shared) << '\n'
      << "theta_sr: " << format_number(b.theta_sr) << '\n'
      << "theta_sr_shared: " << format_number(b.theta_sr_shared) << '\n';
  print_vector(out, "policy", policy.probs());
  out << "mu_p: " << format_number(ev.mu_p) << '\n'
      << "mu_p_bar: " << (ev.mu_p_bar ? format_number(*ev.mu_p_bar) : std::string("unattainable")) << '\n'
      << "mu_s: " << format_number(ev.mu_s) << '\n'
      << "feasible: " << (ev.feasible ? "true" : "false") << '\n'
      << "relay_arrival_prob: " << format_number(ev.relay_state.arrival_prob) << '\n'
      << "pu_busy: " << format_number(ev.pu_state.busy) << '\n'
      << "pu_full: " << format_number(ev.pu_state.full) << '\n'
      << "fixed_point_iterations: " << ev.iterations << '\n';
  print_vector(out, "pi", ev.relay_state.occupancy);
}

void print_optimization(std::ostream& out, const SystemModel& model, const OptimizationResult& res) {
  out << "method: " << method_name(res.method) << '\n'
      << "status: " << (res.pu_infeasible ? "pu_infeasible" : "ok") << '\n'
      << "reported_mu_s: " << format_number(res.mu_s) << '\n'
      << "swept_mu_p: " << format_number(res.swept_mu_p) << '\n';
  if (res.method == Method::Lp && !res.pu_infeasible)
    out << "lp_objective: " << format_number(res.lp_objective) << '\n';
  if (res.method == Method::St && !res.pu_infeasible) {
    int threshold = 0;
    for (int n = 1; n <= res.policy.capacity(); ++n)
      if (res.policy[n] == 1.0) threshold = n;
    out << "threshold: " << threshold << '\n';
  }
  if (res.method == Method::Cpt && !res.pu_infeasible)
    out << "p: " << format_number(res.policy[1]) << '\n'
        << "unimodal: " << (res.unimodal ? "true" : "false") << '\n';
  print_evaluation(out, model, res.policy, res.evaluation);
}

void print_comparison(std::ostream& out, const ComparisonReport& report) {
  out << "analytic_mu_s: " << format_number(report.analytic.mu_s) << '\n'
      << "analytic_mu_p: " << format_number(report.analytic.mu_p) << '\n'
      << "analytic_pu_full: " << format_number(report.analytic_full) << '\n';
  for (const SeedComparison& s : report.seeds) {
    out << "seed " << s.stats.rng_seed << ": sim_mu_s=" << format_number(s.stats.measured_mu_s)
        << " sim_mu_p=" << format_number(s.stats.measured_mu_p)
        << " sim_full=" << format_number(s.stats.measured_full_fraction)
        << " sim_block=" << format_number(s.stats.measured_block_fraction)
        << " gap_mu_s=" << format_number(s.gap_mu_s) << "(+-" << format_number(s.half_width_mu_s) << ")"
        << " gap_mu_p=" << format_number(s.gap_mu_p) << "(+-" << format_number(s.half_width_mu_p) << ")"
        << " gap_full=" << format_number(s.gap_full) << "(+-" << format_number(s.half_width_full) << ")"
        << " tv_pi=" << format_number(s.tv_pi) << "(<=" << format_number(s.tv_pi_bound) << ")"
        << " within_bounds=" << (s.within_bounds() ? "true" : "false") << '\n';
  }
}

}  // namespace crelay
