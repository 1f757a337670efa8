#include "nhplan/service.hpp"
#include "nhplan/synthetic.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace nhplan;

namespace {

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw std::runtime_error(path + " is not valid JSON");
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

Cohort load_cohort(const std::string& path) { return path.empty() ? bundled_cohort() : ingest_cohort(path); }

SimModels load_models(const std::string& models_path, const Cohort& cohort) {
  SimModels m = models_path.empty() ? fit_planning_models(cohort).models : sim_models_from_json(read_json_file(models_path));
  m.pool = cohort.residents();
  return m;
}

// "S1..S6" or "S1,S3,S4".
std::vector<ScenarioSpec> parse_scenarios(const std::string& text) {
  std::vector<ScenarioSpec> out;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const std::string a = text.substr(0, dots);
    const std::string b = text.substr(dots + 2);
    if (a.size() < 2 || b.size() < 2 || a[0] != 'S' || b[0] != 'S') throw ConfigError("scenarios", "bad range " + text);
    const int lo = std::stoi(a.substr(1));
    const int hi = std::stoi(b.substr(1));
    for (int k = lo; k <= hi; ++k) out.push_back(preset_scenario("S" + std::to_string(k)));
    return out;
  }
  std::istringstream in(text);
  std::string id;
  while (std::getline(in, id, ','))
    if (!id.empty()) out.push_back(preset_scenario(id));
  return out;
}

int fail(const std::string& field, const std::string& message) {
  Json err = {{"message", message}};
  if (!field.empty()) err["field"] = field;
  std::cerr << Json{{"error", err}}.dump() << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nursing home capacity and staffing planner"};
  app.require_subcommand(1);

  std::string cohort_path;
  std::string models_path;
  std::string out_path;
  std::uint64_t seed = 1;
  std::string config_path;

  auto* fit = app.add_subcommand("fit", "Fit LOS, arrival and need-group models");
  std::string groups_path;
  fit->add_option("--cohort", cohort_path, "Cohort CSV (default: bundled sample)");
  fit->add_option("--groups", groups_path, "Staff-time group table CSV (default: bundled)");
  fit->add_option("--out", out_path, "Model file to write")->required();

  auto* simulate = app.add_subcommand("simulate", "Simulate census and staff-time demand");
  int capacity = 1'000'000;
  int replications = 100;
  int horizon = 365;
  simulate->add_option("--cohort", cohort_path, "Covariate pool CSV (default: bundled sample)");
  simulate->add_option("--models", models_path, "Model file from fit (default: fit the cohort)");
  simulate->add_option("--capacity", capacity, "Bed capacity");
  simulate->add_option("-r,--replications", replications, "Replications");
  simulate->add_option("-T,--horizon", horizon, "Days per replication");
  simulate->add_option("--seed", seed, "Base seed");
  simulate->add_option("--out", out_path, "Band CSV to write")->required();

  auto* cap = app.add_subcommand("capacity", "Find the smallest capacity meeting the acceptance target");
  CapacityConfig cap_cfg;
  int kappa0 = 0;
  bool no_sweep = false;
  cap->add_option("--cohort", cohort_path, "Covariate pool CSV (default: bundled sample)");
  cap->add_option("--models", models_path, "Model file from fit (default: fit the cohort)");
  cap->add_option("--kappa0", kappa0, "Starting capacity (default: arrivals x mean LOS)");
  cap->add_option("--tau-c", cap_cfg.tau_c, "Acceptance target per replication");
  cap->add_option("--eta", cap_cfg.eta, "Required probability of meeting the target");
  cap->add_option("-N,--max-iterations", cap_cfg.max_iterations, "Iteration limit");
  cap->add_option("-r,--replications", cap_cfg.replications, "Replications per estimate");
  cap->add_option("-T,--horizon", cap_cfg.horizon_days, "Days per replication");
  cap->add_flag("--no-sweep", no_sweep, "Skip the minimality sweep");
  cap->add_option("--seed", seed, "Base seed");

  auto* staff = app.add_subcommand("staff", "Staffing plan by sample average approximation");
  int staff_capacity = 0;
  staff->add_option("--cohort", cohort_path, "Covariate pool CSV (default: bundled sample)");
  staff->add_option("--models", models_path, "Model file from fit (default: fit the cohort)");
  staff->add_option("--capacity", staff_capacity, "Bed capacity")->required();
  staff->add_option("--config", config_path, "JSON with a \"workforce\" object");
  staff->add_option("--seed", seed, "Base seed");
  staff->add_option("--out", out_path, "Plan CSV to write");

  auto* scenario = app.add_subcommand("scenario", "Scenario comparison");
  scenario->require_subcommand(1);
  auto* scenario_run = scenario->add_subcommand("run", "Plan every scenario and print the comparison table");
  std::string scenario_list = "S1..S6";
  scenario_run->add_option("--scenarios", scenario_list, "S1..S6 or a comma list");
  scenario_run->add_option("--cohort", cohort_path, "Cohort CSV (default: bundled sample)");
  scenario_run->add_option("--config", config_path, "Run request JSON (capacity/workforce/seed)");
  auto* seed_opt = scenario_run->add_option("--seed", seed, "Base seed");
  scenario_run->add_option("--out", out_path, "Comparison JSON to write");

  auto* serve_cmd = app.add_subcommand("serve", "HTTP API");
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string store_dir = "nhplan-runs";
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--port", port, "Port")->envname("NHPLAN_PORT");
  serve_cmd->add_option("--store", store_dir, "Run store directory");

  auto* synth = app.add_subcommand("synth", "Write a synthetic cohort CSV");
  std::size_t n = 677;
  synth->add_option("-n", n, "Residents");
  synth->add_option("--seed", seed, "Seed");
  synth->add_option("--out", out_path, "Cohort CSV to write")->required();

  auto* groups = app.add_subcommand("groups", "Write the bundled staff-time group table");
  groups->add_option("--out", out_path, "CSV to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (*fit) {
      const Cohort c = load_cohort(cohort_path);
      const PlanningFit f = fit_planning_models(c, groups_path.empty() ? bundled_group_table() : load_group_table(groups_path));
      write_text(out_path, models_document(f).dump(2) + "\n");
      Json summary = {{"residents", c.size()},
                      {"settled_residents", settled_cohort(c).size()},
                      {"short_stay_converged", {f.short_stay.fits.at(0).converged, f.short_stay.fits.at(1).converged}},
                      {"long_stay", {{"log_mean", f.long_stay.model.log_mean}, {"log_sd", f.long_stay.model.log_sd},
                                     {"gof_p", f.long_stay.goodness_of_fit.p_value}}},
                      {"arrivals_per_day", {{"short_stay", f.models.arrivals.short_stay.mean()},
                                            {"long_stay", f.models.arrivals.long_stay.mean()}}},
                      {"need_clusters", f.models.needs.count()},
                      {"models", out_path}};
      std::cout << summary.dump(2) << "\n";
    } else if (*simulate) {
      const Cohort c = load_cohort(cohort_path);
      const SimModels m = load_models(models_path, c);
      SimConfig cfg;
      cfg.capacity = capacity;
      cfg.replications = replications;
      cfg.horizon_days = horizon;
      cfg.base_seed = seed;
      const Ensemble e = run_ensemble(m, cfg);
      std::ostringstream out;
      write_band_csv(out, e.traces);
      write_text(out_path, out.str());
      std::cout << Json{{"replications", replications},
                        {"final_census_mean", e.census.mean.back()},
                        {"final_demand_mean", e.demand.mean.back()},
                        {"trace", out_path}}
                       .dump(2)
                << "\n";
    } else if (*cap) {
      const Cohort c = load_cohort(cohort_path);
      const SimModels m = load_models(models_path, c);
      if (kappa0 > 0) cap_cfg.kappa0 = kappa0;
      cap_cfg.minimality_sweep = !no_sweep;
      cap_cfg.seed = seed;
      std::cout << to_json(optimize_capacity(m, cap_cfg)).dump(2) << "\n";
    } else if (*staff) {
      const Cohort c = load_cohort(cohort_path);
      const SimModels m = load_models(models_path, c);
      Json cfg_doc = config_path.empty() ? Json::object() : read_json_file(config_path);
      Json plan_doc = Json::object();
      if (cfg_doc.contains("workforce")) plan_doc["workforce"] = cfg_doc["workforce"];
      plan_doc["seed"] = seed;
      const PlanConfig plan = plan_config_from_json(plan_doc);
      SimConfig sim;
      sim.capacity = staff_capacity;
      sim.horizon_days = plan.capacity.horizon_days;
      sim.replications = plan.cost.saa_samples;
      sim.base_seed = make_stream(seed, 0, streams::kPlanning)();
      std::vector<DemandTrace> traces;
      for (int j = 0; j < sim.replications; ++j) traces.push_back(run_replication(m, sim, static_cast<std::uint64_t>(j)));
      const PatternMatrix patterns = generate_patterns(plan.patterns);
      SolveOptions opt;
      opt.exact_pattern_limit = 0;
      const VssResult v = value_of_stochastic_solution(
          patterns, demand_samples(traces, plan.first_day(), plan.patterns.horizon_days), plan.cost, opt);
      if (!out_path.empty()) {
        std::ostringstream out;
        write_plan(out, patterns, v.stochastic);
        write_text(out_path, out.str());
      }
      std::cout << Json{{"patterns", patterns.patterns()},
                        {"staff", v.stochastic.x.sum()},
                        {"planned_cost", v.stochastic.cost.planned},
                        {"understaffing_cost", v.stochastic.cost.understaffing},
                        {"overstaffing_cost", v.stochastic.cost.overstaffing},
                        {"total_cost", v.stochastic.cost.total()},
                        {"lower_bound", v.stochastic.lower_bound},
                        {"gap", v.stochastic.gap},
                        {"expected_value_plan_cost", v.expected_value_cost.total()},
                        {"vss", v.vss}}
                       .dump(2)
                << "\n";
    } else if (*scenario_run) {
      Json doc = config_path.empty() ? Json::object() : read_json_file(config_path);
      if (seed_opt->count() > 0) doc["seed"] = seed;
      const RunRequest base = run_request_from_json(doc);
      const Cohort c = load_cohort(cohort_path);
      const ScenarioComparison cmp = scenario_compare(c, parse_scenarios(scenario_list), base.plan);
      const std::string text = to_json(cmp).dump(2) + "\n";
      if (!out_path.empty()) write_text(out_path, text);
      std::cout << text;
    } else if (*serve_cmd) {
      RunStore store(store_dir);
      std::cerr << "listening on " << host << ":" << port << "\n";
      return serve(store, host, port);
    } else if (*synth) {
      save_cohort(out_path, generate_synthetic_cohort(n, MarginalSpec::defaults(), seed));
    } else if (*groups) {
      std::ofstream out(out_path);
      write_group_table(out, bundled_group_table());
    }
  } catch (const ConfigError& e) {
    return fail(e.field(), e.what());
  } catch (const std::exception& e) {
    return fail("", e.what());
  }
  return 0;
}
