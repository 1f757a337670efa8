#include "nhplan/scenario.hpp"

#include <stdexcept>

namespace nhplan {

PlanningFit fit_planning_models(const Cohort& cohort, const RawGroupTable& groups) {
  PlanningFit f;
  const Cohort settled = settled_cohort(cohort);
  f.short_stay = fit_competing_risk_model(settled);
  f.single_disposition = fit_single_disposition_variant(settled);
  f.long_stay = fit_long_stay(cohort);
  f.arrivals = fit_arrival_fits(cohort);
  f.models.arrivals = {f.arrivals.short_stay.model, f.arrivals.long_stay.model};
  f.models.short_los = f.short_stay.model;
  f.models.long_los = f.long_stay.model;
  f.models.needs = cluster_groups(groups);
  f.models.pool = cohort.residents();
  return f;
}

void PlanConfig::validate() const {
  capacity.validate();
  patterns.validate();
  cost.validate();
  if (patterns.horizon_days > capacity.horizon_days)
    throw std::invalid_argument("horizon_days: staffing horizon is longer than the simulated horizon");
  if (planning_first_day < 0 || planning_first_day - 1 + patterns.horizon_days > capacity.horizon_days)
    throw std::invalid_argument("planning_first_day: staffing horizon must fit inside the simulated horizon");
}

int PlanConfig::first_day() const {
  return planning_first_day > 0 ? planning_first_day : capacity.horizon_days - patterns.horizon_days + 1;
}

PlanResult plan_facility(const SimModels& models, const PlanConfig& cfg, const PatternMatrix& patterns,
                         const std::string& scenario_id) {
  cfg.validate();
  if (patterns.days() != cfg.patterns.horizon_days)
    throw std::invalid_argument("patterns: horizon differs from the pattern configuration");
  PlanResult out;
  out.scenario_id = scenario_id;
  CapacityConfig cap = cfg.capacity;
  cap.seed = cfg.seed;
  out.capacity = optimize_capacity(models, cap);

  SimConfig sim;
  sim.horizon_days = cfg.capacity.horizon_days;
  sim.capacity = out.capacity.kappa;
  sim.replications = cfg.cost.saa_samples;
  sim.base_seed = make_stream(cfg.seed, 0, streams::kPlanning)();
  for (int j = 0; j < sim.replications; ++j)
    out.traces.push_back(run_replication(models, sim, static_cast<std::uint64_t>(j)));
  const DemandSamples xi = demand_samples(out.traces, cfg.first_day(), cfg.patterns.horizon_days);
  SolveOptions opt;
  opt.exact_pattern_limit = 0;
  opt.warm_starts.push_back(solve_saa(patterns, xi.colwise().mean(), cfg.cost, opt).x);
  out.staffing = solve_saa(patterns, xi, cfg.cost, opt);
  return out;
}

ScenarioRow scenario_row(const PlanResult& result) {
  ScenarioRow row;
  row.scenario_id = result.scenario_id;
  row.kappa = result.capacity.kappa;
  row.total_cost = result.staffing.cost.total();
  row.planned_cost = result.staffing.cost.planned;
  row.understaffing_cost = result.staffing.cost.understaffing;
  row.overstaffing_cost = result.staffing.cost.overstaffing;
  row.gap = result.staffing.gap;
  return row;
}

ScenarioComparison scenario_compare(const Cohort& cohort, const std::vector<ScenarioSpec>& scenarios,
                                    const PlanConfig& cfg, const RawGroupTable& groups) {
  cfg.validate();
  for (const auto& s : scenarios) s.validate();
  const PlanningFit fit = fit_planning_models(cohort, groups);
  const PatternMatrix patterns = generate_patterns(cfg.patterns);
  ScenarioComparison out;
  for (const auto& s : scenarios) {
    SimModels models = fit.models;
    models.pool = apply_scenario(cohort, s, cfg.seed).residents();
    out.rows.push_back(scenario_row(plan_facility(models, cfg, patterns, s.id)));
  }
  return out;
}

}  // namespace nhplan
