#pragma once

#include "nhplan/capacity.hpp"
#include "nhplan/cohort.hpp"
#include "nhplan/need.hpp"
#include "nhplan/sim.hpp"
#include "nhplan/workforce.hpp"

#include <string>
#include <vector>

namespace nhplan {

/// Everything fitted from one cohort.
struct PlanningFit {
  SimModels models;
  CompetingRiskFit short_stay;
  CompetingRiskFit single_disposition;
  LongStayFit long_stay;
  ArrivalFits arrivals;
};

/// Competing-risk and single-disposition LOS fits on the settled residents,
/// long-stay fit on all residents, arrivals, clustered need groups, and the
/// cohort itself as covariate pool.
PlanningFit fit_planning_models(const Cohort& cohort, const RawGroupTable& groups = bundled_group_table());

struct PlanConfig {
  CapacityConfig capacity;
  PatternConfig patterns;
  CostConfig cost;
  /// First simulated day of the staffing horizon; 0 puts the horizon at the
  /// end of the simulated year.
  int planning_first_day = 0;
  std::uint64_t seed = 1;

  void validate() const;
  int first_day() const;
};

struct PlanResult {
  std::string scenario_id;
  CapacityResult capacity;
  StaffPlan staffing;
  std::vector<DemandTrace> traces;  // demand ensemble at the chosen capacity
};

/// Capacity search, then a staffing plan for demand simulated at that capacity.
PlanResult plan_facility(const SimModels& models, const PlanConfig& cfg, const PatternMatrix& patterns,
                         const std::string& scenario_id = "S1");

struct ScenarioRow {
  std::string scenario_id;
  int kappa = 0;
  double total_cost = 0.0;    // planning horizon, sample average
  double planned_cost = 0.0;  // planning horizon
  double understaffing_cost = 0.0;
  double overstaffing_cost = 0.0;
  double gap = 0.0;
};

struct ScenarioComparison {
  std::vector<ScenarioRow> rows;
};

ScenarioRow scenario_row(const PlanResult& result);

/// LOS, arrival and need models are fitted once on `cohort`; each scenario
/// only transforms the covariate pool that arrivals are drawn from.
ScenarioComparison scenario_compare(const Cohort& cohort, const std::vector<ScenarioSpec>& scenarios,
                                    const PlanConfig& cfg, const RawGroupTable& groups = bundled_group_table());

}  // namespace nhplan
