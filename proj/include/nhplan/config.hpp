#pragma once

#include "nhplan/scenario.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>

namespace nhplan {

using Json = nlohmann::json;

/// Invalid configuration document. `field()` is the dotted path of the
/// offending value, e.g. "capacity.eta".
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// What a run needs besides the cohort itself.
struct RunRequest {
  std::string cohort;  // cohort id; empty selects the bundled sample
  ScenarioSpec scenario;
  PlanConfig plan;
};

// Documents. Unknown keys are rejected; missing keys keep their defaults.
CapacityConfig capacity_config_from_json(const Json& j, const std::string& path = "capacity");
PlanConfig plan_config_from_json(const Json& j);  // reads "seed", "capacity", "workforce"
ScenarioSpec scenario_from_json(const Json& j, const std::string& path = "scenario");
RunRequest run_request_from_json(const Json& j);

Json to_json(const CapacityConfig& c);
Json to_json(const PatternConfig& p, const CostConfig& c, int planning_first_day);
Json to_json(const ScenarioSpec& s);
Json to_json(const RunRequest& r);
Json to_json(const CapacityResult& r);
Json to_json(const ScenarioRow& r);
Json to_json(const ScenarioComparison& c);
Json plan_summary(const PlanResult& r);

// Fitted models.
/// Baselines are stored as jump lists: {"max_day", "jumps": [[day, increment], ...]}.
Json to_json(const CompetingRiskModel& m);
CompetingRiskModel competing_risk_from_json(const Json& j);
Json to_json(const CountModel& m);
CountModel count_model_from_json(const Json& j);
Json to_json(const NeedGroupTable& t);
NeedGroupTable need_table_from_json(const Json& j);

/// Model file written by `fit`: every fitted input model plus diagnostics.
Json models_document(const PlanningFit& fit);
/// SimModels from a model file; the covariate pool is left empty.
SimModels sim_models_from_json(const Json& j);

}  // namespace nhplan
