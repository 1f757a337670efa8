#include "nhplan/config.hpp"

#include <algorithm>
#include <initializer_list>

namespace nhplan {

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "$" : path, "expected an object");
}

void check_keys(const Json& j, const std::string& path, std::initializer_list<const char*> keys) {
  require_object(j, path);
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
      throw ConfigError(join(path, k), "unknown field");
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out, const std::string& path) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError(join(path, key), "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw ConfigError(join(path, key), "expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw ConfigError(join(path, key), "expected a number");
    }
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(join(path, key), "wrong type");
  }
}

// Validation messages look like "eta: must ...".
template <typename F>
void validated(const std::string& path, F&& check) {
  try {
    check();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    if (colon == std::string::npos) throw ConfigError(path, msg);
    const std::size_t start = colon + 1 < msg.size() && msg[colon + 1] == ' ' ? colon + 2 : colon + 1;
    throw ConfigError(join(path, msg.substr(0, colon)), msg.substr(start));
  }
}

Json vec(const Eigen::VectorXd& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd vec_from(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string_view family_token(ArrivalFamily f) {
  switch (f) {
    case ArrivalFamily::neg_binomial: return "neg_binomial";
    case ArrivalFamily::poisson: return "poisson";
    case ArrivalFamily::fixed: return "fixed";
  }
  return "poisson";
}

Json chi_square(const ChiSquareResult& c) {
  return {{"statistic", c.statistic}, {"p_value", c.p_value}, {"bins", c.bins}, {"df", c.df}};
}

Json cox_fit(const CoxFit& f) {
  return {{"beta", vec(f.beta)},
          {"standard_error", vec(f.standard_error)},
          {"log_partial_likelihood", f.log_partial_likelihood},
          {"iterations", f.iterations},
          {"converged", f.converged},
          {"flagged", f.flagged}};
}

}  // namespace

CapacityConfig capacity_config_from_json(const Json& j, const std::string& path) {
  CapacityConfig c;
  check_keys(j, path, {"kappa0", "tau_c", "eta", "N", "r", "T", "minimality_sweep"});
  if (j.contains("kappa0") && !j.at("kappa0").is_null()) {
    int k = 0;
    read(j, "kappa0", k, path);
    c.kappa0 = k;
  }
  read(j, "tau_c", c.tau_c, path);
  read(j, "eta", c.eta, path);
  read(j, "N", c.max_iterations, path);
  read(j, "r", c.replications, path);
  read(j, "T", c.horizon_days, path);
  read(j, "minimality_sweep", c.minimality_sweep, path);
  validated(path, [&] { c.validate(); });
  return c;
}

PlanConfig plan_config_from_json(const Json& j) {
  PlanConfig p;
  require_object(j, "");
  if (j.contains("seed")) {
    const Json& seed = j.at("seed");
    if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<long long>() < 0)) throw ConfigError("seed", "expected a nonnegative integer");
    p.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("capacity")) p.capacity = capacity_config_from_json(j.at("capacity"));
  if (j.contains("workforce")) {
    const Json& w = j.at("workforce");
    const std::string path = "workforce";
    check_keys(w, path,
               {"template_days", "fulltime_days", "parttime_days", "weekend_cap", "parttime_cap", "weekend_days",
                "horizon_days", "staff_day_cost", "minutes_per_staff", "understaff_cost", "overstaff_cost",
                "saa_samples", "planning_first_day"});
    read(w, "template_days", p.patterns.template_days, path);
    read(w, "fulltime_days", p.patterns.fulltime_days, path);
    read(w, "parttime_days", p.patterns.parttime_days, path);
    read(w, "weekend_cap", p.patterns.weekend_cap, path);
    read(w, "parttime_cap", p.patterns.parttime_cap, path);
    read(w, "weekend_days", p.patterns.weekend_days, path);
    read(w, "horizon_days", p.patterns.horizon_days, path);
    read(w, "staff_day_cost", p.cost.staff_day_cost, path);
    p.patterns.staff_day_cost = p.cost.staff_day_cost;
    read(w, "minutes_per_staff", p.cost.minutes_per_staff, path);
    read(w, "understaff_cost", p.cost.understaff_cost, path);
    read(w, "overstaff_cost", p.cost.overstaff_cost, path);
    read(w, "saa_samples", p.cost.saa_samples, path);
    read(w, "planning_first_day", p.planning_first_day, path);
    validated(path, [&] {
      p.patterns.validate();
      p.cost.validate();
    });
  }
  validated("workforce", [&] { p.validate(); });
  return p;
}

ScenarioSpec scenario_from_json(const Json& j, const std::string& path) {
  if (j.is_string()) {
    try {
      return preset_scenario(j.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path, e.what());
    }
  }
  ScenarioSpec s;
  check_keys(j, path, {"id", "prevalence_overrides", "adl_mean_scale", "rehab_need_scale", "extensive_care_target"});
  read(j, "id", s.id, path);
  if (j.contains("prevalence_overrides")) {
    const Json& p = j.at("prevalence_overrides");
    require_object(p, join(path, "prevalence_overrides"));
    for (const auto& [k, v] : p.items()) {
      if (!v.is_number()) throw ConfigError(join(path, "prevalence_overrides." + k), "expected a number");
      s.prevalence_overrides[k] = v.get<double>();
    }
  }
  read(j, "adl_mean_scale", s.adl_mean_scale, path);
  read(j, "rehab_need_scale", s.rehab_need_scale, path);
  if (j.contains("extensive_care_target") && !j.at("extensive_care_target").is_null()) {
    double v = 0.0;
    read(j, "extensive_care_target", v, path);
    s.extensive_care_target = v;
  }
  validated(path, [&] { s.validate(); });
  return s;
}

RunRequest run_request_from_json(const Json& j) {
  check_keys(j, "", {"cohort", "scenario", "seed", "capacity", "workforce"});
  RunRequest r;
  read(j, "cohort", r.cohort, "");
  if (j.contains("scenario")) r.scenario = scenario_from_json(j.at("scenario"));
  Json plan = Json::object();
  for (const char* k : {"seed", "capacity", "workforce"})
    if (j.contains(k)) plan[k] = j.at(k);
  r.plan = plan_config_from_json(plan);
  return r;
}

Json to_json(const CapacityConfig& c) {
  return {{"kappa0", c.kappa0 ? Json(*c.kappa0) : Json(nullptr)},
          {"tau_c", c.tau_c},
          {"eta", c.eta},
          {"N", c.max_iterations},
          {"r", c.replications},
          {"T", c.horizon_days},
          {"minimality_sweep", c.minimality_sweep}};
}

Json to_json(const PatternConfig& p, const CostConfig& c, int planning_first_day) {
  return {{"template_days", p.template_days},
          {"fulltime_days", p.fulltime_days},
          {"parttime_days", p.parttime_days},
          {"weekend_cap", p.weekend_cap},
          {"parttime_cap", p.parttime_cap},
          {"weekend_days", p.weekend_days},
          {"horizon_days", p.horizon_days},
          {"staff_day_cost", c.staff_day_cost},
          {"minutes_per_staff", c.minutes_per_staff},
          {"understaff_cost", c.understaff_cost},
          {"overstaff_cost", c.overstaff_cost},
          {"saa_samples", c.saa_samples},
          {"planning_first_day", planning_first_day}};
}

Json to_json(const ScenarioSpec& s) {
  return {{"id", s.id},
          {"prevalence_overrides", s.prevalence_overrides},
          {"adl_mean_scale", s.adl_mean_scale},
          {"rehab_need_scale", s.rehab_need_scale},
          {"extensive_care_target", s.extensive_care_target ? Json(*s.extensive_care_target) : Json(nullptr)}};
}

Json to_json(const RunRequest& r) {
  return {{"cohort", r.cohort},
          {"scenario", to_json(r.scenario)},
          {"seed", r.plan.seed},
          {"capacity", to_json(r.plan.capacity)},
          {"workforce", to_json(r.plan.patterns, r.plan.cost, r.plan.planning_first_day)}};
}

Json to_json(const CapacityResult& r) {
  Json path = Json::array();
  for (const auto& s : r.path) path.push_back({{"kappa", s.kappa}, {"p", s.p}});
  Json sweep = Json::array();
  for (const auto& s : r.sweep) sweep.push_back({{"kappa", s.kappa}, {"p", s.p}});
  return {{"kappa", r.kappa},
          {"loop_kappa", r.loop_kappa},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"certified_minimal", r.certified_minimal},
          {"path", path},
          {"sweep", sweep}};
}

Json to_json(const ScenarioRow& r) {
  return {{"scenario_id", r.scenario_id},
          {"kappa", r.kappa},
          {"total_cost", r.total_cost},
          {"planned_cost", r.planned_cost},
          {"understaffing_cost", r.understaffing_cost},
          {"overstaffing_cost", r.overstaffing_cost},
          {"gap", r.gap}};
}

Json to_json(const ScenarioComparison& c) {
  Json rows = Json::array();
  for (const auto& r : c.rows) rows.push_back(to_json(r));
  return {{"rows", rows}};
}

Json plan_summary(const PlanResult& r) {
  Json hires = Json::array();
  for (Eigen::Index i = 0; i < r.staffing.x.size(); ++i)
    if (r.staffing.x(i) > 0) hires.push_back({{"pattern", i + 1}, {"count", r.staffing.x(i)}});
  return {{"row", to_json(scenario_row(r))},
          {"capacity", to_json(r.capacity)},
          {"staffing",
           {{"certificate", r.staffing.certificate == Certificate::optimal ? "optimal" : "heuristic"},
            {"lower_bound", r.staffing.lower_bound},
            {"gap", r.staffing.gap},
            {"staff", r.staffing.x.sum()},
            {"hires", hires}}}};
}

Json to_json(const CompetingRiskModel& m) {
  Json d = Json::array();
  for (auto x : m.dispositions) d.push_back(std::string(to_token(x)));
  Json coef = Json::array();
  for (const auto& c : m.coefficients) coef.push_back(vec(c));
  Json base = Json::array();
  for (const auto& b : m.baseline) {
    Json jumps = Json::array();
    for (const auto& [day, inc] : b.jumps()) jumps.push_back({day, inc});
    base.push_back({{"max_day", b.max_day()}, {"jumps", jumps}});
  }
  return {{"dispositions", d},
          {"covariate_names", m.covariate_names},
          {"coefficients", coef},
          {"baseline_hazard", base},
          {"max_support_day", m.max_support_day}};
}

CompetingRiskModel competing_risk_from_json(const Json& j) {
  CompetingRiskModel m;
  try {
    m.dispositions.clear();
    for (const auto& t : j.at("dispositions")) {
      const auto d = parse_disposition(t.get<std::string>());
      if (!d) throw ConfigError("dispositions", "unknown disposition");
      m.dispositions.push_back(*d);
    }
    m.covariate_names = j.at("covariate_names").get<std::vector<std::string>>();
    for (const auto& c : j.at("coefficients")) m.coefficients.push_back(vec_from(c));
    for (const auto& b : j.at("baseline_hazard")) {
      const int max_day = b.at("max_day").get<int>();
      if (max_day < 1) throw ConfigError("short_stay.baseline_hazard", "max_day must be positive");
      Eigen::VectorXd inc = Eigen::VectorXd::Zero(max_day);
      for (const auto& jump : b.at("jumps")) {
        const int day = jump.at(0).get<int>();
        if (day < 1 || day > max_day) throw ConfigError("short_stay.baseline_hazard", "jump day outside [1, max_day]");
        inc(day - 1) = jump.at(1).get<double>();
      }
      m.baseline.push_back(CumulativeHazard::from_increments(inc));
    }
    m.max_support_day = j.at("max_support_day").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("short_stay", e.what());
  }
  validated("short_stay", [&] { m.validate(); });
  return m;
}

Json to_json(const CountModel& m) {
  return {{"family", std::string(family_token(m.family))}, {"size", m.size}, {"prob", m.prob}, {"rate", m.rate}};
}

CountModel count_model_from_json(const Json& j) {
  CountModel m;
  const auto f = j.at("family").get<std::string>();
  if (f == "neg_binomial") m.family = ArrivalFamily::neg_binomial;
  else if (f == "poisson") m.family = ArrivalFamily::poisson;
  else if (f == "fixed") m.family = ArrivalFamily::fixed;
  else throw ConfigError("arrivals.family", "unknown family " + f);
  m.size = j.at("size").get<double>();
  m.prob = j.at("prob").get<double>();
  m.rate = j.at("rate").get<double>();
  return m;
}

Json to_json(const NeedGroupTable& t) {
  Json clusters = Json::array();
  for (const auto& c : t.clusters)
    clusters.push_back({{"id", c.id},
                        {"members", c.members},
                        {"rate1", c.distribution.rate1},
                        {"rate2", c.distribution.rate2},
                        {"mean_minutes", c.distribution.mean()},
                        {"max_within_jsd", c.max_within_jsd}});
  Json nodes = Json::array();
  for (const auto& n : t.classifier.nodes)
    nodes.push_back({{"feature", n.feature},
                     {"threshold", n.threshold},
                     {"left", n.left},
                     {"right", n.right},
                     {"cluster", n.cluster}});
  Json rules = Json::array();
  for (const auto& r : t.classifier.rules)
    rules.push_back({{"feature", r.feature},
                     {"value", r.value},
                     {"cluster", r.cluster},
                     {"support", r.support},
                     {"confidence", r.confidence}});
  return {{"tolerance", t.tolerance}, {"clusters", clusters}, {"tree", nodes}, {"rules", rules}};
}

NeedGroupTable need_table_from_json(const Json& j) {
  NeedGroupTable t;
  try {
    t.tolerance = j.at("tolerance").get<double>();
    for (const auto& c : j.at("clusters")) {
      NeedCluster nc;
      nc.id = c.at("id").get<int>();
      nc.members = c.at("members").get<std::vector<std::string>>();
      nc.distribution = {c.at("rate1").get<double>(), c.at("rate2").get<double>()};
      nc.max_within_jsd = c.at("max_within_jsd").get<double>();
      t.clusters.push_back(std::move(nc));
    }
    for (const auto& n : j.at("tree"))
      t.classifier.nodes.push_back({n.at("feature").get<int>(), n.at("threshold").get<double>(),
                                    n.at("left").get<int>(), n.at("right").get<int>(), n.at("cluster").get<int>()});
    for (const auto& r : j.at("rules"))
      t.classifier.rules.push_back({r.at("feature").get<int>(), r.at("value").get<int>(), r.at("cluster").get<int>(),
                                    r.at("support").get<double>(), r.at("confidence").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("needs", e.what());
  }
  for (std::size_t i = 0; i < t.clusters.size(); ++i)
    if (t.clusters[i].id != static_cast<int>(i) + 1) throw ConfigError("needs.clusters", "ids must run 1..k in order");
  if (t.classifier.nodes.empty()) throw ConfigError("needs.tree", "empty classifier");
  return t;
}

Json models_document(const PlanningFit& fit) {
  Json fits = Json::array();
  for (const auto& f : fit.short_stay.fits) fits.push_back(cox_fit(f));
  return {{"format", "nhplan-models/1"},
          {"short_stay", to_json(fit.short_stay.model)},
          {"short_stay_fits", fits},
          {"single_disposition", to_json(fit.single_disposition.model)},
          {"long_stay",
           {{"log_mean", fit.long_stay.model.log_mean},
            {"log_sd", fit.long_stay.model.log_sd},
            {"log_likelihood", fit.long_stay.log_likelihood},
            {"events", fit.long_stay.events},
            {"censored", fit.long_stay.censored},
            {"goodness_of_fit", chi_square(fit.long_stay.goodness_of_fit)}}},
          {"arrivals",
           {{"short_stay", to_json(fit.arrivals.short_stay.model)},
            {"short_stay_mean_se", fit.arrivals.short_stay.standard_error},
            {"short_stay_gof", chi_square(fit.arrivals.short_stay.goodness_of_fit)},
            {"long_stay", to_json(fit.arrivals.long_stay.model)},
            {"long_stay_mean_se", fit.arrivals.long_stay.standard_error},
            {"long_stay_gof", chi_square(fit.arrivals.long_stay.goodness_of_fit)}}},
          {"needs", to_json(fit.models.needs)}};
}

SimModels sim_models_from_json(const Json& j) {
  require_object(j, "");
  if (j.value("format", "") != "nhplan-models/1") throw ConfigError("format", "expected nhplan-models/1");
  SimModels m;
  m.short_los = competing_risk_from_json(j.at("short_stay"));
  try {
    m.long_los.log_mean = j.at("long_stay").at("log_mean").get<double>();
    m.long_los.log_sd = j.at("long_stay").at("log_sd").get<double>();
    m.arrivals.short_stay = count_model_from_json(j.at("arrivals").at("short_stay"));
    m.arrivals.long_stay = count_model_from_json(j.at("arrivals").at("long_stay"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("models", e.what());
  }
  m.needs = need_table_from_json(j.at("needs"));
  return m;
}

}  // namespace nhplan
