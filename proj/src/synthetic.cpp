#include "nhplan/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace nhplan {

namespace {

constexpr double kCommunityShape = 1.0;
constexpr double kHospitalShape = 1.8;
constexpr double kDayWeightShape = 4.0;
constexpr std::size_t kCalibrationResidents = 5000;
constexpr std::uint64_t kCovariateStream = 0x5E17;
constexpr std::uint64_t kLosStream = 0x5E18;

void check_fraction(double v, const std::string& field) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(field + ": fraction must lie in [0, 1]");
}

}  // namespace

MarginalSpec MarginalSpec::defaults() {
  MarginalSpec s;
  s.prevalence = {{"anemia", 0.35},        {"diabetes", 0.38},       {"obstructive_uropathy", 0.05},
                  {"hypertension", 0.70},  {"cancer", 0.20},         {"dementia", 0.30},
                  {"depression", 0.35},    {"heart_failure", 0.25},  {"copd", 0.20},
                  {"stroke", 0.15},        {"renal_failure", 0.15},  {"hip_fracture", 0.12},
                  {"pneumonia", 0.10},     {"age_85_plus", 0.40},    {"female", 0.62}};
  return s;
}

void MarginalSpec::validate() const {
  for (const auto& [name, v] : prevalence) check_fraction(v, "prevalence." + name);
  check_fraction(adl_low_fraction, "adl_low_fraction");
  check_fraction(adl_high_fraction, "adl_high_fraction");
  check_fraction(rehab_fraction, "rehab_fraction");
  check_fraction(extensive_fraction, "extensive_fraction");
  check_fraction(long_stay_fraction, "long_stay_fraction");
  check_fraction(community_fraction, "community_fraction");
  check_fraction(hospital_fraction, "hospital_fraction");
  if (community_fraction + hospital_fraction > 1.0)
    throw std::invalid_argument("community_fraction: community and hospital fractions exceed 1");
  if (admission_window_days < 1) throw std::invalid_argument("admission_window_days: must be positive");
  if (follow_up_days < 0) throw std::invalid_argument("follow_up_days: must be nonnegative");
  if (rehab_adl_shift < 0) throw std::invalid_argument("rehab_adl_shift: must be nonnegative");
}

const std::map<std::string, std::pair<double, double>>& truth_coefficients() {
  static const std::map<std::string, std::pair<double, double>> table = {
      {"adl", {-0.09, 0.04}},           {"anemia", {-0.15, 0.45}},       {"diabetes", {-0.10, 0.40}},
      {"obstructive_uropathy", {-0.25, 0.70}}, {"hypertension", {-0.05, 0.10}}, {"cancer", {-0.20, 0.25}},
      {"dementia", {-0.10, 0.05}},      {"heart_failure", {-0.05, 0.20}}, {"hip_fracture", {0.10, -0.10}},
      {"age_85_plus", {-0.05, 0.05}}};
  return table;
}

CompetingRiskModel weibull_competing_risk(const std::vector<std::string>& covariate_names, double community_scale,
                                          double community_shape, double hospital_scale, double hospital_shape) {
  CompetingRiskModel m;
  m.covariate_names = covariate_names;
  const auto p = static_cast<Eigen::Index>(covariate_names.size());
  Eigen::VectorXd bc = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd bh = Eigen::VectorXd::Zero(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto it = truth_coefficients().find(covariate_names[static_cast<std::size_t>(j)]);
    if (it == truth_coefficients().end()) continue;
    bc(j) = it->second.first;
    bh(j) = it->second.second;
  }
  m.coefficients = {bc, bh};
  auto curve = [&](double scale, double shape) {
    Eigen::VectorXd cum(m.max_support_day + 1);
    for (int t = 0; t <= m.max_support_day; ++t) cum(t) = scale * std::pow(static_cast<double>(t), shape);
    return CumulativeHazard(cum);
  };
  m.baseline = {curve(community_scale, community_shape), curve(hospital_scale, hospital_shape)};
  return m;
}

std::vector<ResidentRecord> draw_residents(std::size_t n, const MarginalSpec& spec, Rng& rng) {
  const auto& names = default_covariate_names();
  for (const auto& [name, v] : spec.prevalence)
    if (name == "adl" || std::find(names.begin(), names.end(), name) == names.end())
      throw std::invalid_argument("prevalence." + name + ": not a binary covariate");
  static constexpr double kRehabMix[] = {0.15, 0.30, 0.30, 0.15, 0.10};
  std::vector<ResidentRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    ResidentRecord& r = out[i];
    char id[24];
    std::snprintf(id, sizeof id, "R%05zu", i + 1);
    r.id = id;
    r.covariates = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) {
      if (names[j] == "adl") continue;
      const auto it = spec.prevalence.find(names[j]);
      const double prev = it == spec.prevalence.end() ? 0.0 : it->second;
      r.covariates(static_cast<Eigen::Index>(j)) = uniform01(rng) < prev ? 1.0 : 0.0;
    }
    int adl;
    if (uniform01(rng) < spec.adl_low_fraction)
      adl = std::uniform_int_distribution<int>(0, 1)(rng);
    else if (uniform01(rng) < spec.adl_high_fraction)
      adl = std::uniform_int_distribution<int>(11, kAdlMax)(rng);
    else
      adl = std::uniform_int_distribution<int>(2, 10)(rng);
    r.covariates(0) = adl;

    if (uniform01(rng) < spec.rehab_fraction) {
      const double u = uniform01(rng);
      int level = 1;
      double acc = kRehabMix[0];
      while (level < 5 && u >= acc) acc += kRehabMix[level++];
      if (adl >= 11) level = std::min(5, level + spec.rehab_adl_shift);
      r.rehab = static_cast<RehabLevel>(level);
    }
    if (uniform01(rng) < spec.extensive_fraction)
      r.extensive = uniform01(rng) < 0.75 ? ExtensiveCare::level1 : ExtensiveCare::level2;
  }
  return out;
}

namespace {

struct Fractions {
  double community = 0.0;
  double hospital = 0.0;
};

// Expected observed dispositions of short-stay residents under Weibull
// hazards with the given scales, averaged over all n residents. Within a day
// the hazards are constant, which is how sample_short_stay interpolates.
Fractions expected_short_fractions(const std::vector<Eigen::Vector2d>& scores, const std::vector<int>& window,
                                   double community_scale, double hospital_scale, std::size_t n) {
  std::vector<double> dc(kShortStayMaxDays + 1), dh(kShortStayMaxDays + 1);
  for (int d = 1; d <= kShortStayMaxDays; ++d) {
    dc[d] = community_scale * (std::pow(d, kCommunityShape) - std::pow(d - 1, kCommunityShape));
    dh[d] = hospital_scale * (std::pow(d, kHospitalShape) - std::pow(d - 1, kHospitalShape));
  }
  Fractions f;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double ec = scores[i](0);
    const double eh = scores[i](1);
    const int limit = std::min(window[i], kShortStayMaxDays);
    double surv = 1.0;
    double hc = 0.0;
    double hh = 0.0;
    for (int d = 1; d <= limit; ++d) {
      const double a = dc[d] * ec;
      const double b = dh[d] * eh;
      const double h = a + b;
      if (h > 0.0) {
        const double leave = surv * -std::expm1(-h);
        f.community += leave * a / h;
        f.hospital += leave * b / h;
      }
      surv *= std::exp(-h);
      hc += a;
      hh += b;
    }
    if (window[i] >= kShortStayMaxDays && surv > 0.0) {
      // truncated draws go to the cause whose exponential clock is nearest
      if (hc + hh > 0.0) {
        f.community += surv * hc / (hc + hh);
        f.hospital += surv * hh / (hc + hh);
      } else {
        f.community += surv;
      }
    }
  }
  f.community /= static_cast<double>(n);
  f.hospital /= static_cast<double>(n);
  return f;
}

}  // namespace

SyntheticCohort generate_synthetic(std::size_t n, const MarginalSpec& spec, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("n: cohort size must be positive");
  spec.validate();
  Rng cov_rng = make_stream(seed, 0, kCovariateStream);
  std::vector<ResidentRecord> rs = draw_residents(n, spec, cov_rng);
  const int horizon = spec.admission_window_days + spec.follow_up_days;
  // Gamma day weights make daily admission counts overdispersed.
  std::vector<double> day_weight(static_cast<std::size_t>(spec.admission_window_days));
  std::gamma_distribution<double> weight(kDayWeightShape, 1.0);
  for (auto& w : day_weight) w = weight(cov_rng);
  std::discrete_distribution<int> admit(day_weight.begin(), day_weight.end());
  std::vector<bool> is_long(n);
  for (std::size_t i = 0; i < n; ++i) {
    rs[i].admit_day = admit(cov_rng);
    is_long[i] = uniform01(cov_rng) < spec.long_stay_fraction;
  }

  TruthModels truth;
  const auto& names = default_covariate_names();
  const CompetingRiskModel shape_only = weibull_competing_risk(names, 1.0, kCommunityShape, 1.0, kHospitalShape);

  // Completed long stays split evenly between the two dispositions. The
  // expectations are taken over the first residents only; they are iid, so
  // this is a random subsample that keeps calibration cheap for large n.
  const std::size_t m = std::min(n, kCalibrationResidents);
  double long_each = 0.0;
  std::vector<Eigen::Vector2d> scores;
  std::vector<int> window;
  for (std::size_t i = 0; i < m; ++i) {
    const int left = horizon - rs[i].admit_day;
    if (is_long[i]) {
      long_each += 0.5 * normal_cdf((std::log(static_cast<double>(left)) - truth.long_stay.log_mean) /
                                    truth.long_stay.log_sd) * (left > kShortStayMaxDays ? 1.0 : 0.0);
    } else {
      scores.push_back(shape_only.risk_scores(rs[i].covariates));
      window.push_back(left);
    }
  }
  long_each /= static_cast<double>(m);

  const double target_c = std::max(spec.community_fraction - long_each, 0.0);
  const double target_h = std::max(spec.hospital_fraction - long_each, 0.0);
  // The hospital/community ratio sets the split; the overall level sets how
  // many stays end inside the observation window. Completion rises with the
  // level, so bisection on its logarithm finds it.
  double ratio = target_c > 0.0 ? std::max(target_h / target_c, 1e-6) : 1.0;
  double level = 0.01;
  for (int outer = 0; outer < 60 && !scores.empty(); ++outer) {
    double lo = outer == 0 ? std::log(1e-9) : std::log(level) - 1.0;
    double hi = outer == 0 ? std::log(1e2) : std::log(level) + 1.0;
    for (int it = 0; it < (outer == 0 ? 45 : 30); ++it) {
      const double mid = 0.5 * (lo + hi);
      const Fractions f = expected_short_fractions(scores, window, std::exp(mid), ratio * std::exp(mid), m);
      (f.community + f.hospital < target_c + target_h ? lo : hi) = mid;
    }
    level = std::exp(0.5 * (lo + hi));
    const Fractions f = expected_short_fractions(scores, window, level, ratio * level, m);
    if (target_c <= 0.0 || target_h <= 0.0 || f.community <= 0.0 || f.hospital <= 0.0) break;
    const double adjust = (target_h / target_c) / (f.hospital / f.community);
    ratio *= adjust;
    if (std::fabs(adjust - 1.0) < 1e-7) break;
  }
  const double sc = level;
  const double sh = ratio * level;
  truth.short_stay = weibull_competing_risk(names, sc, kCommunityShape, sh, kHospitalShape);

  Rng los_rng = make_stream(seed, 0, kLosStream);
  for (std::size_t i = 0; i < n; ++i) {
    ResidentRecord& r = rs[i];
    int los;
    Disposition disp;
    if (is_long[i]) {
      los = sample_long_stay(truth.long_stay, los_rng);
      disp = uniform01(los_rng) < 0.5 ? Disposition::community : Disposition::hospital;
    } else {
      const LosDraw d = sample_short_stay(truth.short_stay, r.covariates, los_rng);
      los = d.los_days;
      disp = d.disposition;
    }
    const int left = horizon - r.admit_day;
    if (los > left) {
      los = left;
      disp = Disposition::censored;
    }
    r.los_days = los;
    r.disposition = disp;
    r.stay_class = los <= kShortStayMaxDays ? StayClass::short_stay : StayClass::long_stay;
  }

  Provenance prov;
  prov.kind = Provenance::Kind::synthetic;
  prov.seed = seed;
  prov.scenario_id = "S1";
  return {Cohort(std::move(rs), names, prov), std::move(truth)};
}

Cohort generate_synthetic_cohort(std::size_t n, const MarginalSpec& spec, std::uint64_t seed) {
  return generate_synthetic(n, spec, seed).cohort;
}

}  // namespace nhplan
