#pragma once

#include "nhplan/cohort.hpp"
#include "nhplan/los.hpp"

#include <map>
#include <string>

namespace nhplan {

/// Census marginals for the synthetic cohort generator. Binary covariates
/// are drawn independently with the listed prevalences; ADL is drawn by band
/// and shifts the rehab level up for high-ADL residents.
struct MarginalSpec {
  std::map<std::string, double> prevalence;
  double adl_low_fraction = 0.08;   // ADL 0-1
  double adl_high_fraction = 0.20;  // ADL 11-16, among residents above 1
  double rehab_fraction = 0.95;
  double extensive_fraction = 0.04;
  double long_stay_fraction = 0.07;
  double community_fraction = 0.61;
  double hospital_fraction = 0.24;
  int admission_window_days = 365;
  int follow_up_days = 0;
  int rehab_adl_shift = 1;

  static MarginalSpec defaults();
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Data-generating LOS laws of a synthetic cohort. The short-stay hazards
/// are Weibull-shaped on the day grid and scaled so the expected
/// disposition fractions meet the marginal spec.
struct TruthModels {
  CompetingRiskModel short_stay;
  LongStayModel long_stay;
};

struct SyntheticCohort {
  Cohort cohort;
  TruthModels truth;
};

/// Covariates only: binary flags, ADL, rehab and extensive-care levels.
/// LOS fields are left empty.
std::vector<ResidentRecord> draw_residents(std::size_t n, const MarginalSpec& spec, Rng& rng);

/// Coefficients of the true short-stay hazards, by covariate name
/// (community then hospital). Unlisted covariates have no effect.
const std::map<std::string, std::pair<double, double>>& truth_coefficients();

SyntheticCohort generate_synthetic(std::size_t n, const MarginalSpec& spec, std::uint64_t seed);
Cohort generate_synthetic_cohort(std::size_t n, const MarginalSpec& spec, std::uint64_t seed);

/// Short-stay model with Weibull cumulative baselines scale*t^shape.
CompetingRiskModel weibull_competing_risk(const std::vector<std::string>& covariate_names, double community_scale,
                                          double community_shape, double hospital_scale, double hospital_shape);

}  // namespace nhplan
