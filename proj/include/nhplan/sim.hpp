#pragma once

#include "nhplan/cohort.hpp"
#include "nhplan/los.hpp"
#include "nhplan/need.hpp"
#include "nhplan/random.hpp"
#include "nhplan/stats.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace nhplan {

/// `fixed` emits the same count every day; it exists for hand-traced cases.
enum class ArrivalFamily { neg_binomial, poisson, fixed };

struct CountModel {
  ArrivalFamily family = ArrivalFamily::poisson;
  double size = 1.0;  // negative binomial r
  double prob = 0.5;  // negative binomial p
  double rate = 0.0;  // Poisson lambda, or the fixed count
  long draw(Rng& rng) const;
  double mean() const;
  double pmf(long k) const;
};

struct ArrivalModel {
  CountModel short_stay{ArrivalFamily::neg_binomial, 1.0, 0.5, 0.0};
  CountModel long_stay{ArrivalFamily::poisson, 1.0, 0.5, 0.0};
  double mean_daily() const { return short_stay.mean() + long_stay.mean(); }
};

struct ArrivalFit {
  CountModel model;
  ChiSquareResult goodness_of_fit;
  /// Standard error of the mean parameter (Poisson lambda or NB mean).
  double standard_error = 0.0;
  /// Poisson fit to an all-zero series.
  bool degenerate = false;
};

/// Maximum likelihood; the chi-square bins are pooled to expected counts >= 5.
ArrivalFit fit_arrivals(const std::vector<int>& daily_counts, ArrivalFamily family);

/// Admissions per day over days [0, days) for one stay class.
std::vector<int> daily_admissions(const Cohort& cohort, StayClass stay_class, int days);

/// Short arrivals negative binomial, long arrivals Poisson. Only admission
/// days whose stay class is settled (at least 101 days observed before the
/// data end) are counted, so late long-stayers are not mistaken for short.
ArrivalModel fit_arrival_model(const Cohort& cohort);

struct ArrivalFits {
  ArrivalFit short_stay;
  ArrivalFit long_stay;
};
ArrivalFits fit_arrival_fits(const Cohort& cohort);

/// Everything one replication needs. Arrivals borrow covariates and care
/// levels from a uniformly drawn resident of the pool.
struct SimModels {
  ArrivalModel arrivals;
  CompetingRiskModel short_los;
  LongStayModel long_los;
  NeedGroupTable needs;
  std::vector<ResidentRecord> pool;
};

struct SimConfig {
  int horizon_days = 365;
  int capacity = 1;
  int replications = 500;
  std::uint64_t base_seed = 1;
  int warmup_days = 0;
  int initial_census = 0;
  /// Skip the staff-minute draws when only census and acceptance matter.
  bool record_demand = true;

  void validate() const;
};

struct DemandTrace {
  std::vector<double> demand_minutes;
  std::vector<int> census;
  std::vector<int> arrivals;
  std::vector<int> admissions;
  std::vector<double> acceptance;

  std::size_t days() const { return census.size(); }
  /// Mean acceptance over the days after warmup.
  double mean_acceptance(int warmup_days = 0) const;
};

DemandTrace run_replication(const SimModels& models, const SimConfig& cfg, std::uint64_t replication);

struct Band {
  std::vector<double> mean;
  std::vector<double> lower;  // 2.5% across replications
  std::vector<double> upper;  // 97.5%
};

struct Ensemble {
  std::vector<DemandTrace> traces;
  Band demand;
  Band census;
};

Ensemble run_ensemble(const SimModels& models, const SimConfig& cfg);
Band summarize(const std::vector<std::vector<double>>& series);

/// Census on one day (1-based) of every replication.
std::vector<double> census_on_day(const std::vector<DemandTrace>& traces, int day);

struct SupplyCostReport {
  double staff_min = 0.0;
  double staff_mean = 0.0;
  double staff_max = 0.0;
  double cost_min = 0.0;
  double cost_mean = 0.0;
  double cost_max = 0.0;
  /// 2.5% and 97.5% of the per-replication mean daily cost.
  double cost_lower = 0.0;
  double cost_upper = 0.0;
};

/// Staff-to-resident rule: ceil(census / residents_per_staff) staff per day.
SupplyCostReport supply_cost_report(const std::vector<DemandTrace>& traces, double residents_per_staff,
                                    double staff_day_cost = 88.0);

void write_trace_csv(std::ostream& out, const DemandTrace& trace);

}  // namespace nhplan
