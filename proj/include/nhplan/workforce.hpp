#pragma once

#include "nhplan/sim.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

namespace nhplan {

struct PatternConfig {
  int template_days = 14;
  int fulltime_days = 10;
  std::vector<int> parttime_days{4, 6};
  int weekend_cap = 2;
  int parttime_cap = 8;
  std::vector<int> weekend_days{6, 7, 13, 14};  // 1-based days of the template
  int horizon_days = 56;
  double staff_day_cost = 88.0;

  void validate() const;
};

enum class PatternKind { fulltime, parttime };

/// Working-day subsets of one template: strictly increasing 1-based days in
/// lexicographic order, at most weekend_cap weekend days, and for part-time
/// patterns at most parttime_cap days.
std::vector<std::vector<int>> pattern_subsets(int template_days, int working_days, const std::vector<int>& weekend_days,
                                              int weekend_cap, int parttime_cap, bool parttime);

struct PatternMatrix {
  Eigen::MatrixXd a;  // patterns x horizon days, 0/1
  Eigen::VectorXd cost;
  std::vector<PatternKind> kind;
  std::vector<std::vector<int>> template_days;

  Eigen::Index patterns() const { return a.rows(); }
  Eigen::Index days() const { return a.cols(); }
};

/// Full-time subsets first, then part-time subsets per option, each tiled
/// over the horizon.
PatternMatrix generate_patterns(const PatternConfig& cfg);
/// Matrix from explicit rows; cost = staff_day_cost x working days.
PatternMatrix make_pattern_matrix(const Eigen::MatrixXd& a, double staff_day_cost);
void write_pattern_csv(std::ostream& out, const PatternMatrix& patterns);

struct CostConfig {
  double staff_day_cost = 88.0;
  double minutes_per_staff = 480.0;  // K
  double understaff_cost = 0.30;     // per minute of demand above supply
  double overstaff_cost = 0.05;      // per minute of supply above demand
  int saa_samples = 100;

  void validate() const;
};

enum class Certificate { optimal, heuristic };

struct CostBreakdown {
  double planned = 0.0;
  double understaffing = 0.0;
  double overstaffing = 0.0;
  double total() const { return planned + understaffing + overstaffing; }
};

struct StaffPlan {
  Eigen::VectorXi x;
  Eigen::VectorXd supply;  // minutes per day
  CostBreakdown cost;
  Certificate certificate = Certificate::heuristic;
  double lower_bound = 0.0;
  double gap = 0.0;  // (objective - lower_bound) / objective
  long nodes = 0;
};

/// Demand samples: one row per scenario, one column per planning day.
using DemandSamples = Eigen::MatrixXd;

/// Rows of `traces` restricted to days [first_day, first_day + days), 1-based.
DemandSamples demand_samples(const std::vector<DemandTrace>& traces, int first_day, int days);

/// Sample averages of the three cost terms. The understaffing term is
/// c_u * mean sum_t (xi - s)^+, i.e. -c_u * mean sum_t (s - xi)^-.
CostBreakdown evaluate_plan(const PatternMatrix& patterns, const Eigen::VectorXi& x, const DemandSamples& xi,
                            const CostConfig& cost);
/// Same terms for an arbitrary daily supply (minutes); planned cost is
/// staff_day_cost per K minutes.
CostBreakdown evaluate_supply(const Eigen::VectorXd& supply, const DemandSamples& xi, const CostConfig& cost);

struct SolveOptions {
  /// Instances with at most this many patterns are solved by branch and bound.
  int exact_pattern_limit = 12;
  long node_limit = 50'000'000;
  /// Extra starting points for the local search.
  std::vector<Eigen::VectorXi> warm_starts;
};

/// Minimizes planned + expected penalty cost over nonnegative integer hires.
/// Small instances get an optimality certificate; ties resolve to the
/// lexicographically smallest x.
StaffPlan solve_saa(const PatternMatrix& patterns, const DemandSamples& xi, const CostConfig& cost,
                    const SolveOptions& options = {});

/// Lower bound from the Lagrangian dual of s = K A'x.
double lagrangian_bound(const PatternMatrix& patterns, const DemandSamples& xi, const CostConfig& cost);

struct VssResult {
  StaffPlan stochastic;
  StaffPlan expected_value;  // solved against the per-day mean demand
  CostBreakdown expected_value_cost;  // that plan evaluated on all samples
  double vss = 0.0;
};

VssResult value_of_stochastic_solution(const PatternMatrix& patterns, const DemandSamples& xi, const CostConfig& cost,
                                       const SolveOptions& options = {});

struct StrategyRow {
  std::string name;
  std::string description;
  CostBreakdown cost;
};

struct StrategyInputs {
  PatternMatrix patterns;
  DemandSamples samples;            // demand under the fitted competing-risk model
  DemandSamples misspecified;       // demand under the single-disposition model
  std::vector<double> mean_census;  // planning-horizon census forecast
  double facility_ratio = 5.0;      // residents per staff member
  double state_ratio = 8.0;
};

/// Proposed SAA plan and the M1-M6 comparators, all costed on `samples`.
/// M1/M2 staff ceil(census / ratio) day by day, M3/M4 cover the same
/// requirement with patterns, M5 plans against misspecified-LOS demand,
/// M6 against mean demand.
std::vector<StrategyRow> compare_staffing_strategies(const StrategyInputs& in, const CostConfig& cost);

/// Hires per pattern, then per-day supply, then the cost terms; blank lines
/// separate the three CSV blocks.
void write_plan(std::ostream& out, const PatternMatrix& patterns, const StaffPlan& plan);

}  // namespace nhplan
