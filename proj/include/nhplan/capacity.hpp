#pragma once

#include "nhplan/sim.hpp"

#include <optional>
#include <vector>

namespace nhplan {

struct CapacityConfig {
  /// Starting capacity; empty means ceil(mean daily arrivals x mean LOS).
  std::optional<int> kappa0;
  double tau_c = 0.85;
  double eta = 0.95;
  int max_iterations = 500;
  int replications = 500;
  int horizon_days = 365;
  bool minimality_sweep = true;
  std::uint64_t seed = 1;

  void validate() const;
};

struct AcceptanceEstimate {
  double p = 0.0;
  /// Mean daily acceptance of every replication.
  std::vector<double> replication_means;
};

/// Fraction of replications whose mean daily acceptance reaches tau_c.
/// Demand draws are skipped; replication j always uses stream j of `seed`.
AcceptanceEstimate acceptance_probability(const SimModels& models, int capacity, int replications, int horizon_days,
                                          std::uint64_t seed, double tau_c);

struct CapacityStep {
  int kappa;
  double p;
};

struct CapacityResult {
  int kappa = 0;          // after the sweep when it ran
  int loop_kappa = 0;     // where the increase-only loop stopped
  int iterations = 0;
  bool converged = false;
  bool certified_minimal = false;
  std::vector<CapacityStep> path;
  std::vector<CapacityStep> sweep;
};

/// Mean LOS implied by the models, averaged over the covariate pool and the
/// arrival mix.
double expected_los(const SimModels& models);

/// Increase-only search: kappa <- ceil(kappa + zeta (eta - p)) with
/// zeta = kappa / 2, common random numbers at every step. The optional sweep
/// then lowers kappa while the criterion still holds on fresh seeds.
CapacityResult optimize_capacity(const SimModels& models, const CapacityConfig& cfg);

struct CapacityStrategyRow {
  std::string name;
  int kappa;
  double mean_acceptance;
  double mean_occupancy;
  double p;
};

/// Evaluates every capacity on the same replication streams.
std::vector<CapacityStrategyRow> compare_capacity_strategies(const SimModels& models,
                                                             const std::vector<std::pair<std::string, int>>& strategies,
                                                             const CapacityConfig& cfg);

}  // namespace nhplan
