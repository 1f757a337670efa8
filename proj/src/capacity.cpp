#include "nhplan/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nhplan {

void CapacityConfig::validate() const {
  if (kappa0 && *kappa0 < 1) throw std::invalid_argument("kappa0: must be at least 1");
  if (!(tau_c > 0.0 && tau_c <= 1.0)) throw std::invalid_argument("tau_c: must lie in (0, 1]");
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("eta: must lie in (0, 1]");
  if (max_iterations < 1) throw std::invalid_argument("N: must be positive");
  if (replications < 1) throw std::invalid_argument("r: must be positive");
  if (horizon_days < 1) throw std::invalid_argument("T: must be positive");
}

AcceptanceEstimate acceptance_probability(const SimModels& models, int capacity, int replications, int horizon_days,
                                          std::uint64_t seed, double tau_c) {
  if (replications < 1) throw std::invalid_argument("replications: must be positive");
  SimConfig cfg;
  cfg.capacity = capacity;
  cfg.horizon_days = horizon_days;
  cfg.replications = replications;
  cfg.base_seed = seed;
  cfg.record_demand = false;
  cfg.validate();
  AcceptanceEstimate out;
  int hits = 0;
  for (int j = 0; j < replications; ++j) {
    const double g = run_replication(models, cfg, static_cast<std::uint64_t>(j)).mean_acceptance();
    out.replication_means.push_back(g);
    if (g >= tau_c) ++hits;
  }
  out.p = static_cast<double>(hits) / replications;
  return out;
}

double expected_los(const SimModels& models) {
  double short_mean = 0.0;
  for (const auto& r : models.pool) {
    // P(LOS > d) = S(d) under the day-grid inversion; LOS = sum_d S(d)
    double s = 0.0;
    for (int d = 0; d < models.short_los.max_support_day; ++d) s += models.short_los.survival(d, r.covariates);
    short_mean += s;
  }
  if (!models.pool.empty()) short_mean /= static_cast<double>(models.pool.size());
  const double long_mean = std::max(
      101.0, std::exp(models.long_los.log_mean + 0.5 * models.long_los.log_sd * models.long_los.log_sd));
  const double a = models.arrivals.short_stay.mean();
  const double b = models.arrivals.long_stay.mean();
  if (a + b <= 0.0) return short_mean;
  return (a * short_mean + b * long_mean) / (a + b);
}

CapacityResult optimize_capacity(const SimModels& models, const CapacityConfig& cfg) {
  cfg.validate();
  CapacityResult res;
  int kappa = cfg.kappa0 ? *cfg.kappa0
                         : std::max(1, static_cast<int>(std::ceil(models.arrivals.mean_daily() * expected_los(models))));
  bool met = false;
  for (int m = 1; m <= cfg.max_iterations; ++m) {
    const double p = acceptance_probability(models, kappa, cfg.replications, cfg.horizon_days, cfg.seed, cfg.tau_c).p;
    res.path.push_back({kappa, p});
    res.iterations = m;
    if (p >= cfg.eta) {
      met = true;
      break;
    }
    const double zeta = 0.5 * kappa;
    kappa = static_cast<int>(std::ceil(kappa + zeta * (cfg.eta - p)));
  }
  res.converged = met;
  res.loop_kappa = res.path.back().kappa;
  res.kappa = res.loop_kappa;
  if (!met) return res;

  if (cfg.minimality_sweep) {
    // fresh seeds: the sweep must not reuse the loop's replications
    const std::uint64_t sweep_seed = make_stream(cfg.seed, 0, streams::kSweep)();
    int k = res.loop_kappa;
    double p_here = acceptance_probability(models, k, cfg.replications, cfg.horizon_days, sweep_seed, cfg.tau_c).p;
    res.sweep.push_back({k, p_here});
    if (p_here >= cfg.eta) {
      while (k > 1) {
        const double p = acceptance_probability(models, k - 1, cfg.replications, cfg.horizon_days, sweep_seed, cfg.tau_c).p;
        res.sweep.push_back({k - 1, p});
        if (p < cfg.eta) break;
        --k;
      }
      res.kappa = k;
      res.certified_minimal = true;
    } else {
      // the loop's value does not hold up on fresh seeds; climb until it does
      while (p_here < cfg.eta && k < 100 * std::max(1, res.loop_kappa)) {
        ++k;
        p_here = acceptance_probability(models, k, cfg.replications, cfg.horizon_days, sweep_seed, cfg.tau_c).p;
        res.sweep.push_back({k, p_here});
      }
      res.kappa = k;
      res.certified_minimal = p_here >= cfg.eta;
    }
  }
  return res;
}

std::vector<CapacityStrategyRow> compare_capacity_strategies(const SimModels& models,
                                                             const std::vector<std::pair<std::string, int>>& strategies,
                                                             const CapacityConfig& cfg) {
  cfg.validate();
  std::vector<CapacityStrategyRow> rows;
  SimConfig sim;
  sim.horizon_days = cfg.horizon_days;
  sim.replications = cfg.replications;
  sim.base_seed = cfg.seed;
  sim.record_demand = false;
  for (const auto& [name, kappa] : strategies) {
    sim.capacity = kappa;
    double acc = 0.0;
    double occ = 0.0;
    int hits = 0;
    for (int j = 0; j < cfg.replications; ++j) {
      const DemandTrace tr = run_replication(models, sim, static_cast<std::uint64_t>(j));
      const double g = tr.mean_acceptance();
      acc += g;
      hits += g >= cfg.tau_c;
      double census = 0.0;
      for (int c : tr.census) census += c;
      occ += kappa > 0 ? census / static_cast<double>(tr.days()) / kappa : 0.0;
    }
    rows.push_back({name, kappa, acc / cfg.replications, occ / cfg.replications,
                    static_cast<double>(hits) / cfg.replications});
  }
  return rows;
}

}  // namespace nhplan
