#pragma once

#include "nhplan/sim.hpp"
#include "nhplan/synthetic.hpp"
#include "nhplan/workforce.hpp"

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace nhplan::testing {

// Short-stay model whose only cause fires on day `los` with certainty.
inline CompetingRiskModel fixed_los_model(int los) {
  CompetingRiskModel m;
  m.dispositions = {Disposition::community};
  m.covariate_names = {"adl"};
  m.coefficients = {Eigen::VectorXd::Zero(1)};
  Eigen::VectorXd cum = Eigen::VectorXd::Zero(kShortStayMaxDays + 1);
  // steep but finite: an overwhelming jump would round the within-day
  // exit time onto the previous day boundary
  for (int d = los; d <= kShortStayMaxDays; ++d) cum(d) = 1e3 * (d - los + 1);
  m.baseline = {CumulativeHazard(cum)};
  return m;
}

inline ResidentRecord pool_resident(int adl = 0) {
  ResidentRecord r;
  r.id = "P1";
  r.covariates = Eigen::VectorXd::Constant(1, adl);
  return r;
}

// `per_day` arrivals every day, every one staying `los` days.
inline SimModels deterministic_toy(double per_day, int los) {
  SimModels m;
  m.arrivals.short_stay = {ArrivalFamily::fixed, 1.0, 0.5, per_day};
  m.arrivals.long_stay = {ArrivalFamily::fixed, 1.0, 0.5, 0.0};
  m.short_los = fixed_los_model(los);
  m.needs = cluster_groups(bundled_group_table());
  m.pool = {pool_resident()};
  return m;
}

// Every x in {0..upper}^P in lexicographic order; first strict improvement wins.
inline Eigen::VectorXi lattice_search(const PatternMatrix& p, const DemandSamples& xi, const CostConfig& cost) {
  const auto n = p.patterns();
  const int upper = static_cast<int>(std::ceil(xi.maxCoeff() / cost.minutes_per_staff));
  Eigen::VectorXi x = Eigen::VectorXi::Zero(n);
  Eigen::VectorXi best_x = x;
  double best = std::numeric_limits<double>::infinity();
  for (;;) {
    const double v = evaluate_plan(p, x, xi, cost).total();
    if (v < best - 1e-9) {
      best = v;
      best_x = x;
    }
    Eigen::Index i = n - 1;
    while (i >= 0 && x(i) == upper) x(i--) = 0;
    if (i < 0) break;
    ++x(i);
  }
  return best_x;
}

// Working-day subsets by bitmask: t_c days, weekend cap, part-time cap.
inline std::size_t brute_force_pattern_count(const PatternConfig& c) {
  auto count_for = [&](int days, bool parttime) {
    std::size_t k = 0;
    if (parttime && days > c.parttime_cap) return k;
    for (unsigned mask = 0; mask < (1u << c.template_days); ++mask) {
      if (std::popcount(mask) != days) continue;
      int weekend = 0;
      for (int d : c.weekend_days)
        if (mask & (1u << (d - 1))) ++weekend;
      if (weekend <= c.weekend_cap) ++k;
    }
    return k;
  };
  std::size_t total = count_for(c.fulltime_days, false);
  for (int d : c.parttime_days) total += count_for(d, true);
  return total;
}

}  // namespace nhplan::testing

namespace nhplan::testing {

// Day-grid model with cumulative baselines scale_m * t^shape_m.
inline CompetingRiskModel grid_model(const std::vector<Eigen::VectorXd>& betas, const std::vector<double>& scales,
                                     const std::vector<double>& shapes) {
  CompetingRiskModel m;
  m.dispositions.clear();
  const Disposition order[] = {Disposition::community, Disposition::hospital};
  for (std::size_t k = 0; k < betas.size(); ++k) {
    m.dispositions.push_back(order[k]);
    m.coefficients.push_back(betas[k]);
    Eigen::VectorXd cum(kShortStayMaxDays + 1);
    for (int d = 0; d <= kShortStayMaxDays; ++d) cum(d) = scales[k] * std::pow(static_cast<double>(d), shapes[k]);
    m.baseline.emplace_back(cum);
  }
  for (Eigen::Index j = 0; j < betas.front().size(); ++j) m.covariate_names.push_back("x" + std::to_string(j));
  return m;
}

// n draws from the model with covariates (Bernoulli 0.4, Bernoulli 0.6,
// N(0,1), uniform ADL-like 0..16 / 4), truncated to the first p columns, and
// independent uniform censoring on [1, censor_max].
inline SurvivalData simulate_model(const CompetingRiskModel& m, int n, std::uint64_t seed, int censor_max = 150) {
  Rng rng = make_stream(seed, 0, 77);
  const auto p = m.coefficients.front().size();
  SurvivalData d;
  d.time.resize(n);
  d.cause.resize(n);
  d.x.resize(n, p);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_int_distribution<int> adl(0, 16);
  std::uniform_int_distribution<int> censor(1, censor_max);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd all(4);
    all << (uniform01(rng) < 0.4), (uniform01(rng) < 0.6), z(rng), adl(rng) / 4.0;
    d.x.row(i) = all.head(p).transpose();
    const LosDraw draw = sample_short_stay(m, d.x.row(i).transpose(), rng);
    const int c = censor(rng);
    if (c < draw.los_days) {
      d.time(i) = c;
      d.cause(i) = -1;
    } else {
      d.time(i) = draw.los_days;
      d.cause(i) = draw.disposition == Disposition::community ? 0 : 1;
    }
  }
  return d;
}

}  // namespace nhplan::testing
