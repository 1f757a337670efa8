#include "nhplan/capacity.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace nhplan;
using namespace nhplan::testing;

namespace {

SimModels poisson_models(double rate) {
  SimModels m;
  m.arrivals.short_stay = {ArrivalFamily::poisson, 1.0, 0.5, rate};
  m.arrivals.long_stay = {ArrivalFamily::poisson, 1.0, 0.5, 0.0};
  Eigen::VectorXd beta(1);
  beta << 0.08;
  m.short_los = grid_model({beta}, {0.03}, {1.2});
  m.short_los.covariate_names = {"adl"};
  m.needs = cluster_groups(bundled_group_table());
  m.pool = {pool_resident(0), pool_resident(8)};
  return m;
}

CapacityConfig small_config(std::uint64_t seed) {
  CapacityConfig c;
  c.replications = 60;
  c.horizon_days = 150;
  c.seed = seed;
  return c;
}

// One arrival a day, fixed stays of `los` days, `kappa` beds: day t admits
// exactly when (t - 1) mod los < kappa.
double toy_acceptance(int kappa, int los, int horizon) {
  int admitted = 0;
  for (int t = 1; t <= horizon; ++t) admitted += (t - 1) % los < kappa;
  return kappa >= los ? 1.0 : static_cast<double>(admitted) / horizon;
}

}  // namespace

TEST_CASE("defaults") {
  const CapacityConfig c;
  CHECK_FALSE(c.kappa0.has_value());
  CHECK(c.tau_c == 0.85);
  CHECK(c.eta == 0.95);
  CHECK(c.max_iterations == 500);
  CHECK(c.replications == 500);
  CHECK(c.horizon_days == 365);
  CHECK(c.minimality_sweep);
}

TEST_CASE("validation") {
  auto with = [](auto edit) {
    CapacityConfig c;
    edit(c);
    return c;
  };
  CHECK_THROWS_AS(with([](CapacityConfig& c) { c.eta = 1.5; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(with([](CapacityConfig& c) { c.eta = 0.0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(with([](CapacityConfig& c) { c.tau_c = -0.1; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(with([](CapacityConfig& c) { c.kappa0 = 0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(with([](CapacityConfig& c) { c.replications = 0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(with([](CapacityConfig& c) { c.horizon_days = 0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(with([](CapacityConfig& c) { c.max_iterations = 0; }).validate(), std::invalid_argument);
  CHECK_NOTHROW(with([](CapacityConfig& c) { c.eta = 1.0; }).validate());
}

TEST_CASE("deterministic toy matches the closed-form acceptance") {
  const int los = 10;
  const SimModels m = deterministic_toy(1.0, los);
  for (int kappa = 1; kappa <= 12; ++kappa)
    CHECK(acceptance_probability(m, kappa, 1, 200, 1, 0.0).replication_means[0] ==
          doctest::Approx(toy_acceptance(kappa, los, 200)).epsilon(1e-12));

  CapacityConfig c;
  c.replications = 3;
  c.horizon_days = 200;
  c.kappa0 = 2;
  const CapacityResult r = optimize_capacity(m, c);
  int smallest = 1;
  while (toy_acceptance(smallest, los, 200) < c.tau_c) ++smallest;
  CHECK(r.converged);
  CHECK(r.certified_minimal);
  CHECK(r.kappa == smallest);
}

TEST_CASE("search result equals an exhaustive sweep on the sweep streams") {
  const SimModels m = poisson_models(2.0);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const CapacityConfig c = small_config(seed);
    const CapacityResult r = optimize_capacity(m, c);
    REQUIRE(r.converged);
    REQUIRE(r.certified_minimal);
    const std::uint64_t sweep_seed = make_stream(seed, 0, streams::kSweep)();
    auto holds = [&](int k) {
      return acceptance_probability(m, k, c.replications, c.horizon_days, sweep_seed, c.tau_c).p >= c.eta;
    };
    CHECK(holds(r.kappa));
    if (r.kappa > 1) CHECK_FALSE(holds(r.kappa - 1));
    // nothing between kappa and the loop's value fails
    for (int k = r.kappa; k <= r.loop_kappa; ++k) CHECK(holds(k));
    // the loop stops at the first kappa meeting eta on its own streams
    const CapacityStep& last = r.path.back();
    CHECK(last.kappa == r.loop_kappa);
    CHECK(last.p >= c.eta);
    for (std::size_t i = 0; i + 1 < r.path.size(); ++i) {
      CHECK(r.path[i].p < c.eta);
      CHECK(r.path[i + 1].kappa > r.path[i].kappa);
    }
  }
}

TEST_CASE("acceptance probability grows with capacity under common random numbers") {
  const SimModels m = poisson_models(2.0);
  double last = -1.0;
  std::vector<double> prev_means;
  for (int kappa = 20; kappa <= 80; kappa += 4) {
    const AcceptanceEstimate e = acceptance_probability(m, kappa, 40, 150, 7, 0.85);
    CHECK(e.p >= last);
    last = e.p;
    if (!prev_means.empty())
      for (std::size_t j = 0; j < e.replication_means.size(); ++j) CHECK(e.replication_means[j] >= prev_means[j] - 1e-12);
    prev_means = e.replication_means;
  }
  CHECK(last == 1.0);
}

TEST_CASE("starting capacity defaults to arrivals times mean stay") {
  const SimModels m = poisson_models(2.0);
  double oracle = 0.0;
  for (const auto& r : m.pool)
    for (int d = 0; d < kShortStayMaxDays; ++d) oracle += m.short_los.survival(d, r.covariates);
  oracle /= static_cast<double>(m.pool.size());
  CHECK(expected_los(m) == doctest::Approx(oracle).epsilon(1e-12));
  CapacityConfig c = small_config(1);
  c.max_iterations = 1;
  const CapacityResult r = optimize_capacity(m, c);
  CHECK(r.path.front().kappa == static_cast<int>(std::ceil(2.0 * oracle)));
}

TEST_CASE("no arrivals need one bed") {
  SimModels m = deterministic_toy(0.0, 5);
  const CapacityResult r = optimize_capacity(m, small_config(1));
  CHECK(r.kappa == 1);
  CHECK(r.path.front().p == 1.0);
}

TEST_CASE("iteration limit reports non-convergence") {
  CapacityConfig c = small_config(1);
  c.kappa0 = 1;
  c.max_iterations = 2;
  const CapacityResult r = optimize_capacity(poisson_models(2.0), c);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 2);
  CHECK(r.sweep.empty());
}

TEST_CASE("strategy comparison shares the loop streams") {
  const SimModels m = poisson_models(2.0);
  const CapacityConfig c = small_config(4);
  const auto rows = compare_capacity_strategies(m, {{"small", 30}, {"large", 60}}, c);
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows)
    CHECK(row.p == acceptance_probability(m, row.kappa, c.replications, c.horizon_days, c.seed, c.tau_c).p);
  CHECK(rows[0].mean_acceptance <= rows[1].mean_acceptance);
  CHECK(rows[0].mean_occupancy >= rows[1].mean_occupancy);
}

TEST_CASE("zero beds turn everyone away") {
  const AcceptanceEstimate e = acceptance_probability(deterministic_toy(1.0, 5), 0, 10, 30, 1, 0.85);
  CHECK(e.p == 0.0);
  for (double g : e.replication_means) CHECK(g == 0.0);
  // with random arrivals only the days without arrivals count as accepted
  const SimModels m = poisson_models(2.0);
  const AcceptanceEstimate r = acceptance_probability(m, 0, 10, 30, 1, 0.85);
  SimConfig c;
  c.capacity = 0;
  c.horizon_days = 30;
  for (std::size_t j = 0; j < 10; ++j) {
    const DemandTrace tr = run_replication(m, c, j);
    double quiet = 0.0;
    for (int a : tr.arrivals) quiet += a == 0;
    CHECK(r.replication_means[j] == doctest::Approx(quiet / 30.0));
  }
}

TEST_CASE("zero arrivals from a start of five") {
  CapacityConfig c = small_config(1);
  c.kappa0 = 5;
  const CapacityResult r = optimize_capacity(deterministic_toy(0.0, 5), c);
  CHECK(r.iterations == 1);
  CHECK(r.loop_kappa == 5);
  CHECK(r.kappa == 1);
  CHECK(r.certified_minimal);
  for (double g : acceptance_probability(deterministic_toy(0.0, 5), 3, 5, 30, 1, 0.85).replication_means) CHECK(g == 1.0);
}

TEST_CASE("ten beds exactly meet a 95% target") {
  const int los = 10;
  const SimModels m = deterministic_toy(1.0, los);
  CapacityConfig c;
  c.replications = 3;
  c.horizon_days = 365;
  c.tau_c = 0.95;
  c.kappa0 = 1;
  const CapacityResult r = optimize_capacity(m, c);
  int first = 0;
  for (int k = 1; k <= 20; ++k)
    if (first == 0 && acceptance_probability(m, k, c.replications, c.horizon_days, 99, c.tau_c).p >= c.eta) first = k;
  CHECK(first == 10);
  CHECK(r.kappa == 10);
  CHECK(acceptance_probability(m, r.kappa - 1, 3, 365, 1, 0.95).p == 0.0);
}

TEST_CASE("two-state chain against exact enumeration") {
  // one arrival a day, one bed, stays of one day w.p. 1/2 and two days
  // otherwise: admissions renew after a gap of one or two days
  SimModels m = deterministic_toy(1.0, 2);
  Eigen::VectorXd cum = Eigen::VectorXd::Zero(kShortStayMaxDays + 1);
  cum(1) = std::log(2.0);
  for (int d = 2; d <= kShortStayMaxDays; ++d) cum(d) = std::log(2.0) + 1e3 * (d - 1);
  m.short_los.baseline = {CumulativeHazard(cum)};
  const int T = 20;
  const double tau = 0.7;
  // dist[t][n]: probability that day t is an admission day with n admissions so far
  std::vector<std::vector<double>> at(T + 3, std::vector<double>(T + 2, 0.0));
  at[1][1] = 1.0;
  std::vector<double> admissions(T + 2, 0.0);
  for (int t = 1; t <= T; ++t)
    for (int n = 1; n <= T; ++n) {
      const double w = at[t][n];
      if (w == 0.0) continue;
      // next admission day is t + 1 or t + 2; count ends when it passes T
      for (int gap : {1, 2}) {
        if (t + gap <= T) {
          at[t + gap][n + 1] += 0.5 * w;
        } else {
          admissions[n] += 0.5 * w;
        }
      }
    }
  double truth = 0.0;
  for (int n = 0; n <= T; ++n)
    if (static_cast<double>(n) / T >= tau) truth += admissions[n];
  const int r = 4000;
  const double p = acceptance_probability(m, 1, r, T, 5, tau).p;
  CHECK(std::abs(p - truth) < 4.0 * std::sqrt(truth * (1 - truth) / r));
}

TEST_CASE("capacity strategies bracket the optimum") {
  const SimModels m = poisson_models(2.0);
  const CapacityConfig c = small_config(2);
  const int k = optimize_capacity(m, c).kappa;
  const auto rows = compare_capacity_strategies(m, {{"low", k - 10}, {"optimized", k}, {"ten-fold", 10 * k}}, c);
  CHECK(rows[0].p < c.eta);
  CHECK(rows[2].mean_acceptance == doctest::Approx(1.0));
  CHECK(rows[2].mean_occupancy < 0.15);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].mean_acceptance >= rows[i - 1].mean_acceptance);
    CHECK(rows[i].mean_occupancy <= rows[i - 1].mean_occupancy);
  }
}
