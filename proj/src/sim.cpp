#include "nhplan/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace nhplan {

long CountModel::draw(Rng& rng) const {
  switch (family) {
    case ArrivalFamily::neg_binomial:
      return negative_binomial(rng, size, prob);
    case ArrivalFamily::poisson:
      return rate > 0.0 ? std::poisson_distribution<long>(rate)(rng) : 0;
    case ArrivalFamily::fixed:
      return std::lround(rate);
  }
  return 0;
}

double CountModel::mean() const {
  switch (family) {
    case ArrivalFamily::neg_binomial:
      return size * (1.0 - prob) / prob;
    case ArrivalFamily::poisson:
    case ArrivalFamily::fixed:
      return rate;
  }
  return 0.0;
}

double CountModel::pmf(long k) const {
  if (k < 0) return 0.0;
  const double x = static_cast<double>(k);
  switch (family) {
    case ArrivalFamily::neg_binomial:
      return std::exp(std::lgamma(x + size) - std::lgamma(size) - std::lgamma(x + 1.0) + size * std::log(prob) +
                      x * std::log1p(-prob));
    case ArrivalFamily::poisson:
      if (rate == 0.0) return k == 0 ? 1.0 : 0.0;
      return std::exp(x * std::log(rate) - rate - std::lgamma(x + 1.0));
    case ArrivalFamily::fixed:
      return k == std::lround(rate) ? 1.0 : 0.0;
  }
  return 0.0;
}

namespace {

double nb_profile_log_likelihood(const std::vector<int>& x, double mean, double r) {
  const double p = r / (r + mean);
  double ll = 0.0;
  for (int v : x) ll += std::lgamma(v + r) - std::lgamma(r) - std::lgamma(v + 1.0) + r * std::log(p) + v * std::log1p(-p);
  return ll;
}

}  // namespace

ArrivalFit fit_arrivals(const std::vector<int>& daily_counts, ArrivalFamily family) {
  if (daily_counts.size() < 30) throw std::invalid_argument("fit_arrivals: at least 30 daily counts required");
  for (int v : daily_counts)
    if (v < 0) throw std::invalid_argument("fit_arrivals: negative count");
  const double n = static_cast<double>(daily_counts.size());
  const double mean = std::accumulate(daily_counts.begin(), daily_counts.end(), 0.0) / n;
  double var = 0.0;
  for (int v : daily_counts) var += (v - mean) * (v - mean);
  var /= n - 1.0;

  ArrivalFit out;
  out.model.family = family;
  int fitted = 1;
  if (family == ArrivalFamily::poisson) {
    out.model.rate = mean;
    out.degenerate = mean == 0.0;
    out.standard_error = std::sqrt(mean / n);
  } else if (family == ArrivalFamily::neg_binomial) {
    if (!(var > mean)) throw NumericalError("fit_arrivals: variance <= mean, negative binomial not identifiable");
    // golden-section search on log r over the profile likelihood
    double lo = std::log(1e-4);
    double hi = std::log(1e6);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - g * (hi - lo);
    double d = lo + g * (hi - lo);
    double fc = nb_profile_log_likelihood(daily_counts, mean, std::exp(c));
    double fd = nb_profile_log_likelihood(daily_counts, mean, std::exp(d));
    for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
      if (fc > fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - g * (hi - lo);
        fc = nb_profile_log_likelihood(daily_counts, mean, std::exp(c));
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + g * (hi - lo);
        fd = nb_profile_log_likelihood(daily_counts, mean, std::exp(d));
      }
    }
    out.model.size = std::exp(0.5 * (lo + hi));
    out.model.prob = out.model.size / (out.model.size + mean);
    out.standard_error = std::sqrt((mean + mean * mean / out.model.size) / n);
    fitted = 2;
  } else {
    throw std::invalid_argument("fit_arrivals: fixed counts are not fitted");
  }

  if (out.degenerate) {
    out.goodness_of_fit.p_value = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const int top = *std::max_element(daily_counts.begin(), daily_counts.end());
  std::vector<double> observed(static_cast<std::size_t>(top) + 1, 0.0);
  std::vector<double> expected(static_cast<std::size_t>(top) + 1, 0.0);
  for (int v : daily_counts) observed[static_cast<std::size_t>(v)] += 1.0;
  double below = 0.0;
  for (int k = 0; k < top; ++k) {
    expected[static_cast<std::size_t>(k)] = n * out.model.pmf(k);
    below += out.model.pmf(k);
  }
  expected[static_cast<std::size_t>(top)] = n * std::max(0.0, 1.0 - below);  // upper tail
  out.goodness_of_fit = chi_square_pooled(observed, expected, fitted);
  return out;
}

std::vector<int> daily_admissions(const Cohort& cohort, StayClass stay_class, int days) {
  std::vector<int> counts(static_cast<std::size_t>(days), 0);
  for (const auto& r : cohort.residents())
    if (r.stay_class == stay_class && r.admit_day >= 0 && r.admit_day < days) ++counts[static_cast<std::size_t>(r.admit_day)];
  return counts;
}

ArrivalFits fit_arrival_fits(const Cohort& cohort) {
  int end = 0;
  for (const auto& r : cohort.residents()) end = std::max(end, r.admit_day + r.los_days.value_or(0));
  const int days = end - kShortStayMaxDays;
  return {fit_arrivals(daily_admissions(cohort, StayClass::short_stay, days), ArrivalFamily::neg_binomial),
          fit_arrivals(daily_admissions(cohort, StayClass::long_stay, days), ArrivalFamily::poisson)};
}

ArrivalModel fit_arrival_model(const Cohort& cohort) {
  const ArrivalFits f = fit_arrival_fits(cohort);
  return {f.short_stay.model, f.long_stay.model};
}

void SimConfig::validate() const {
  if (horizon_days < 1) throw std::invalid_argument("horizon_days: must be positive");
  if (capacity < 0) throw std::invalid_argument("capacity: must be nonnegative");
  if (replications < 1) throw std::invalid_argument("replications: must be positive");
  if (warmup_days < 0 || warmup_days >= horizon_days) throw std::invalid_argument("warmup_days: must lie in [0, horizon)");
  if (initial_census < 0 || initial_census > capacity)
    throw std::invalid_argument("initial_census: must lie in [0, capacity]");
}

double DemandTrace::mean_acceptance(int warmup_days) const {
  if (acceptance.size() <= static_cast<std::size_t>(warmup_days)) return 1.0;
  double s = 0.0;
  for (std::size_t t = static_cast<std::size_t>(warmup_days); t < acceptance.size(); ++t) s += acceptance[t];
  return s / static_cast<double>(acceptance.size() - static_cast<std::size_t>(warmup_days));
}

namespace {

struct InHouse {
  int leave_day;
  HypoExp need;
};

}  // namespace

DemandTrace run_replication(const SimModels& models, const SimConfig& cfg, std::uint64_t replication) {
  Rng flow = make_stream(cfg.base_seed, replication, streams::kArrivals);
  Rng demand = make_stream(cfg.base_seed, replication, streams::kDemand);
  const int T = cfg.horizon_days;
  DemandTrace tr;
  tr.demand_minutes.assign(static_cast<std::size_t>(T), 0.0);
  tr.census.assign(static_cast<std::size_t>(T), 0);
  tr.arrivals.assign(static_cast<std::size_t>(T), 0);
  tr.admissions.assign(static_cast<std::size_t>(T), 0);
  tr.acceptance.assign(static_cast<std::size_t>(T), 1.0);

  const bool any_arrivals = models.arrivals.mean_daily() > 0.0 || cfg.initial_census > 0;
  if (any_arrivals && models.pool.empty()) throw std::invalid_argument("run_replication: empty covariate pool");
  std::uniform_int_distribution<std::size_t> pick(0, models.pool.empty() ? 0 : models.pool.size() - 1);

  std::vector<InHouse> house;
  auto newcomer = [&](bool long_stay, int day) {
    const ResidentRecord& r = models.pool[pick(flow)];
    const int los = long_stay ? sample_long_stay(models.long_los, flow)
                              : sample_short_stay(models.short_los, r.covariates, flow).los_days;
    const NeedCluster& c = models.needs.cluster(classify_resident(models.needs, r));
    return InHouse{day + los, c.distribution};
  };
  for (int k = 0; k < cfg.initial_census; ++k) house.push_back(newcomer(false, 0));

  for (int t = 1; t <= T; ++t) {
    const auto ti = static_cast<std::size_t>(t - 1);
    std::erase_if(house, [t](const InHouse& h) { return h.leave_day <= t; });
    const long ns = models.arrivals.short_stay.draw(flow);
    const long nl = models.arrivals.long_stay.draw(flow);
    int admitted = 0;
    // every arrival consumes its draws whether admitted or not, so the flow
    // stream lines up across capacities
    for (long k = 0; k < ns + nl; ++k) {
      InHouse h = newcomer(k >= ns, t);
      if (static_cast<int>(house.size()) < cfg.capacity) {
        house.push_back(h);
        ++admitted;
      }
    }
    tr.arrivals[ti] = static_cast<int>(ns + nl);
    tr.admissions[ti] = admitted;
    tr.acceptance[ti] = ns + nl > 0 ? static_cast<double>(admitted) / static_cast<double>(ns + nl) : 1.0;
    tr.census[ti] = static_cast<int>(house.size());
    if (cfg.record_demand) {
      double xi = 0.0;
      for (const auto& h : house) xi += hypoexp_sample(h.need, demand);
      tr.demand_minutes[ti] = xi;
    }
  }
  return tr;
}

Band summarize(const std::vector<std::vector<double>>& series) {
  Band b;
  if (series.empty()) return b;
  const std::size_t days = series.front().size();
  std::vector<double> column(series.size());
  for (std::size_t t = 0; t < days; ++t) {
    for (std::size_t j = 0; j < series.size(); ++j) column[j] = series[j][t];
    b.mean.push_back(std::accumulate(column.begin(), column.end(), 0.0) / static_cast<double>(column.size()));
    b.lower.push_back(quantile(column, 0.025));
    b.upper.push_back(quantile(column, 0.975));
  }
  return b;
}

Ensemble run_ensemble(const SimModels& models, const SimConfig& cfg) {
  cfg.validate();
  Ensemble e;
  for (int j = 0; j < cfg.replications; ++j) e.traces.push_back(run_replication(models, cfg, static_cast<std::uint64_t>(j)));
  std::vector<std::vector<double>> demand;
  std::vector<std::vector<double>> census;
  for (const auto& tr : e.traces) {
    demand.push_back(tr.demand_minutes);
    census.emplace_back(tr.census.begin(), tr.census.end());
  }
  e.demand = summarize(demand);
  e.census = summarize(census);
  return e;
}

std::vector<double> census_on_day(const std::vector<DemandTrace>& traces, int day) {
  std::vector<double> out;
  for (const auto& tr : traces) out.push_back(tr.census.at(static_cast<std::size_t>(day - 1)));
  return out;
}

SupplyCostReport supply_cost_report(const std::vector<DemandTrace>& traces, double residents_per_staff,
                                    double staff_day_cost) {
  if (!(residents_per_staff > 0.0)) throw std::invalid_argument("residents_per_staff: must be positive");
  SupplyCostReport r;
  if (traces.empty()) return r;
  r.staff_min = std::numeric_limits<double>::infinity();
  double total = 0.0;
  double days = 0.0;
  std::vector<double> per_rep;
  for (const auto& tr : traces) {
    double rep = 0.0;
    for (int c : tr.census) {
      const double staff = std::ceil(c / residents_per_staff - 1e-12);
      r.staff_min = std::min(r.staff_min, staff);
      r.staff_max = std::max(r.staff_max, staff);
      total += staff;
      rep += staff * staff_day_cost;
      days += 1.0;
    }
    per_rep.push_back(rep / static_cast<double>(tr.census.size()));
  }
  r.staff_mean = total / days;
  r.cost_min = r.staff_min * staff_day_cost;
  r.cost_mean = r.staff_mean * staff_day_cost;
  r.cost_max = r.staff_max * staff_day_cost;
  r.cost_lower = quantile(per_rep, 0.025);
  r.cost_upper = quantile(per_rep, 0.975);
  return r;
}

void write_trace_csv(std::ostream& out, const DemandTrace& trace) {
  out << "day,demand_minutes,census,arrivals,admissions,acceptance\n";
  out.precision(10);
  for (std::size_t t = 0; t < trace.days(); ++t)
    out << t + 1 << ',' << trace.demand_minutes[t] << ',' << trace.census[t] << ',' << trace.arrivals[t] << ','
        << trace.admissions[t] << ',' << trace.acceptance[t] << '\n';
}

}  // namespace nhplan
