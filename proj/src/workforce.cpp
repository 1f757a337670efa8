#include "nhplan/workforce.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>
#include <stdexcept>

namespace nhplan {

namespace {

constexpr double kTieTolerance = 1e-9;

void dfs_subsets(int next, int template_days, int remaining, int weekend_used, const std::vector<bool>& weekend,
                 int weekend_cap, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (remaining == 0) {
    out.push_back(cur);
    return;
  }
  for (int d = next; d <= template_days - remaining + 1; ++d) {
    const int w = weekend_used + (weekend[d] ? 1 : 0);
    if (w > weekend_cap) continue;
    cur.push_back(d);
    dfs_subsets(d + 1, template_days, remaining - 1, w, weekend, weekend_cap, cur, out);
    cur.pop_back();
  }
}

// Sample-average penalty of one day as a function of supply.
struct DayLoss {
  std::vector<double> sorted;
  std::vector<double> prefix;  // prefix[k] = sum of the k smallest
  double under = 0.0;
  double over = 0.0;

  DayLoss(std::vector<double> v, double cu, double cv) : sorted(std::move(v)), under(cu), over(cv) {
    std::sort(sorted.begin(), sorted.end());
    prefix.assign(sorted.size() + 1, 0.0);
    for (std::size_t k = 0; k < sorted.size(); ++k) prefix[k + 1] = prefix[k] + sorted[k];
  }

  double n() const { return static_cast<double>(sorted.size()); }

  double understaffing(double s) const {
    const auto k = static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), s) - sorted.begin());
    return under * ((prefix.back() - prefix[k]) - s * static_cast<double>(sorted.size() - k)) / n();
  }
  double overstaffing(double s) const {
    const auto k = static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), s) - sorted.begin());
    return over * (s * static_cast<double>(k) - prefix[k]) / n();
  }
  double value(double s) const { return understaffing(s) + overstaffing(s); }

  // Minimizer of value(s) + rate * s over [lo, hi].
  double argmin(double rate, double lo, double hi) const {
    const double k_star = std::ceil(n() * (under - rate) / (under + over) - 1e-12);
    double s;
    if (k_star <= 0.0) {
      s = lo;
    } else if (k_star > n()) {
      s = hi;
    } else {
      s = sorted[static_cast<std::size_t>(k_star) - 1];
    }
    return std::clamp(s, lo, hi);
  }
};

std::vector<DayLoss> day_losses(const DemandSamples& xi, const CostConfig& cost) {
  std::vector<DayLoss> out;
  out.reserve(static_cast<std::size_t>(xi.cols()));
  for (Eigen::Index t = 0; t < xi.cols(); ++t) {
    std::vector<double> col(xi.col(t).data(), xi.col(t).data() + xi.rows());
    out.emplace_back(std::move(col), cost.understaff_cost, cost.overstaff_cost);
  }
  return out;
}

void check_instance(const PatternMatrix& patterns, const DemandSamples& xi, const CostConfig& cost) {
  cost.validate();
  if (patterns.patterns() == 0) throw std::invalid_argument("patterns: empty pattern set");
  if (xi.rows() == 0) throw std::invalid_argument("samples: no demand samples");
  if (xi.cols() != patterns.days())
    throw std::invalid_argument("samples: column count differs from the pattern horizon");
  if (!xi.allFinite() || xi.minCoeff() < 0.0) throw std::invalid_argument("samples: demand must be finite and >= 0");
  if (patterns.cost.size() != patterns.patterns() || patterns.cost.minCoeff() < 0.0)
    throw std::invalid_argument("patterns: costs must be nonnegative, one per pattern");
}

std::vector<std::vector<int>> working_days(const PatternMatrix& p) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(p.patterns()));
  for (Eigen::Index i = 0; i < p.patterns(); ++i)
    for (Eigen::Index t = 0; t < p.days(); ++t)
      if (p.a(i, t) != 0.0) out[static_cast<std::size_t>(i)].push_back(static_cast<int>(t));
  return out;
}

struct Objective {
  const PatternMatrix& patterns;
  const std::vector<DayLoss>& loss;
  double k;

  double operator()(const Eigen::VectorXi& x) const {
    const Eigen::VectorXd s = k * (patterns.a.transpose() * x.cast<double>());
    double v = patterns.cost.dot(x.cast<double>());
    for (std::size_t t = 0; t < loss.size(); ++t) v += loss[t].value(s(static_cast<Eigen::Index>(t)));
    return v;
  }
};

class BranchAndBound {
 public:
  BranchAndBound(const PatternMatrix& p, const std::vector<DayLoss>& loss, const CostConfig& cost, long node_limit)
      : p_(p), loss_(loss), k_(cost.minutes_per_staff), node_limit_(node_limit), days_(working_days(p)) {
    const auto n = static_cast<std::size_t>(p.patterns());
    const auto h = static_cast<std::size_t>(p.days());
    double max_xi = 0.0;
    for (const auto& l : loss) max_xi = std::max(max_xi, l.sorted.back());
    // Above this every working day is already over all demand, so dropping a
    // hire only lowers cost.
    upper_ = static_cast<int>(std::ceil(max_xi / k_));
    // Cheapest cost per supplied minute among patterns i.. onward.
    rate_.assign(n + 1, std::numeric_limits<double>::infinity());
    for (std::size_t i = n; i-- > 0;) {
      const double r = days_[i].empty() ? std::numeric_limits<double>::infinity()
                                        : p.cost(static_cast<Eigen::Index>(i)) / (k_ * days_[i].size());
      rate_[i] = std::min(rate_[i + 1], r);
    }
    // cover_[i][t]: number of patterns >= i working day t.
    cover_.assign(n + 1, std::vector<int>(h, 0));
    for (std::size_t i = n; i-- > 0;) {
      cover_[i] = cover_[i + 1];
      for (int t : days_[i]) ++cover_[i][static_cast<std::size_t>(t)];
    }
    x_ = Eigen::VectorXi::Zero(static_cast<Eigen::Index>(n));
    s_.assign(h, 0.0);
  }

  bool run() {
    recurse(0, 0.0);
    return nodes_ <= node_limit_;
  }

  Eigen::VectorXi best_x;
  double best = std::numeric_limits<double>::infinity();
  long nodes() const { return nodes_; }

 private:
  double bound(std::size_t i, double planned) const {
    double lb = planned;
    const double r = rate_[i];
    for (std::size_t t = 0; t < s_.size(); ++t) {
      const double lo = s_[t];
      const double hi = lo + k_ * upper_ * cover_[i][t];
      if (hi <= lo || !std::isfinite(r)) {
        lb += loss_[t].value(lo);
        continue;
      }
      const double s = loss_[t].argmin(r, lo, hi);
      lb += loss_[t].value(s) + r * (s - lo);
    }
    return lb;
  }

  void recurse(std::size_t i, double planned) {
    if (++nodes_ > node_limit_) return;
    const std::size_t n = days_.size();
    if (i == n) {
      double v = planned;
      for (std::size_t t = 0; t < s_.size(); ++t) v += loss_[t].value(s_[t]);
      if (v < best - kTieTolerance) {
        best = v;
        best_x = x_;
      }
      return;
    }
    if (bound(i, planned) >= best - kTieTolerance) return;
    const auto ii = static_cast<Eigen::Index>(i);
    const int cap = days_[i].empty() ? 0 : upper_;
    for (int v = 0; v <= cap; ++v) {
      x_(ii) = v;
      recurse(i + 1, planned + v * p_.cost(ii));
      if (nodes_ > node_limit_) break;
      for (int t : days_[i]) s_[static_cast<std::size_t>(t)] += k_;
    }
    for (int t : days_[i]) s_[static_cast<std::size_t>(t)] -= k_ * (cap + 1);
    x_(ii) = 0;
  }

  const PatternMatrix& p_;
  const std::vector<DayLoss>& loss_;
  double k_;
  long node_limit_;
  std::vector<std::vector<int>> days_;
  int upper_ = 0;
  std::vector<double> rate_;
  std::vector<std::vector<int>> cover_;
  Eigen::VectorXi x_;
  std::vector<double> s_;
  long nodes_ = 0;
};

// Best-improvement add / remove / swap moves from a starting plan.
Eigen::VectorXi local_search(const PatternMatrix& p, const std::vector<std::vector<int>>& days,
                             const std::vector<DayLoss>& loss, double k, Eigen::VectorXi x) {
  const auto n = p.patterns();
  std::vector<double> s(loss.size(), 0.0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int t : days[static_cast<std::size_t>(i)]) s[static_cast<std::size_t>(t)] += k * x(i);

  auto delta = [&](Eigen::Index i, int sign) {
    double d = sign * p.cost(i);
    for (int t : days[static_cast<std::size_t>(i)]) {
      const double cur = s[static_cast<std::size_t>(t)];
      d += loss[static_cast<std::size_t>(t)].value(cur + sign * k) - loss[static_cast<std::size_t>(t)].value(cur);
    }
    return d;
  };
  auto apply = [&](Eigen::Index i, int sign) {
    x(i) += sign;
    for (int t : days[static_cast<std::size_t>(i)]) s[static_cast<std::size_t>(t)] += sign * k;
  };

  for (int guard = 0; guard < 100000; ++guard) {
    double best = -kTieTolerance;
    Eigen::Index add = -1;
    Eigen::Index drop = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (days[static_cast<std::size_t>(i)].empty()) continue;
      const double d = delta(i, +1);
      if (d < best) {
        best = d;
        add = i;
        drop = -1;
      }
      if (x(i) > 0) {
        const double r = delta(i, -1);
        if (r < best) {
          best = r;
          add = -1;
          drop = i;
        }
      }
    }
    if (add < 0 && drop < 0) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (x(i) == 0) continue;
        const double r = delta(i, -1);
        apply(i, -1);
        for (Eigen::Index j = 0; j < n; ++j) {
          if (j == i || days[static_cast<std::size_t>(j)].empty()) continue;
          const double d = r + delta(j, +1);
          if (d < best) {
            best = d;
            add = j;
            drop = i;
          }
        }
        apply(i, +1);
      }
    }
    if (add < 0 && drop < 0) break;
    if (drop >= 0) apply(drop, -1);
    if (add >= 0) apply(add, +1);
  }
  return x;
}

double day_dual(const DayLoss& l, double mu) {
  const double s = l.argmin(mu, 0.0, std::numeric_limits<double>::max());
  return l.value(s) + mu * s;
}

StaffPlan finish(const PatternMatrix& p, const DemandSamples& xi, const CostConfig& cost, Eigen::VectorXi x) {
  StaffPlan plan;
  plan.supply = cost.minutes_per_staff * (p.a.transpose() * x.cast<double>());
  plan.cost = evaluate_plan(p, x, xi, cost);
  plan.x = std::move(x);
  return plan;
}

}  // namespace

void PatternConfig::validate() const {
  if (template_days < 1) throw std::invalid_argument("template_days: must be positive");
  if (fulltime_days < 1 || fulltime_days > template_days)
    throw std::invalid_argument("fulltime_days: must lie in [1, template_days]");
  for (int d : parttime_days)
    if (d < 1 || d > template_days) throw std::invalid_argument("parttime_days: each must lie in [1, template_days]");
  std::set<int> seen;
  for (int d : weekend_days) {
    if (d < 1 || d > template_days) throw std::invalid_argument("weekend_days: day outside the template");
    if (!seen.insert(d).second) throw std::invalid_argument("weekend_days: duplicate day");
  }
  if (weekend_cap < 0) throw std::invalid_argument("weekend_cap: must be nonnegative");
  if (parttime_cap < 0) throw std::invalid_argument("parttime_cap: must be nonnegative");
  if (horizon_days < 1) throw std::invalid_argument("horizon_days: must be positive");
  if (!(staff_day_cost >= 0.0)) throw std::invalid_argument("staff_day_cost: must be nonnegative");
}

std::vector<std::vector<int>> pattern_subsets(int template_days, int working_days, const std::vector<int>& weekend_days,
                                              int weekend_cap, int parttime_cap, bool parttime) {
  std::vector<std::vector<int>> out;
  if (working_days < 0 || working_days > template_days) return out;
  if (parttime && working_days > parttime_cap) return out;
  std::vector<bool> weekend(static_cast<std::size_t>(template_days) + 1, false);
  for (int d : weekend_days)
    if (d >= 1 && d <= template_days) weekend[static_cast<std::size_t>(d)] = true;
  std::vector<int> cur;
  dfs_subsets(1, template_days, working_days, 0, weekend, weekend_cap, cur, out);
  return out;
}

PatternMatrix generate_patterns(const PatternConfig& cfg) {
  cfg.validate();
  std::vector<std::pair<PatternKind, std::vector<int>>> rows;
  for (auto& s : pattern_subsets(cfg.template_days, cfg.fulltime_days, cfg.weekend_days, cfg.weekend_cap,
                                 cfg.parttime_cap, false))
    rows.emplace_back(PatternKind::fulltime, std::move(s));
  for (int pt : cfg.parttime_days)
    for (auto& s :
         pattern_subsets(cfg.template_days, pt, cfg.weekend_days, cfg.weekend_cap, cfg.parttime_cap, true))
      rows.emplace_back(PatternKind::parttime, std::move(s));

  PatternMatrix m;
  m.a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), cfg.horizon_days);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<bool> on(static_cast<std::size_t>(cfg.template_days) + 1, false);
    for (int d : rows[i].second) on[static_cast<std::size_t>(d)] = true;
    for (int t = 0; t < cfg.horizon_days; ++t)
      if (on[static_cast<std::size_t>(t % cfg.template_days + 1)]) m.a(static_cast<Eigen::Index>(i), t) = 1.0;
    m.kind.push_back(rows[i].first);
    m.template_days.push_back(std::move(rows[i].second));
  }
  m.cost = cfg.staff_day_cost * m.a.rowwise().sum();
  return m;
}

PatternMatrix make_pattern_matrix(const Eigen::MatrixXd& a, double staff_day_cost) {
  PatternMatrix m;
  m.a = a;
  m.cost = staff_day_cost * a.rowwise().sum();
  m.kind.assign(static_cast<std::size_t>(a.rows()), PatternKind::fulltime);
  m.template_days.resize(static_cast<std::size_t>(a.rows()));
  return m;
}

void write_pattern_csv(std::ostream& out, const PatternMatrix& patterns) {
  out << "pattern,kind,cost";
  for (Eigen::Index t = 0; t < patterns.days(); ++t) out << ",d" << (t + 1);
  out << "\n";
  for (Eigen::Index i = 0; i < patterns.patterns(); ++i) {
    out << (i + 1) << ','
        << (patterns.kind[static_cast<std::size_t>(i)] == PatternKind::fulltime ? "fulltime" : "parttime") << ','
        << patterns.cost(i);
    for (Eigen::Index t = 0; t < patterns.days(); ++t) out << ',' << patterns.a(i, t);
    out << "\n";
  }
}

void CostConfig::validate() const {
  if (!(staff_day_cost >= 0.0)) throw std::invalid_argument("staff_day_cost: must be nonnegative");
  if (!(minutes_per_staff > 0.0)) throw std::invalid_argument("minutes_per_staff: must be positive");
  if (!(understaff_cost >= 0.0)) throw std::invalid_argument("understaff_cost: must be nonnegative");
  if (!(overstaff_cost >= 0.0)) throw std::invalid_argument("overstaff_cost: must be nonnegative");
  if (understaff_cost + overstaff_cost <= 0.0)
    throw std::invalid_argument("understaff_cost: penalties cannot both be zero");
  if (saa_samples < 1) throw std::invalid_argument("saa_samples: must be positive");
}

DemandSamples demand_samples(const std::vector<DemandTrace>& traces, int first_day, int days) {
  if (traces.empty()) throw std::invalid_argument("traces: empty ensemble");
  if (first_day < 1 || days < 1) throw std::invalid_argument("days: window must be positive");
  DemandSamples xi(static_cast<Eigen::Index>(traces.size()), days);
  for (std::size_t j = 0; j < traces.size(); ++j) {
    const auto& d = traces[j].demand_minutes;
    if (static_cast<int>(d.size()) < first_day - 1 + days)
      throw std::invalid_argument("days: window extends past the simulated horizon");
    for (int t = 0; t < days; ++t)
      xi(static_cast<Eigen::Index>(j), t) = d[static_cast<std::size_t>(first_day - 1 + t)];
  }
  return xi;
}

CostBreakdown evaluate_supply(const Eigen::VectorXd& supply, const DemandSamples& xi, const CostConfig& cost) {
  cost.validate();
  if (supply.size() != xi.cols()) throw std::invalid_argument("supply: length differs from the sample horizon");
  CostBreakdown out;
  out.planned = cost.staff_day_cost * supply.sum() / cost.minutes_per_staff;
  const double n = static_cast<double>(xi.rows());
  for (Eigen::Index k = 0; k < xi.rows(); ++k) {
    for (Eigen::Index t = 0; t < xi.cols(); ++t) {
      const double gap = xi(k, t) - supply(t);
      if (gap > 0.0) out.understaffing += cost.understaff_cost * gap / n;
      else out.overstaffing += cost.overstaff_cost * (-gap) / n;
    }
  }
  return out;
}

CostBreakdown evaluate_plan(const PatternMatrix& patterns, const Eigen::VectorXi& x, const DemandSamples& xi,
                            const CostConfig& cost) {
  if (x.size() != patterns.patterns()) throw std::invalid_argument("x: length differs from the pattern count");
  if (x.size() > 0 && x.minCoeff() < 0) throw std::invalid_argument("x: hires must be nonnegative");
  const Eigen::VectorXd supply = cost.minutes_per_staff * (patterns.a.transpose() * x.cast<double>());
  CostBreakdown out = evaluate_supply(supply, xi, cost);
  out.planned = patterns.cost.dot(x.cast<double>());
  return out;
}

double lagrangian_bound(const PatternMatrix& patterns, const DemandSamples& xi, const CostConfig& cost) {
  check_instance(patterns, xi, cost);
  const auto loss = day_losses(xi, cost);
  const double k = cost.minutes_per_staff;
  const Eigen::VectorXd work = patterns.a.rowwise().sum();

  // Feasible duals satisfy K (A mu)_i <= c_i for every pattern.
  auto feasible = [&](Eigen::VectorXd mu) {
    for (Eigen::Index t = 0; t < mu.size(); ++t) mu(t) = std::max(mu(t), -cost.overstaff_cost + 1e-12);
    const Eigen::VectorXd load = k * (patterns.a * mu);
    double ratio = 0.0;
    for (Eigen::Index i = 0; i < load.size(); ++i) {
      if (work(i) == 0.0) continue;
      if (patterns.cost(i) <= 0.0) {
        if (load(i) > 0.0) ratio = std::numeric_limits<double>::infinity();
        continue;
      }
      ratio = std::max(ratio, load(i) / patterns.cost(i));
    }
    if (!std::isfinite(ratio)) return Eigen::VectorXd(Eigen::VectorXd::Constant(mu.size(), -cost.overstaff_cost / 2));
    if (ratio > 1.0) mu /= ratio;
    return mu;
  };
  auto value = [&](const Eigen::VectorXd& mu) {
    double v = 0.0;
    for (std::size_t t = 0; t < loss.size(); ++t) v += day_dual(loss[t], mu(static_cast<Eigen::Index>(t)));
    return v;
  };

  double r = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < work.size(); ++i)
    if (work(i) > 0.0) r = std::min(r, patterns.cost(i) / (k * work(i)));
  if (!std::isfinite(r)) r = 0.0;
  Eigen::VectorXd mu = feasible(Eigen::VectorXd::Constant(patterns.days(), r));
  double best = value(mu);
  // Shift weight toward days whose relaxed supply is larger.
  double step = 0.1 * std::max(r, 1e-6);
  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd g(mu.size());
    for (std::size_t t = 0; t < loss.size(); ++t)
      g(static_cast<Eigen::Index>(t)) = loss[t].argmin(mu(static_cast<Eigen::Index>(t)), 0.0,
                                                       std::numeric_limits<double>::max());
    const double gn = g.norm();
    if (gn == 0.0) break;
    const Eigen::VectorXd cand = feasible(mu + step * g / gn);
    const double v = value(cand);
    if (v > best) {
      best = v;
      mu = cand;
    } else {
      step *= 0.7;
    }
  }
  return best;
}

StaffPlan solve_saa(const PatternMatrix& patterns, const DemandSamples& xi, const CostConfig& cost,
                    const SolveOptions& options) {
  check_instance(patterns, xi, cost);
  const auto loss = day_losses(xi, cost);
  if (patterns.patterns() <= options.exact_pattern_limit) {
    BranchAndBound bb(patterns, loss, cost, options.node_limit);
    if (bb.run()) {
      StaffPlan plan = finish(patterns, xi, cost, bb.best_x);
      plan.certificate = Certificate::optimal;
      plan.lower_bound = plan.cost.total();
      plan.gap = 0.0;
      plan.nodes = bb.nodes();
      return plan;
    }
  }

  const auto days = working_days(patterns);
  const Objective objective{patterns, loss, cost.minutes_per_staff};
  std::vector<Eigen::VectorXi> starts{Eigen::VectorXi::Zero(patterns.patterns())};
  for (const auto& w : options.warm_starts) {
    if (w.size() != patterns.patterns() || (w.size() > 0 && w.minCoeff() < 0))
      throw std::invalid_argument("warm_starts: each start needs one nonnegative entry per pattern");
    starts.push_back(w);
  }
  Eigen::VectorXi best_x;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : starts) {
    Eigen::VectorXi x = local_search(patterns, days, loss, cost.minutes_per_staff, s);
    const double v = objective(x);
    if (v < best - kTieTolerance) {
      best = v;
      best_x = std::move(x);
    }
  }
  StaffPlan plan = finish(patterns, xi, cost, best_x);
  plan.certificate = Certificate::heuristic;
  plan.lower_bound = std::min(lagrangian_bound(patterns, xi, cost), plan.cost.total());
  plan.gap = plan.cost.total() > 0.0 ? (plan.cost.total() - plan.lower_bound) / plan.cost.total() : 0.0;
  return plan;
}

VssResult value_of_stochastic_solution(const PatternMatrix& patterns, const DemandSamples& xi, const CostConfig& cost,
                                       const SolveOptions& options) {
  check_instance(patterns, xi, cost);
  VssResult out;
  const DemandSamples mean = xi.colwise().mean();
  out.expected_value = solve_saa(patterns, mean, cost, options);
  SolveOptions with_ev = options;
  with_ev.warm_starts.push_back(out.expected_value.x);
  out.stochastic = solve_saa(patterns, xi, cost, with_ev);
  out.expected_value_cost = evaluate_plan(patterns, out.expected_value.x, xi, cost);
  out.vss = out.expected_value_cost.total() - out.stochastic.cost.total();
  return out;
}

std::vector<StrategyRow> compare_staffing_strategies(const StrategyInputs& in, const CostConfig& cost) {
  check_instance(in.patterns, in.samples, cost);
  if (static_cast<Eigen::Index>(in.mean_census.size()) != in.samples.cols())
    throw std::invalid_argument("mean_census: length differs from the planning horizon");
  if (!(in.facility_ratio > 0.0) || !(in.state_ratio > 0.0))
    throw std::invalid_argument("ratio: residents per staff must be positive");
  const double k = cost.minutes_per_staff;

  auto ratio_supply = [&](double ratio) {
    Eigen::VectorXd s(in.samples.cols());
    for (Eigen::Index t = 0; t < s.size(); ++t)
      s(t) = k * std::ceil(in.mean_census[static_cast<std::size_t>(t)] / ratio - 1e-9);
    return s;
  };
  // Cheapest pattern plan covering a required supply: shortfall priced far
  // above any staff cost, surplus free.
  auto cover = [&](const Eigen::VectorXd& need) {
    CostConfig hard = cost;
    hard.understaff_cost = 1000.0 * std::max(cost.staff_day_cost, 1.0) / k;
    hard.overstaff_cost = 0.0;
    SolveOptions opt;
    opt.exact_pattern_limit = 0;
    return solve_saa(in.patterns, DemandSamples(need.transpose()), hard, opt).x;
  };

  const Eigen::VectorXd m1 = ratio_supply(in.facility_ratio);
  const Eigen::VectorXd m2 = ratio_supply(in.state_ratio);
  const Eigen::VectorXi m3 = cover(m1);
  const Eigen::VectorXi m4 = cover(m2);
  SolveOptions opt;
  opt.exact_pattern_limit = 0;
  const Eigen::VectorXi m5 = in.misspecified.size() > 0 ? solve_saa(in.patterns, in.misspecified, cost, opt).x
                                                        : Eigen::VectorXi(Eigen::VectorXi::Zero(in.patterns.patterns()));
  const Eigen::VectorXi m6 = solve_saa(in.patterns, in.samples.colwise().mean(), cost, opt).x;
  opt.warm_starts = {m3, m4, m5, m6};
  const StaffPlan proposed = solve_saa(in.patterns, in.samples, cost, opt);

  std::vector<StrategyRow> rows;
  rows.push_back({"proposed", "SAA over pattern hires", proposed.cost});
  rows.push_back({"M1", "facility ratio, daily staffing", evaluate_supply(m1, in.samples, cost)});
  rows.push_back({"M2", "state ratio, daily staffing", evaluate_supply(m2, in.samples, cost)});
  rows.push_back({"M3", "facility ratio, pattern cover", evaluate_plan(in.patterns, m3, in.samples, cost)});
  rows.push_back({"M4", "state ratio, pattern cover", evaluate_plan(in.patterns, m4, in.samples, cost)});
  rows.push_back({"M5", "SAA on single-disposition demand", evaluate_plan(in.patterns, m5, in.samples, cost)});
  rows.push_back({"M6", "mean-demand plan", evaluate_plan(in.patterns, m6, in.samples, cost)});
  return rows;
}

void write_plan(std::ostream& out, const PatternMatrix& patterns, const StaffPlan& plan) {
  out << "pattern,kind,hires,template_days\n";
  for (Eigen::Index i = 0; i < plan.x.size(); ++i) {
    if (plan.x(i) == 0) continue;
    out << (i + 1) << ','
        << (patterns.kind[static_cast<std::size_t>(i)] == PatternKind::fulltime ? "fulltime" : "parttime") << ','
        << plan.x(i) << ',';
    const auto& d = patterns.template_days[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < d.size(); ++j) out << (j ? " " : "") << d[j];
    out << "\n";
  }
  out << "\nday,supply_minutes\n";
  for (Eigen::Index t = 0; t < plan.supply.size(); ++t) out << (t + 1) << ',' << plan.supply(t) << "\n";
  out << "\nterm,dollars\n"
      << "planned," << plan.cost.planned << "\n"
      << "understaffing," << plan.cost.understaffing << "\n"
      << "overstaffing," << plan.cost.overstaffing << "\n"
      << "total," << plan.cost.total() << "\n";
}

}  // namespace nhplan
