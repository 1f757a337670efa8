#include "nhplan/los.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace nhplan {

Eigen::VectorXi SurvivalData::events_for(int cause_index) const {
  return (cause.array() == cause_index).cast<int>();
}

SurvivalData short_stay_data(const Cohort& cohort, const std::vector<Disposition>& dispositions) {
  std::vector<int> rows;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& r = cohort.residents()[i];
    if (r.stay_class == StayClass::short_stay && r.los_days) rows.push_back(static_cast<int>(i));
  }
  SurvivalData d;
  const auto n = static_cast<Eigen::Index>(rows.size());
  d.time.resize(n);
  d.cause.resize(n);
  d.x.resize(n, static_cast<Eigen::Index>(cohort.covariate_names().size()));
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& r = cohort.residents()[static_cast<std::size_t>(rows[static_cast<std::size_t>(k)])];
    d.time(k) = std::min(*r.los_days, kShortStayMaxDays);
    d.cause(k) = -1;
    for (std::size_t m = 0; m < dispositions.size(); ++m)
      if (r.disposition == dispositions[m] && r.disposition != Disposition::censored) d.cause(k) = static_cast<int>(m);
    d.x.row(k) = r.covariates;
  }
  return d;
}

Cohort settled_cohort(const Cohort& cohort) {
  int end = 0;
  for (const auto& r : cohort.residents()) end = std::max(end, r.admit_day + r.los_days.value_or(0));
  std::vector<ResidentRecord> keep;
  for (const auto& r : cohort.residents())
    if (end - r.admit_day > kShortStayMaxDays) keep.push_back(r);
  return Cohort(std::move(keep), cohort.covariate_names(), cohort.provenance());
}

CumulativeHazard::CumulativeHazard(Eigen::VectorXd cumulative) : cumulative_(std::move(cumulative)) {
  if (cumulative_.size() == 0 || cumulative_(0) != 0.0)
    throw NumericalError("cumulative hazard must start at 0");
  for (Eigen::Index t = 1; t < cumulative_.size(); ++t)
    if (!(cumulative_(t) >= cumulative_(t - 1)) || !std::isfinite(cumulative_(t)))
      throw NumericalError("cumulative hazard must be finite and nondecreasing");
}

CumulativeHazard CumulativeHazard::from_increments(const Eigen::VectorXd& increments) {
  Eigen::VectorXd cum(increments.size() + 1);
  cum(0) = 0.0;
  for (Eigen::Index t = 0; t < increments.size(); ++t) cum(t + 1) = cum(t) + increments(t);
  return CumulativeHazard(std::move(cum));
}

double CumulativeHazard::at(int day) const {
  if (day <= 0) return 0.0;
  return cumulative_(std::min<Eigen::Index>(day, cumulative_.size() - 1));
}

double CumulativeHazard::increment(int day) const {
  if (day <= 0 || day > max_day()) return 0.0;
  return cumulative_(day) - cumulative_(day - 1);
}

std::vector<std::pair<int, double>> CumulativeHazard::jumps() const {
  std::vector<std::pair<int, double>> out;
  for (int t = 1; t <= max_day(); ++t)
    if (increment(t) > 0.0) out.emplace_back(t, increment(t));
  return out;
}

PartialLikelihood cox_partial_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXi& time,
                                         const Eigen::VectorXi& event, const Eigen::VectorXd& beta, Ties ties,
                                         bool derivatives) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const Eigen::VectorXd eta = x * beta;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return time(a) > time(b); });

  PartialLikelihood out;
  out.gradient = Eigen::VectorXd::Zero(p);
  out.hessian = Eigen::MatrixXd::Zero(p, p);
  long double ll = 0.0L;
  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);

  std::size_t k = 0;
  while (k < order.size()) {
    const int t = time(order[k]);
    std::size_t end = k;
    int deaths = 0;
    double eta_sum = 0.0;
    double d0 = 0.0;
    Eigen::VectorXd xsum = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd d1 = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(p, p);
    while (end < order.size() && time(order[end]) == t) {
      const Eigen::Index i = order[end];
      const double w = std::exp(eta(i));
      s0 += w;
      if (derivatives) {
        s1.noalias() += w * x.row(i).transpose();
        s2.noalias() += w * x.row(i).transpose() * x.row(i);
      }
      if (event(i)) {
        ++deaths;
        eta_sum += eta(i);
        d0 += w;
        if (derivatives) {
          xsum += x.row(i).transpose();
          if (ties == Ties::efron) {
            d1.noalias() += w * x.row(i).transpose();
            d2.noalias() += w * x.row(i).transpose() * x.row(i);
          }
        }
      }
      ++end;
    }
    if (deaths > 0) {
      ll += eta_sum;
      if (derivatives) out.gradient += xsum;
      for (int j = 0; j < deaths; ++j) {
        // Breslow keeps the whole risk set for every tied death; Efron
        // removes a growing share of the tied deaths' weight.
        const double f = ties == Ties::efron ? static_cast<double>(j) / deaths : 0.0;
        const double den = s0 - f * d0;
        ll -= std::log(den);
        if (derivatives) {
          const Eigen::VectorXd mean = (s1 - f * d1) / den;
          out.gradient -= mean;
          out.hessian -= (s2 - f * d2) / den - mean * mean.transpose();
        }
      }
    }
    k = end;
  }
  out.value = static_cast<double>(ll);
  return out;
}

CoxFit fit_cox(const Eigen::MatrixXd& x, const Eigen::VectorXi& time, const Eigen::VectorXi& event,
               const CoxOptions& options) {
  const Eigen::Index p = x.cols();
  if (event.sum() < 2) throw NumericalError("fit_cox: fewer than 2 events");

  // Columns without variation carry no information; they stay at 0.
  const Eigen::RowVectorXd mean = x.colwise().mean();
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < p; ++j)
    if ((x.col(j).array() - mean(j)).abs().maxCoeff() > 0.0) active.push_back(j);
  const auto q = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd xc(x.rows(), q);
  for (Eigen::Index a = 0; a < q; ++a) xc.col(a) = x.col(active[a]).array() - mean(active[a]);

  CoxFit fit;
  fit.beta = Eigen::VectorXd::Zero(p);
  fit.standard_error = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
  fit.flagged.assign(static_cast<std::size_t>(p), false);

  Eigen::VectorXd b = Eigen::VectorXd::Zero(q);
  PartialLikelihood pl = cox_partial_likelihood(xc, time, event, b, options.ties);
  fit.history.push_back(pl.value);
  bool diverged = false;
  for (int it = 0; it < options.max_iterations && q > 0; ++it) {
    if (pl.gradient.norm() < options.gradient_tolerance) break;
    const Eigen::MatrixXd info = -pl.hessian;
    Eigen::VectorXd step;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() && (ldlt.vectorD().array() > 1e-12).all()) {
      step = ldlt.solve(pl.gradient);
    } else {
      step = info.completeOrthogonalDecomposition().pseudoInverse() * pl.gradient;
    }
    double scale = 1.0;
    bool accepted = false;
    const double slack = 1e-12 * std::max(1.0, std::fabs(pl.value));
    for (int h = 0; h < 40; ++h) {
      const Eigen::VectorXd candidate = b + scale * step;
      PartialLikelihood next = cox_partial_likelihood(xc, time, event, candidate, options.ties);
      if (std::isfinite(next.value) && next.value >= pl.value - slack) {
        b = candidate;
        pl = std::move(next);
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    fit.iterations = it + 1;
    if (!accepted) break;
    fit.history.push_back(pl.value);
    if (b.cwiseAbs().maxCoeff() > options.divergence_bound) {
      diverged = true;
      break;
    }
  }

  fit.log_partial_likelihood = pl.value;
  fit.gradient_norm = pl.gradient.norm();
  // Under separation the gradient decays like exp(-|b|), so the tolerance
  // can be met well before the divergence bound.
  bool separated = diverged;
  for (Eigen::Index a = 0; a < q; ++a) {
    fit.beta(active[a]) = b(a);
    if (std::fabs(b(a)) > options.divergence_bound * 0.5) {
      fit.flagged[static_cast<std::size_t>(active[a])] = true;
      separated = true;
    }
  }
  fit.converged = !separated && fit.gradient_norm < options.gradient_tolerance;
  if (q > 0) {
    const Eigen::MatrixXd info = -pl.hessian;
    const Eigen::MatrixXd cov = info.completeOrthogonalDecomposition().pseudoInverse();
    for (Eigen::Index a = 0; a < q; ++a) fit.standard_error(active[a]) = std::sqrt(std::max(0.0, cov(a, a)));
  }
  if (!fit.converged && !separated && fit.iterations >= options.max_iterations)
    throw NumericalError("fit_cox: no convergence after " + std::to_string(options.max_iterations) + " iterations");
  return fit;
}

CumulativeHazard baseline_hazard(const Eigen::MatrixXd& x, const Eigen::VectorXi& time, const Eigen::VectorXi& event,
                                 const Eigen::VectorXd& beta, int max_day, Ties ties) {
  const Eigen::VectorXd w = (x * beta).array().exp();
  Eigen::VectorXd at_risk = Eigen::VectorXd::Zero(max_day + 2);
  Eigen::VectorXd deaths = Eigen::VectorXd::Zero(max_day + 1);
  Eigen::VectorXd death_weight = Eigen::VectorXd::Zero(max_day + 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int t = std::clamp(time(i), 0, max_day);
    at_risk(t) += w(i);
    if (event(i) && t >= 1) {
      deaths(t) += 1.0;
      death_weight(t) += w(i);
    }
  }
  // suffix sums: the risk set of day t is everyone with time >= t
  for (int t = max_day; t >= 0; --t) at_risk(t) += at_risk(t + 1);
  Eigen::VectorXd increments = Eigen::VectorXd::Zero(max_day);
  for (int t = 1; t <= max_day; ++t) {
    if (deaths(t) == 0.0) continue;
    if (ties == Ties::breslow) {
      increments(t - 1) = deaths(t) / at_risk(t);
    } else {
      const int d = static_cast<int>(deaths(t));
      for (int j = 0; j < d; ++j) increments(t - 1) += 1.0 / (at_risk(t) - static_cast<double>(j) / d * death_weight(t));
    }
  }
  return CumulativeHazard::from_increments(increments);
}

CoxFit fit_coefficients(const Cohort& cohort, Disposition disposition, const CoxOptions& options) {
  const SurvivalData d = short_stay_data(cohort, {disposition});
  return fit_cox(d.x, d.time, d.events_for(0), options);
}

CumulativeHazard fit_baseline(const Cohort& cohort, Disposition disposition, const Eigen::VectorXd& beta, Ties ties) {
  const SurvivalData d = short_stay_data(cohort, {disposition});
  return baseline_hazard(d.x, d.time, d.events_for(0), beta, kShortStayMaxDays, ties);
}

Eigen::VectorXd CompetingRiskModel::risk_scores(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(causes()));
  for (std::size_t m = 0; m < causes(); ++m) out(static_cast<Eigen::Index>(m)) = std::exp(coefficients[m].dot(x));
  return out;
}

double CompetingRiskModel::survival(int day, const Eigen::VectorXd& x) const {
  const Eigen::VectorXd r = risk_scores(x);
  double h = 0.0;
  for (std::size_t m = 0; m < causes(); ++m) h += baseline[m].at(day) * r(static_cast<Eigen::Index>(m));
  return std::exp(-h);
}

void CompetingRiskModel::validate() const {
  if (dispositions.empty()) throw NumericalError("competing-risk model without dispositions");
  if (coefficients.size() != causes() || baseline.size() != causes())
    throw NumericalError("competing-risk model: one coefficient vector and baseline per disposition required");
  for (const auto& b : coefficients)
    if (b.size() != static_cast<Eigen::Index>(covariate_names.size()))
      throw NumericalError("competing-risk model: coefficient length differs from covariate count");
  for (const auto& h : baseline)
    if (h.max_day() < max_support_day) throw NumericalError("competing-risk model: baseline shorter than support");
}

CompetingRiskFit fit_competing_risk_model(const Cohort& cohort, const std::vector<Disposition>& dispositions,
                                          const CoxOptions& options) {
  const SurvivalData d = short_stay_data(cohort, dispositions);
  CompetingRiskFit out;
  out.model.dispositions = dispositions;
  out.model.covariate_names = cohort.covariate_names();
  for (std::size_t m = 0; m < dispositions.size(); ++m) {
    const Eigen::VectorXi ev = d.events_for(static_cast<int>(m));
    CoxFit fit = fit_cox(d.x, d.time, ev, options);
    out.model.baseline.push_back(baseline_hazard(d.x, d.time, ev, fit.beta, kShortStayMaxDays, options.ties));
    out.model.coefficients.push_back(fit.beta);
    out.fits.push_back(std::move(fit));
  }
  return out;
}

CompetingRiskFit fit_single_disposition_variant(const Cohort& cohort, const CoxOptions& options) {
  const SurvivalData all = short_stay_data(cohort, {Disposition::community});
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < all.size(); ++i)
    if (all.cause(i) == 0) keep.push_back(i);
  SurvivalData d;
  const auto n = static_cast<Eigen::Index>(keep.size());
  d.time.resize(n);
  d.cause = Eigen::VectorXi::Zero(n);
  d.x.resize(n, all.x.cols());
  for (Eigen::Index k = 0; k < n; ++k) {
    d.time(k) = all.time(keep[static_cast<std::size_t>(k)]);
    d.x.row(k) = all.x.row(keep[static_cast<std::size_t>(k)]);
  }
  CompetingRiskFit out;
  out.model.dispositions = {Disposition::community};
  out.model.covariate_names = cohort.covariate_names();
  const Eigen::VectorXi ev = d.events_for(0);
  CoxFit fit = fit_cox(d.x, d.time, ev, options);
  out.model.baseline.push_back(baseline_hazard(d.x, d.time, ev, fit.beta, kShortStayMaxDays, options.ties));
  out.model.coefficients.push_back(fit.beta);
  out.fits.push_back(std::move(fit));
  return out;
}

LosDraw sample_short_stay(const CompetingRiskModel& model, const Eigen::VectorXd& x, Rng& rng) {
  const int support = model.max_support_day;
  double best_time = std::numeric_limits<double>::infinity();
  int best_cause = -1;
  double best_ratio = std::numeric_limits<double>::infinity();
  int ratio_cause = 0;
  for (std::size_t m = 0; m < model.causes(); ++m) {
    const double e = standard_exponential(rng);
    const double score = std::exp(model.coefficients[m].dot(x));
    const double target = e / score;
    const Eigen::VectorXd& cum = model.baseline[m].values();
    const Eigen::Index last = std::min<Eigen::Index>(support, cum.size() - 1);
    if (cum(last) >= target && target > 0.0) {
      // first day whose cumulative hazard reaches the target
      const double* begin = cum.data();
      const double* hit = std::lower_bound(begin + 1, begin + last + 1, target);
      const auto day = static_cast<int>(hit - begin);
      const double lo = cum(day - 1);
      const double frac = (target - lo) / (cum(day) - lo);
      const double t = (day - 1) + std::clamp(frac, 0.0, 1.0);
      if (t < best_time) {
        best_time = t;
        best_cause = static_cast<int>(m);
      }
    } else {
      const double ratio = cum(last) > 0.0 ? target / cum(last) : std::numeric_limits<double>::infinity();
      if (ratio < best_ratio) {
        best_ratio = ratio;
        ratio_cause = static_cast<int>(m);
      }
    }
  }
  LosDraw draw;
  if (best_cause >= 0) {
    draw.los_days = std::clamp(static_cast<int>(std::ceil(best_time)), 1, support);
    draw.disposition = model.dispositions[static_cast<std::size_t>(best_cause)];
  } else {
    draw.los_days = support;
    draw.disposition = model.dispositions[static_cast<std::size_t>(ratio_cause)];
  }
  return draw;
}

namespace {

struct LikelihoodTerms {
  long double event_part = 0.0L;
  long double exposure_part = 0.0L;
};

}  // namespace

double competing_risk_log_likelihood(const CompetingRiskModel& model, const SurvivalData& data) {
  long double total = 0.0L;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd xi = data.x.row(i).transpose();
    const int t = data.time(i);
    long double li = 0.0L;
    for (std::size_t m = 0; m < model.causes(); ++m) {
      const double eta = model.coefficients[m].dot(xi);
      li -= static_cast<long double>(model.baseline[m].at(t)) * std::exp(static_cast<long double>(eta));
      if (data.cause(i) == static_cast<int>(m))
        li += std::log(static_cast<long double>(model.baseline[m].increment(t))) + eta;
    }
    total += li;
  }
  return static_cast<double>(total);
}

double disposition_log_likelihood(const CompetingRiskModel& model, const SurvivalData& data, int cause_index) {
  const auto m = static_cast<std::size_t>(cause_index);
  const Eigen::VectorXd eta = data.x * model.coefficients[m];
  LikelihoodTerms terms;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const int t = data.time(i);
    if (data.cause(i) == cause_index)
      terms.event_part += std::log(static_cast<long double>(model.baseline[m].increment(t))) + eta(i);
    terms.exposure_part += static_cast<long double>(model.baseline[m].at(t)) * std::exp(static_cast<long double>(eta(i)));
  }
  return static_cast<double>(terms.event_part - terms.exposure_part);
}

// --- long stay -------------------------------------------------------------

namespace {

constexpr int kLongStayFloor = kShortStayMaxDays + 1;

double lognormal_cdf(const LongStayModel& m, double d) {
  if (d <= 0.0) return 0.0;
  return normal_cdf((std::log(d) - m.log_mean) / m.log_sd);
}

}  // namespace

int sample_long_stay(const LongStayModel& model, Rng& rng) {
  const double z = std::normal_distribution<double>(0.0, 1.0)(rng);
  const double days = std::ceil(std::exp(model.log_mean + model.log_sd * z));
  if (!(days < 1e7)) return 10'000'000;
  return std::max(kLongStayFloor, static_cast<int>(days));
}

double long_stay_pmf(const LongStayModel& model, int day) {
  if (day < kLongStayFloor) return 0.0;
  if (day == kLongStayFloor) return lognormal_cdf(model, day);
  return lognormal_cdf(model, day) - lognormal_cdf(model, day - 1);
}

double long_stay_survival(const LongStayModel& model, int day) {
  if (day < kLongStayFloor) return 1.0;
  return 1.0 - lognormal_cdf(model, day);
}

namespace {

struct LongObs {
  int days;
  bool event;
};

double long_log_likelihood(const LongStayModel& m, const std::vector<LongObs>& obs) {
  double ll = 0.0;
  for (const auto& o : obs) {
    const double p = o.event ? long_stay_pmf(m, o.days) : long_stay_survival(m, o.days);
    ll += std::log(std::max(p, 1e-300));
  }
  return ll;
}

// Nelder-Mead on (log_mean, log log_sd).
Eigen::Vector2d maximize_long(const std::vector<LongObs>& obs, Eigen::Vector2d start) {
  auto f = [&](const Eigen::Vector2d& v) {
    return -long_log_likelihood(LongStayModel{v(0), std::exp(v(1))}, obs);
  };
  std::array<Eigen::Vector2d, 3> s = {start, start + Eigen::Vector2d(0.3, 0.0), start + Eigen::Vector2d(0.0, 0.3)};
  std::array<double, 3> fv = {f(s[0]), f(s[1]), f(s[2])};
  for (int it = 0; it < 2000; ++it) {
    std::array<int, 3> idx = {0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[static_cast<std::size_t>(a)] < fv[static_cast<std::size_t>(b)]; });
    const auto b = static_cast<std::size_t>(idx[0]);
    const auto g = static_cast<std::size_t>(idx[1]);
    const auto w = static_cast<std::size_t>(idx[2]);
    if (std::fabs(fv[w] - fv[b]) < 1e-12 * (1.0 + std::fabs(fv[b])) && (s[w] - s[b]).norm() < 1e-9) break;
    const Eigen::Vector2d c = 0.5 * (s[b] + s[g]);
    const Eigen::Vector2d r = c + (c - s[w]);
    const double fr = f(r);
    if (fr < fv[b]) {
      const Eigen::Vector2d e = c + 2.0 * (c - s[w]);
      const double fe = f(e);
      if (fe < fr) {
        s[w] = e;
        fv[w] = fe;
      } else {
        s[w] = r;
        fv[w] = fr;
      }
    } else if (fr < fv[g]) {
      s[w] = r;
      fv[w] = fr;
    } else {
      const Eigen::Vector2d k = c + 0.5 * (s[w] - c);
      const double fk = f(k);
      if (fk < fv[w]) {
        s[w] = k;
        fv[w] = fk;
      } else {
        for (std::size_t i = 0; i < 3; ++i) {
          if (i == b) continue;
          s[i] = s[b] + 0.5 * (s[i] - s[b]);
          fv[i] = f(s[i]);
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < 3; ++i)
    if (fv[i] < fv[best]) best = i;
  return s[best];
}

}  // namespace

LongStayFit fit_long_stay(const Cohort& cohort) {
  std::vector<LongObs> obs;
  LongStayFit out;
  double log_sum = 0.0;
  for (const auto& r : cohort.residents()) {
    if (r.stay_class != StayClass::long_stay || !r.los_days) continue;
    const bool event = r.disposition != Disposition::censored;
    obs.push_back({*r.los_days, event});
    log_sum += std::log(static_cast<double>(*r.los_days));
    (event ? out.events : out.censored)++;
  }
  if (out.events < 2) throw NumericalError("fit_long_stay: fewer than 2 completed long stays");
  const Eigen::Vector2d start(log_sum / static_cast<double>(obs.size()) + 0.3, std::log(0.7));
  const Eigen::Vector2d best = maximize_long(obs, start);
  out.model = LongStayModel{best(0), std::exp(best(1))};
  out.log_likelihood = long_log_likelihood(out.model, obs);

  // Observed vs expected discharges per LOS bin; expected counts add each
  // resident's discrete hazard over the days it was at risk.
  int max_day = kLongStayFloor;
  for (const auto& o : obs) max_day = std::max(max_day, o.days);
  std::vector<double> hazard(static_cast<std::size_t>(max_day + 1), 0.0);
  for (int d = kLongStayFloor; d <= max_day; ++d) {
    const double at_risk = d == kLongStayFloor ? 1.0 : long_stay_survival(out.model, d - 1);
    hazard[static_cast<std::size_t>(d)] = at_risk > 0.0 ? std::min(1.0, long_stay_pmf(out.model, d) / at_risk) : 1.0;
  }
  std::vector<int> edges;  // bin k covers [edges[k], edges[k+1])
  edges.push_back(kLongStayFloor);
  for (int q = 1; q < 10; ++q) {
    const double prob = q / 10.0;
    // quantile of the fitted law, bisection on the day grid
    int lo = kLongStayFloor;
    int hi = std::max(max_day, kLongStayFloor + 1);
    if (1.0 - long_stay_survival(out.model, hi) < prob) continue;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      (1.0 - long_stay_survival(out.model, mid) >= prob ? hi : lo) = mid;
    }
    if (hi > edges.back()) edges.push_back(hi);
  }
  edges.push_back(max_day + 1);
  const std::size_t bins = edges.size() - 1;
  std::vector<double> observed(bins, 0.0);
  std::vector<double> expected(bins, 0.0);
  auto bin_of = [&](int day) {
    std::size_t k = 0;
    while (k + 1 < bins && day >= edges[k + 1]) ++k;
    return k;
  };
  for (const auto& o : obs) {
    if (o.event) observed[bin_of(o.days)] += 1.0;
    for (int d = kLongStayFloor; d <= o.days; ++d) expected[bin_of(d)] += hazard[static_cast<std::size_t>(d)];
  }
  out.goodness_of_fit = chi_square_pooled(observed, expected, 2);
  return out;
}

// --- Kaplan-Meier --------------------------------------------------------------

SurvivalCurve::SurvivalCurve(std::vector<double> times, std::vector<double> survival)
    : times_(std::move(times)), survival_(std::move(survival)) {}

double SurvivalCurve::at(double t) const {
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 1.0;
  return survival_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

SurvivalCurve kaplan_meier(const std::vector<TimeEvent>& samples) {
  if (samples.empty()) throw NumericalError("kaplan_meier: empty input");
  std::vector<TimeEvent> s = samples;
  for (const auto& v : s)
    if (!(v.time > 0.0)) throw NumericalError("kaplan_meier: times must be positive");
  std::sort(s.begin(), s.end(), [](const TimeEvent& a, const TimeEvent& b) { return a.time < b.time; });
  std::vector<double> times;
  std::vector<double> surv;
  double at_risk = static_cast<double>(s.size());
  double value = 1.0;
  std::size_t k = 0;
  while (k < s.size()) {
    const double t = s[k].time;
    double deaths = 0.0;
    double leaving = 0.0;
    while (k < s.size() && s[k].time == t) {
      deaths += s[k].event ? 1.0 : 0.0;
      leaving += 1.0;
      ++k;
    }
    if (deaths > 0.0) {
      value *= 1.0 - deaths / at_risk;
      times.push_back(t);
      surv.push_back(value);
    }
    at_risk -= leaving;
  }
  return SurvivalCurve(std::move(times), std::move(surv));
}

KmOverlay km_overlay_report(const std::vector<TimeEvent>& predicted, const std::vector<TimeEvent>& observed,
                            int max_day) {
  const SurvivalCurve a = kaplan_meier(predicted);
  const SurvivalCurve b = kaplan_meier(observed);
  KmOverlay out;
  for (int d = 0; d <= max_day; ++d) {
    out.grid.push_back(d);
    out.predicted.push_back(a.at(d));
    out.observed.push_back(b.at(d));
    out.sup_distance = std::max(out.sup_distance, std::fabs(out.predicted.back() - out.observed.back()));
  }
  return out;
}

KmOverlay km_overlay_for_model(const CompetingRiskModel& model, const Cohort& cohort, int per_resident,
                               std::uint64_t seed) {
  std::vector<TimeEvent> observed;
  std::vector<TimeEvent> predicted;
  Rng rng = make_stream(seed, 0, 0x4B4D);
  for (const auto& r : cohort.residents()) {
    if (r.stay_class != StayClass::short_stay || !r.los_days) continue;
    observed.push_back({static_cast<double>(*r.los_days), r.disposition != Disposition::censored});
    for (int k = 0; k < per_resident; ++k) {
      const LosDraw d = sample_short_stay(model, r.covariates, rng);
      predicted.push_back({static_cast<double>(d.los_days), true});
    }
  }
  return km_overlay_report(predicted, observed, model.max_support_day);
}

}  // namespace nhplan
