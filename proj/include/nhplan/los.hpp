#pragma once

#include "nhplan/cohort.hpp"
#include "nhplan/random.hpp"
#include "nhplan/stats.hpp"

#include <Eigen/Dense>

#include <optional>
#include <utility>
#include <vector>

namespace nhplan {

/// Survival data on the integer day grid. `cause` is -1 for a censored
/// observation, otherwise the index of the disposition that ended the stay.
struct SurvivalData {
  Eigen::VectorXi time;
  Eigen::VectorXi cause;
  Eigen::MatrixXd x;

  Eigen::Index size() const { return time.size(); }
  /// 0/1 event indicator for one cause; other causes count as censoring.
  Eigen::VectorXi events_for(int cause_index) const;
};

/// Short-stay observations of a cohort, times capped at 100 days. Causes
/// index into `dispositions`; any other completed disposition is censored.
SurvivalData short_stay_data(const Cohort& cohort, const std::vector<Disposition>& dispositions);

/// Residents admitted more than 100 days before the last observed day, so
/// their short/long class is known. Late admissions still in house may be
/// long-stayers; keeping them as censored short stays dilutes the short-stay
/// risk sets.
Cohort settled_cohort(const Cohort& cohort);

/// Cumulative baseline hazard on days 0..max_day. cumulative(0) == 0.
class CumulativeHazard {
 public:
  CumulativeHazard() = default;
  explicit CumulativeHazard(Eigen::VectorXd cumulative);
  static CumulativeHazard from_increments(const Eigen::VectorXd& increments);

  int max_day() const { return static_cast<int>(cumulative_.size()) - 1; }
  double at(int day) const;
  double increment(int day) const;
  const Eigen::VectorXd& values() const { return cumulative_; }
  /// Days with a positive increment, paired with the increment.
  std::vector<std::pair<int, double>> jumps() const;

 private:
  Eigen::VectorXd cumulative_;
};

/// Handling of discharges sharing a day. Breslow treats them as one block;
/// Efron spreads them over the day, which matches a hazard that is constant
/// within each day.
enum class Ties { breslow, efron };

struct CoxOptions {
  Ties ties = Ties::efron;
  int max_iterations = 100;
  double gradient_tolerance = 1e-8;
  double divergence_bound = 25.0;
};

struct CoxFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd standard_error;
  double log_partial_likelihood = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Coefficients that ran off towards infinity (separable data).
  std::vector<bool> flagged;
  /// Log partial likelihood after each accepted Newton step.
  std::vector<double> history;
};

/// Partial log-likelihood with gradient and Hessian.
struct PartialLikelihood {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};
PartialLikelihood cox_partial_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXi& time,
                                         const Eigen::VectorXi& event, const Eigen::VectorXd& beta,
                                         Ties ties = Ties::efron, bool derivatives = true);

/// Newton iteration with step halving on the partial likelihood.
CoxFit fit_cox(const Eigen::MatrixXd& x, const Eigen::VectorXi& time, const Eigen::VectorXi& event,
               const CoxOptions& options = {});

/// Increment at each event day: d_t / sum_{risk set} exp(beta'x) under
/// Breslow ties, sum_k 1 / (S0 - k/d_t * D0) under Efron ties.
CumulativeHazard baseline_hazard(const Eigen::MatrixXd& x, const Eigen::VectorXi& time, const Eigen::VectorXi& event,
                                 const Eigen::VectorXd& beta, int max_day, Ties ties = Ties::efron);

/// Coefficients for one disposition, other exits censored.
CoxFit fit_coefficients(const Cohort& cohort, Disposition disposition, const CoxOptions& options = {});
CumulativeHazard fit_baseline(const Cohort& cohort, Disposition disposition, const Eigen::VectorXd& beta,
                              Ties ties = Ties::efron);

struct CompetingRiskModel {
  std::vector<Disposition> dispositions{Disposition::community, Disposition::hospital};
  std::vector<Eigen::VectorXd> coefficients;
  std::vector<CumulativeHazard> baseline;
  std::vector<std::string> covariate_names;
  int max_support_day = kShortStayMaxDays;

  std::size_t causes() const { return dispositions.size(); }
  /// exp(beta_m' x) for every cause.
  Eigen::VectorXd risk_scores(const Eigen::VectorXd& x) const;
  /// exp(-sum_m Gamma_m(t) exp(beta_m' x)).
  double survival(int day, const Eigen::VectorXd& x) const;
  void validate() const;
};

struct CompetingRiskFit {
  CompetingRiskModel model;
  std::vector<CoxFit> fits;
};

/// Fits each disposition independently; the likelihood factorises so the
/// joint fit is the collection of per-disposition fits.
CompetingRiskFit fit_competing_risk_model(const Cohort& cohort,
                                          const std::vector<Disposition>& dispositions = {Disposition::community,
                                                                                           Disposition::hospital},
                                          const CoxOptions& options = {});

/// LOS model that ignores competing dispositions: one hazard fitted to the
/// community discharges alone, with hospital-discharged and censored stays
/// discarded. Used as the misspecified comparator.
CompetingRiskFit fit_single_disposition_variant(const Cohort& cohort, const CoxOptions& options = {});

struct LosDraw {
  int los_days = 0;
  Disposition disposition = Disposition::community;
};

/// Inverts each cause-specific survival exp(-Gamma_m(t) e^{beta_m'x}) with
/// linear interpolation inside a day, returns the earliest cause. Draws that
/// pass max_support_day are truncated there; the disposition is then the
/// cause closest to firing. Always consumes one Exp(1) per cause.
LosDraw sample_short_stay(const CompetingRiskModel& model, const Eigen::VectorXd& x, Rng& rng);

/// Full log-likelihood of a fitted day-grid model, summed resident by resident.
double competing_risk_log_likelihood(const CompetingRiskModel& model, const SurvivalData& data);
/// Disposition-specific factor of the likelihood (all residents, one cause).
double disposition_log_likelihood(const CompetingRiskModel& model, const SurvivalData& data, int cause_index);

struct LongStayModel {
  double log_mean = 5.3;
  double log_sd = 0.6;
};

/// exp(N(log_mean, log_sd^2)) rounded up, floored at 101 days.
int sample_long_stay(const LongStayModel& model, Rng& rng);
/// Probability mass of one day under the rounded, floored law.
double long_stay_pmf(const LongStayModel& model, int day);
double long_stay_survival(const LongStayModel& model, int day);

struct LongStayFit {
  LongStayModel model;
  double log_likelihood = 0.0;
  ChiSquareResult goodness_of_fit;
  int events = 0;
  int censored = 0;
};

/// Censored maximum likelihood on long-stay records; the goodness of fit
/// compares observed discharges per LOS bin with the expected count from
/// each resident's exposure.
LongStayFit fit_long_stay(const Cohort& cohort);

class SurvivalCurve {
 public:
  SurvivalCurve() = default;
  SurvivalCurve(std::vector<double> times, std::vector<double> survival);
  /// Right-continuous step value, S(t) = 1 before the first event time.
  double at(double t) const;
  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& survival() const { return survival_; }

 private:
  std::vector<double> times_;
  std::vector<double> survival_;
};

struct TimeEvent {
  double time;
  bool event;
};

/// Product-limit estimator; censorings tied with events are applied after
/// the events.
SurvivalCurve kaplan_meier(const std::vector<TimeEvent>& samples);

struct KmOverlay {
  std::vector<int> grid;
  std::vector<double> predicted;
  std::vector<double> observed;
  double sup_distance = 0.0;
};

/// Both curves on days 0..max_day and their sup distance (exact, since both
/// curves only step at integers).
KmOverlay km_overlay_report(const std::vector<TimeEvent>& predicted, const std::vector<TimeEvent>& observed,
                            int max_day = kShortStayMaxDays);

/// Draws `per_resident` LOS values for every short-stay resident of the
/// cohort and compares their KM curve with the cohort's own.
KmOverlay km_overlay_for_model(const CompetingRiskModel& model, const Cohort& cohort, int per_resident,
                               std::uint64_t seed);

}  // namespace nhplan
