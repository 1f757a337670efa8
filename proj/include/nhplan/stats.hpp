#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace nhplan {

/// Raised by numerical routines that cannot meet their contract (no
/// convergence, degenerate input). Carries a human-readable reason.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
double chi_square_sf(double statistic, double df);

/// Upper tail of the Kolmogorov distribution, P(K > lambda).
double kolmogorov_sf(double lambda);

double normal_cdf(double z);

/// Linear-interpolation sample quantile (type 7), q in [0, 1]. Sorts a copy.
double quantile(std::vector<double> values, double q);

struct ChiSquareResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int bins = 0;
  int df = 0;
};

/// Pearson statistic over bins, after pooling adjacent bins left to right so
/// every pooled expected count is at least `min_expected`. The final partial
/// group is folded into its left neighbour.
ChiSquareResult chi_square_pooled(std::span<const double> observed, std::span<const double> expected,
                                  int fitted_parameters, double min_expected = 5.0);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// (Stephens' small-sample correction of the effective size).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

struct Quadrature {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
};

/// Adaptive Gauss-Kronrod (7/15) quadrature on [lo, hi]; throws
/// NumericalError when the absolute tolerance is not reached.
Quadrature integrate(const std::function<double(double)>& f, double lo, double hi, double abs_tol = 1e-10,
                     int max_intervals = 2000);

}  // namespace nhplan
