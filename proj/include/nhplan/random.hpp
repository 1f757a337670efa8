#pragma once

#include <cstdint>
#include <random>

namespace nhplan {

using Rng = std::mt19937_64;

/// Deterministic child stream for (seed, index, substream). Replication j of a
/// run uses make_stream(seed, j, k) with a distinct k per purpose, so that
/// drawing more or fewer numbers for one purpose never shifts another.
Rng make_stream(std::uint64_t seed, std::uint64_t index = 0, std::uint64_t substream = 0);

/// Fixed substream ids.
namespace streams {
inline constexpr std::uint64_t kArrivals = 0;  // counts, covariates, LOS
inline constexpr std::uint64_t kDemand = 1;    // daily staff-minute draws
inline constexpr std::uint64_t kSweep = 2;     // capacity minimality sweep
inline constexpr std::uint64_t kPlanning = 3;  // demand ensembles behind staffing plans
}  // namespace streams

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

/// Exp(1) by inversion; never returns +inf.
double standard_exponential(Rng& rng);

/// Negative binomial with real size r (Gamma-Poisson mixture), mean r(1-p)/p.
long negative_binomial(Rng& rng, double r, double p);

}  // namespace nhplan
