#include "nhplan/random.hpp"

#include <cmath>

namespace nhplan {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng make_stream(std::uint64_t seed, std::uint64_t index, std::uint64_t substream) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
  const std::uint64_t c = splitmix64(b ^ splitmix64(substream + 0x85157AF5ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

double standard_exponential(Rng& rng) {
  // 1 - u lies in (0, 1]
  const double u = 1.0 - uniform01(rng);
  return -std::log(u);
}

long negative_binomial(Rng& rng, double r, double p) {
  std::gamma_distribution<double> gamma(r, (1.0 - p) / p);
  const double lambda = gamma(rng);
  if (lambda <= 0.0) return 0;
  return static_cast<long>(std::poisson_distribution<long>(lambda)(rng));
}

}  // namespace nhplan
