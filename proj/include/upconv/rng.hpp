#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace upconv {

// Quantile function of the standard normal distribution.
// Rational approximation refined by one Halley step; accurate to ~1e-15.
double inverse_normal_cdf(double p);

// Stable seed derivation: FNV-1a over (master, purpose, index) with a
// splitmix64 finalizer. The mapping is part of the reproducibility contract;
// changing it changes every simulated data set.
std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                          std::uint64_t index);

// Deterministic random stream. All variates are derived from the raw
// mt19937_64 output with fixed arithmetic, so sequences are identical across
// platforms and standard libraries. Not thread-safe: use one stream per
// thread.
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1), never returns an endpoint.
    double uniform_open() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    // Exponential variate with the given mean (inverse CDF).
    double exponential(double mean);

    // Standard normal variate (inverse CDF).
    double normal() { return inverse_normal_cdf(uniform_open()); }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    // Number of failures before the first success of a Bernoulli(p) sequence.
    // Returns a saturating large value when p <= 0.
    std::uint64_t geometric(double p);

  private:
    std::mt19937_64 gen_;
};

}  // namespace upconv
