#pragma once

#include <cstdint>

namespace owgp {

// Deterministic PRNG (xoshiro256** with splitmix64 seeding) plus a
// Box-Muller normal sampler. Self-contained so that trace files are
// byte-identical regardless of standard-library distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  // Standard normal.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  bool bernoulli(double p) { return uniform() < p; }
  // Index in [0, n) proportional to weights[i]; weights need not be normalized.
  int categorical(const double* weights, int n);

 private:
  std::uint64_t state_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace owgp
