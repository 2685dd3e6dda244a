#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace robustval {

// splitmix64 finalizer; full-period 64-bit mixer.
std::uint64_t mix64(std::uint64_t x);

// Stable hash of a stream lineage tuple. Deliberately independent of
// std::hash so a seed file means the same thing on every build.
std::uint64_t hash_lineage(std::uint64_t master_seed, std::string_view scenario_id,
                           int repetition, std::string_view purpose);

// Deterministic, splittable random stream.
//
// Streams are values: copying one forks the state, and two streams derived
// from the same (master_seed, scenario_id, repetition, purpose) lineage
// produce identical draw sequences. Distinct purposes yield independent
// streams, so parallel repetitions never contend for draws and execution
// order cannot change results. One stream must not be shared across threads.
class RngStream {
 public:
  RngStream() : RngStream(0xdeadbeefcafef00dULL) {}
  explicit RngStream(std::uint64_t seed);

  static RngStream derive(std::uint64_t master_seed, std::string_view scenario_id,
                          int repetition, std::string_view purpose);

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double uniform();

  // Box-Muller with a cached spare; rejection-free. sd must be >= 0.
  double normal(double mean, double sd);

  // Inverse-CDF tan transform. scale must be > 0.
  double cauchy(double location, double scale);

  // Sum of n Bernoulli(prob) trials. prob must lie in [0, 1], n >= 0.
  int binomial(int n, double prob);

  // k distinct indices from {0..n-1}, uniform without replacement, sorted.
  std::vector<int> subset(int n, int k);

  // Uniform shuffle of {0..n-1}.
  std::vector<int> permutation(int n);

  // Uniform on {0..bound-1}.
  int uniform_index(int bound);

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

inline RngStream derive_stream(std::uint64_t master_seed, std::string_view scenario_id,
                               int repetition, std::string_view purpose) {
  return RngStream::derive(master_seed, scenario_id, repetition, purpose);
}

// Standard normal quantile function (Acklam's rational approximation with a
// Halley refinement step; |error| < 1e-15 on (0, 1)).
double inverse_normal_cdf(double u);

// Standard normal CDF.
double normal_cdf(double x);

}  // namespace robustval
