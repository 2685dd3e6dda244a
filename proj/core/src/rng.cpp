#include "robustval/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace robustval {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a_bytes(std::uint64_t h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

std::uint64_t fnv1a_u64(std::uint64_t h, std::uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  return fnv1a_bytes(h, bytes, 8);
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_lineage(std::uint64_t master_seed, std::string_view scenario_id,
                           int repetition, std::string_view purpose) {
  // Field separators keep ("ab","c") and ("a","bc") lineages distinct.
  std::uint64_t h = kFnvOffset;
  h = fnv1a_u64(h, master_seed);
  h = fnv1a_bytes(h, scenario_id.data(), scenario_id.size());
  h = fnv1a_bytes(h, "\x1f", 1);
  h = fnv1a_u64(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(repetition)));
  h = fnv1a_bytes(h, purpose.data(), purpose.size());
  h = fnv1a_bytes(h, "\x1f", 1);
  return mix64(mix64(h));
}

RngStream::RngStream(std::uint64_t seed) : engine_(mix64(seed)) {}

RngStream RngStream::derive(std::uint64_t master_seed, std::string_view scenario_id,
                            int repetition, std::string_view purpose) {
  return RngStream(hash_lineage(master_seed, scenario_id, repetition, purpose));
}

std::uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal(double mean, double sd) {
  if (sd < 0.0) throw std::invalid_argument("normal: sd must be >= 0");
  if (has_spare_) {
    has_spare_ = false;
    return mean + sd * spare_normal_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_normal_ = radius * std::sin(angle);
  has_spare_ = true;
  return mean + sd * radius * std::cos(angle);
}

double RngStream::cauchy(double location, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("cauchy: scale must be > 0");
  const double u = uniform();
  return location + scale * std::tan(M_PI * (u - 0.5));
}

int RngStream::binomial(int n, double prob) {
  if (n < 0) throw std::invalid_argument("binomial: n must be >= 0");
  if (!(prob >= 0.0 && prob <= 1.0))
    throw std::invalid_argument("binomial: prob must lie in [0, 1]");
  if (prob >= 1.0) return n;
  int count = 0;
  for (int i = 0; i < n; ++i)
    if (uniform() < prob) ++count;
  return count;
}

int RngStream::uniform_index(int bound) {
  if (bound <= 0) throw std::invalid_argument("uniform_index: bound must be > 0");
  const int idx = static_cast<int>(uniform() * static_cast<double>(bound));
  return std::min(idx, bound - 1);
}

std::vector<int> RngStream::subset(int n, int k) {
  if (k < 0 || k > n) throw std::invalid_argument("subset: need 0 <= k <= n");
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) {
    const int j = i + uniform_index(n - i);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<int> RngStream::permutation(int n) {
  if (n < 0) throw std::invalid_argument("permutation: n must be >= 0");
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < n - 1; ++i) {
    const int j = i + uniform_index(n - i);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  return idx;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double inverse_normal_cdf(double u) {
  if (!(u > 0.0 && u < 1.0))
    throw std::invalid_argument("inverse_normal_cdf: u must lie in (0, 1)");

  // Acklam's coefficients.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};

  const double plow = 0.02425;
  double x;
  if (u < plow) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= 1.0 - plow) {
    const double q = u - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // One Halley step against the exact CDF.
  const double e = normal_cdf(x) - u;
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  const double w = e / pdf;
  return x - w / (1.0 + 0.5 * x * w);
}

}  // namespace robustval
