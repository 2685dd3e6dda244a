#include "robustval/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace robustval {

RankVector ranks_descending(const std::vector<double>& scores) {
  const int n = static_cast<int>(scores.size());
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  RankVector rv;
  rv.ranks.assign(scores.size(), 0.0);
  int pos = 0;
  while (pos < n) {
    int end = pos;
    while (end + 1 < n &&
           scores[static_cast<std::size_t>(order[static_cast<std::size_t>(end + 1)])] ==
               scores[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])])
      ++end;
    const double mid = 0.5 * static_cast<double>((pos + 1) + (end + 1));
    for (int i = pos; i <= end; ++i)
      rv.ranks[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = mid;
    pos = end + 1;
  }
  return rv;
}

bool is_valid_ranking(const RankVector& rv) {
  std::vector<double> sorted = rv.ranks;
  std::sort(sorted.begin(), sorted.end());
  const int n = static_cast<int>(sorted.size());
  int pos = 0;
  while (pos < n) {
    int end = pos;
    while (end + 1 < n && sorted[static_cast<std::size_t>(end + 1)] ==
                              sorted[static_cast<std::size_t>(pos)])
      ++end;
    const double expected = 0.5 * static_cast<double>((pos + 1) + (end + 1));
    if (std::abs(sorted[static_cast<std::size_t>(pos)] - expected) > 1e-9) return false;
    pos = end + 1;
  }
  return true;
}

double squared_loss(double y, double yhat) {
  const double d = y - yhat;
  return d * d;
}

double deviance_loss(int y, double p_hat) {
  const double p = std::clamp(p_hat, 1e-12, 1.0 - 1e-12);
  if (y != 0 && y != 1) throw std::invalid_argument("deviance_loss: y must be 0 or 1");
  return -2.0 * (y == 1 ? std::log(p) : std::log(1.0 - p));
}

double aggregate_mean(const LossVector& l) {
  if (l.values.empty()) throw std::invalid_argument("aggregate_mean: empty loss vector");
  double sum = 0.0;
  for (double v : l.values) sum += v;
  return sum / static_cast<double>(l.values.size());
}

double aggregate_trimmed(const LossVector& l, double alpha) {
  if (l.values.empty())
    throw std::invalid_argument("aggregate_trimmed: empty loss vector");
  if (!(alpha >= 0.0 && alpha <= 0.5))
    throw std::invalid_argument("aggregate_trimmed: alpha must lie in [0, 0.5]");
  const int m = static_cast<int>(l.values.size());
  const int dropped = static_cast<int>(std::floor(static_cast<double>(m) * alpha));
  const int kept = static_cast<int>(
      std::ceil((1.0 - alpha) * static_cast<double>(m)));  // always m - dropped
  std::vector<int> order(l.values.size());
  std::iota(order.begin(), order.end(), 0);
  // Ascending stable sort: among ties the higher index lands later and is
  // the one trimmed away.
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return l.values[static_cast<std::size_t>(a)] < l.values[static_cast<std::size_t>(b)];
  });
  double sum = 0.0;
  for (int i = 0; i < m - dropped; ++i)
    sum += l.values[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
  return sum / static_cast<double>(kept);
}

double aggregate_transformed(const LossVector& l, LossTransform transform) {
  if (l.values.empty())
    throw std::invalid_argument("aggregate_transformed: empty loss vector");
  switch (transform) {
    case LossTransform::arctan: {
      double sum = 0.0;
      for (double v : l.values) sum += std::atan(v);
      return sum / static_cast<double>(l.values.size());
    }
  }
  throw std::invalid_argument("aggregate_transformed: unknown transform");
}

OracleAggregate aggregate_oracle(const LossVector& l) {
  if (!l.source_flags.has_value())
    throw std::invalid_argument("aggregate_oracle: source flags required");
  if (l.source_flags->size() != l.values.size())
    throw std::invalid_argument("aggregate_oracle: flag/value length mismatch");
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < l.values.size(); ++i) {
    if (!(*l.source_flags)[i]) {
      sum += l.values[i];
      ++count;
    }
  }
  if (count == 0)
    throw std::invalid_argument("aggregate_oracle: every instance is flagged");
  return {sum / static_cast<double>(count), count};
}

double aggregate_fold_trimmed_cv(const std::vector<LossVector>& fold_losses,
                                 double alpha) {
  if (fold_losses.empty())
    throw std::invalid_argument("aggregate_fold_trimmed_cv: no folds");
  double sum = 0.0;
  for (const auto& fold : fold_losses) sum += aggregate_trimmed(fold, alpha);
  return sum / static_cast<double>(fold_losses.size());
}

int pairwise_misranking_loss(double y_i, double y_j, double yhat_i, double yhat_j) {
  return ((y_i - y_j) * (yhat_i - yhat_j) < 0.0) ? 1 : 0;
}

std::uint64_t binomial_coefficient(int n, int k) {
  if (n < 0 || k < 0 || k > n)
    throw std::invalid_argument("binomial_coefficient: need 0 <= k <= n");
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (int i = 1; i <= k; ++i) {
    const std::uint64_t num = static_cast<std::uint64_t>(n - k + i);
    if (result > std::numeric_limits<std::uint64_t>::max() / num)
      throw std::invalid_argument("binomial_coefficient: overflow");
    result = result * num / static_cast<std::uint64_t>(i);
  }
  return result;
}

double u_statistic(const KAryLoss& loss, std::span<const double> y,
                   std::span<const double> yhat, int k, RngStream* mc_rng,
                   std::int64_t mc_samples) {
  const int m = static_cast<int>(y.size());
  if (yhat.size() != y.size())
    throw std::invalid_argument("u_statistic: y/yhat length mismatch");
  if (k <= 0 || k > m) throw std::invalid_argument("u_statistic: need 1 <= k <= m");

  std::vector<double> ybuf(static_cast<std::size_t>(k)),
      pbuf(static_cast<std::size_t>(k));
  const auto eval = [&](const std::vector<int>& idx) {
    for (int i = 0; i < k; ++i) {
      ybuf[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
      pbuf[static_cast<std::size_t>(i)] = yhat[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    }
    return loss(ybuf, pbuf);
  };

  std::uint64_t total = 0;
  bool exhaustive = true;
  try {
    total = binomial_coefficient(m, k);
    exhaustive = total <= kUStatExhaustiveCap;
  } catch (const std::invalid_argument&) {
    exhaustive = false;  // overflow: certainly past the cap
  }

  if (exhaustive) {
    std::vector<int> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    double sum = 0.0;
    while (true) {
      sum += eval(idx);
      int pos = k - 1;
      while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == m - k + pos) --pos;
      if (pos < 0) break;
      ++idx[static_cast<std::size_t>(pos)];
      for (int j = pos + 1; j < k; ++j)
        idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
    return sum / static_cast<double>(total);
  }

  RngStream fallback(0x05ca1ab1eULL);
  RngStream& rng = mc_rng != nullptr ? *mc_rng : fallback;
  double sum = 0.0;
  for (std::int64_t s = 0; s < mc_samples; ++s) sum += eval(rng.subset(m, k));
  return sum / static_cast<double>(mc_samples);
}

double hard_ranking_error(const RankVector& truth, const RankVector& predicted) {
  if (truth.ranks.size() != predicted.ranks.size())
    throw std::invalid_argument("hard_ranking_error: size mismatch");
  const int n = static_cast<int>(truth.ranks.size());
  double penalty = 0.0;
  int ordered_pairs = 0;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const double dt = truth.ranks[static_cast<std::size_t>(a)] -
                        truth.ranks[static_cast<std::size_t>(b)];
      if (dt == 0.0) continue;
      ++ordered_pairs;
      const double dp = predicted.ranks[static_cast<std::size_t>(a)] -
                        predicted.ranks[static_cast<std::size_t>(b)];
      if (dp == 0.0)
        penalty += 0.5;
      else if (dt * dp < 0.0)
        penalty += 1.0;
    }
  }
  if (ordered_pairs == 0) return 0.0;
  return penalty / static_cast<double>(ordered_pairs);
}

double weak_ranking_error(const std::vector<int>& true_outliers,
                          const RankVector& predicted, int M) {
  const int K = static_cast<int>(predicted.ranks.size());
  if (static_cast<int>(true_outliers.size()) != M)
    throw std::invalid_argument("weak_ranking_error: |true_outliers| must equal M");
  if (M < 0 || M > K)
    throw std::invalid_argument("weak_ranking_error: need 0 <= M <= K");
  int missed = 0;
  for (int k : true_outliers) {
    if (k < 0 || k >= K)
      throw std::invalid_argument("weak_ranking_error: outlier index out of range");
    if (predicted.ranks[static_cast<std::size_t>(k)] > static_cast<double>(M)) ++missed;
  }
  return 2.0 / static_cast<double>(K) * static_cast<double>(missed);
}

}  // namespace robustval
