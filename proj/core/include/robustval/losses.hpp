#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "robustval/rng.hpp"

namespace robustval {

// Per-instance losses on an evaluation set. +infinity entries are legal and
// represent the breakdown regime, not an error; they dominate sorting and
// poison plain means.
struct LossVector {
  std::vector<double> values;
  std::optional<std::vector<std::uint8_t>> source_flags;  // ground-truth contamination
};

// Ranking with mid-rank ties; rank 1 = most outlying.
struct RankVector {
  std::vector<double> ranks;
};

// Ranks scores descending (highest score -> rank 1); tied scores share their
// mid-rank, i.e. the average of the positions they jointly occupy.
RankVector ranks_descending(const std::vector<double>& scores);

// A RankVector is valid iff its sorted ranks form the canonical mid-rank
// sequence for some tie pattern.
bool is_valid_ranking(const RankVector& rv);

double squared_loss(double y, double yhat);

// -2 [y log p + (1-y) log(1-p)]; p_hat is clamped to [1e-12, 1-1e-12].
double deviance_loss(int y, double p_hat);

double aggregate_mean(const LossVector& l);

// Drops the floor(m*alpha) largest values (ties resolved by index: higher
// indices drop first) and divides the remaining sum by ceil((1-alpha)*m).
double aggregate_trimmed(const LossVector& l, double alpha);

enum class LossTransform { arctan };

double aggregate_transformed(const LossVector& l, LossTransform transform);

struct OracleAggregate {
  double value;
  int effective_count;  // clean entries that entered the mean
};

// Mean over entries whose ground-truth flag is false. Requires flags;
// rejects an all-flagged vector (the clean set would be empty).
OracleAggregate aggregate_oracle(const LossVector& l);

double aggregate_fold_trimmed_cv(const std::vector<LossVector>& fold_losses, double alpha);

// 1 iff the predicted ordering of the pair contradicts the true ordering.
int pairwise_misranking_loss(double y_i, double y_j, double yhat_i, double yhat_j);

using KAryLoss =
    std::function<double(std::span<const double> y, std::span<const double> yhat)>;

inline constexpr std::uint64_t kUStatExhaustiveCap = 1000000;

// C(n, k); throws std::invalid_argument on domain errors or uint64 overflow.
std::uint64_t binomial_coefficient(int n, int k);

// Average of a k-ary loss over size-k index subsets in increasing order.
// Exhaustive while C(m, k) <= kUStatExhaustiveCap, otherwise Monte-Carlo with
// mc_samples draws from mc_rng (a fixed internal stream when omitted).
double u_statistic(const KAryLoss& loss, std::span<const double> y,
                   std::span<const double> yhat, int k, RngStream* mc_rng = nullptr,
                   std::int64_t mc_samples = 200000);

// Fraction of truth-strictly-ordered pairs the prediction gets wrong; a
// predicted tie counts 0.5, a reversal 1. All-tied truth has no ordered
// pair and scores 0.
double hard_ranking_error(const RankVector& truth, const RankVector& predicted);

// (2/K) * #{true outliers whose predicted rank exceeds M}. true_outliers must
// hold exactly M indices into predicted.
double weak_ranking_error(const std::vector<int>& true_outliers,
                          const RankVector& predicted, int M);

}  // namespace robustval
