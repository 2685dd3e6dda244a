#pragma once

#include <Eigen/Dense>
#include <vector>

#include "robustval/estimators.hpp"
#include "robustval/losses.hpp"

namespace robustval {

struct TrimReport {
  std::vector<int> kept;      // sorted
  std::vector<int> dropped;   // sorted; exactly ceil(alpha * count) indices
  std::vector<double> scores; // outlyingness score per index
  FitResult base_model;       // model the scores came from
};

// Leave-one-out scores by explicit refitting: for each i, fit on everything
// except i and compute the pointwise loss of instance i under that fit.
// Fitter failures propagate with the fold index attached.
std::vector<double> loo_scores_by_refit(const Eigen::MatrixXd& X,
                                        const Eigen::VectorXd& y, const Fitter& fitter,
                                        RngStream& rng);

// Scores every training instance by its leave-one-out loss (the fitter's fast
// path when it has one, explicit refits otherwise) and drops the
// ceil(alpha*n) highest scorers. Ties resolve by index: higher indices drop
// first. base_model is a fit on the full data.
TrimReport loo_trim_training(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             double alpha, const Fitter& fitter, RngStream& rng);

// Scores test instances by their pointwise loss under `model` and drops the
// top ceil(alpha*m); downstream aggregation uses the kept instances only.
TrimReport trim_test_instances(const Eigen::MatrixXd& test_X,
                               const Eigen::VectorXd& test_y, const FitResult& model,
                               Task task, double alpha);

enum class BatchScoreMethod {
  train_loss,
  train_loss_trimmed,
  test_loss,
  test_loss_trimmed,
  coef_deviation,
};

std::string to_string(BatchScoreMethod m);

struct BatchRankRequest {
  BatchScoreMethod method = BatchScoreMethod::train_loss;
  bool use_robust_fitter = false;  // loss-based methods only
  double trim_alpha = 0.5;         // *_trimmed variants
};

struct BatchRanking {
  RankVector ranks;                 // 1 = most outlying (highest score)
  std::vector<double> scores;
  std::vector<std::uint8_t> failed; // batches whose fit failed get the worst rank
};

// Fits the requested model(s) on each training batch and ranks the batches by
// the requested score: mean (optionally trimmed) in-sample loss, mean
// (optionally trimmed) loss on the supplied test set, or the Euclidean
// deviation between the classical and robust coefficient vectors.
BatchRanking rank_batches(const std::vector<std::vector<int>>& batches,
                          const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const BatchRankRequest& request, const Fitter& classical,
                          const Fitter& robust, const Eigen::MatrixXd* test_X,
                          const Eigen::VectorXd* test_y, RngStream& rng);

// Ranks batches by their contaminated fraction, descending, mid-rank ties.
RankVector true_batch_ranking(const std::vector<std::vector<int>>& batches,
                              const std::vector<std::uint8_t>& contaminated);

// randomized: `count` independent uniform subsets of size subset_size.
// kfold: a random partition into `count` near-equal folds (sizes differ by at
// most 1); training batches are the fold complements, see complement_batches.
std::vector<std::vector<int>> make_batches(int n, const CvScheme& cv, RngStream& rng);

std::vector<std::vector<int>> complement_batches(
    const std::vector<std::vector<int>>& folds, int n);

}  // namespace robustval
