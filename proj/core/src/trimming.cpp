#include "robustval/trimming.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "robustval/errors.hpp"

namespace robustval {

namespace {

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& X, const std::vector<int>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = X.row(idx[k]);
  return out;
}

Eigen::VectorXd elems_of(const Eigen::VectorXd& y, const std::vector<int>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Eigen::Index>(k)] = y[idx[k]];
  return out;
}

// Splits indices into (kept, dropped): the `drop` highest scores leave, ties
// resolved so that higher indices drop first.
void split_by_scores(const std::vector<double>& scores, int drop,
                     std::vector<int>& kept, std::vector<int>& dropped) {
  const int n = static_cast<int>(scores.size());
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] < scores[static_cast<std::size_t>(b)];
  });
  kept.assign(order.begin(), order.end() - drop);
  dropped.assign(order.end() - drop, order.end());
  std::sort(kept.begin(), kept.end());
  std::sort(dropped.begin(), dropped.end());
}

int ceil_count(double alpha, int n) {
  return static_cast<int>(std::ceil(alpha * static_cast<double>(n)));
}

}  // namespace

std::vector<double> loo_scores_by_refit(const Eigen::MatrixXd& X,
                                        const Eigen::VectorXd& y, const Fitter& fitter,
                                        RngStream& rng) {
  const int n = static_cast<int>(X.rows());
  std::vector<double> scores(static_cast<std::size_t>(n));
  std::vector<int> keep;
  keep.reserve(static_cast<std::size_t>(n - 1));
  for (int i = 0; i < n; ++i) {
    keep.clear();
    for (int j = 0; j < n; ++j)
      if (j != i) keep.push_back(j);
    try {
      const FitResult fit = fitter.fit(rows_of(X, keep), elems_of(y, keep), rng);
      scores[static_cast<std::size_t>(i)] =
          pointwise_loss(fitter.task, fit, X.row(i), y[i]);
    } catch (const std::exception& e) {
      throw NumericalError("leave-one-out fold " + std::to_string(i) + " (" +
                           fitter.name + "): " + e.what());
    }
  }
  return scores;
}

TrimReport loo_trim_training(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             double alpha, const Fitter& fitter, RngStream& rng) {
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw std::invalid_argument("loo_trim_training: need 0 <= alpha < 1");
  const int n = static_cast<int>(X.rows());
  if (n < 2) throw std::invalid_argument("loo_trim_training: need at least 2 instances");

  TrimReport report;
  report.scores = fitter.loo_scores ? fitter.loo_scores(X, y, rng)
                                    : loo_scores_by_refit(X, y, fitter, rng);
  report.base_model = fitter.fit(X, y, rng);
  split_by_scores(report.scores, ceil_count(alpha, n), report.kept, report.dropped);
  return report;
}

TrimReport trim_test_instances(const Eigen::MatrixXd& test_X,
                               const Eigen::VectorXd& test_y, const FitResult& model,
                               Task task, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw std::invalid_argument("trim_test_instances: need 0 <= alpha < 1");
  const int m = static_cast<int>(test_X.rows());
  TrimReport report;
  report.base_model = model;
  report.scores = pointwise_losses(task, model, test_X, test_y);
  split_by_scores(report.scores, ceil_count(alpha, m), report.kept, report.dropped);
  return report;
}

std::string to_string(BatchScoreMethod m) {
  switch (m) {
    case BatchScoreMethod::train_loss: return "train_loss";
    case BatchScoreMethod::train_loss_trimmed: return "train_loss_trimmed";
    case BatchScoreMethod::test_loss: return "test_loss";
    case BatchScoreMethod::test_loss_trimmed: return "test_loss_trimmed";
    case BatchScoreMethod::coef_deviation: return "coef_deviation";
  }
  return "?";
}

BatchRanking rank_batches(const std::vector<std::vector<int>>& batches,
                          const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const BatchRankRequest& request, const Fitter& classical,
                          const Fitter& robust, const Eigen::MatrixXd* test_X,
                          const Eigen::VectorXd* test_y, RngStream& rng) {
  const bool needs_test = request.method == BatchScoreMethod::test_loss ||
                          request.method == BatchScoreMethod::test_loss_trimmed;
  if (needs_test && (test_X == nullptr || test_y == nullptr))
    throw std::invalid_argument("rank_batches: test-loss method needs a test set");

  BatchRanking result;
  result.scores.resize(batches.size());
  result.failed.assign(batches.size(), 0);

  for (std::size_t b = 0; b < batches.size(); ++b) {
    const Eigen::MatrixXd Xb = rows_of(X, batches[b]);
    const Eigen::VectorXd yb = elems_of(y, batches[b]);
    double score = 0.0;
    try {
      if (request.method == BatchScoreMethod::coef_deviation) {
        const FitResult fc = classical.fit(Xb, yb, rng);
        const FitResult fr = robust.fit(Xb, yb, rng);
        const double di = fc.intercept - fr.intercept;
        score = std::sqrt((fc.beta - fr.beta).squaredNorm() + di * di);
      } else {
        const Fitter& fitter = request.use_robust_fitter ? robust : classical;
        const FitResult fit = fitter.fit(Xb, yb, rng);
        LossVector losses;
        losses.values = needs_test
                            ? pointwise_losses(fitter.task, fit, *test_X, *test_y)
                            : pointwise_losses(fitter.task, fit, Xb, yb);
        const bool trimmed = request.method == BatchScoreMethod::train_loss_trimmed ||
                             request.method == BatchScoreMethod::test_loss_trimmed;
        score = trimmed ? aggregate_trimmed(losses, request.trim_alpha)
                        : aggregate_mean(losses);
      }
    } catch (const std::exception&) {
      result.failed[b] = 1;
      score = -std::numeric_limits<double>::infinity();  // worst rank
    }
    result.scores[b] = score;
  }
  result.ranks = ranks_descending(result.scores);
  return result;
}

RankVector true_batch_ranking(const std::vector<std::vector<int>>& batches,
                              const std::vector<std::uint8_t>& contaminated) {
  std::vector<double> fractions(batches.size());
  for (std::size_t b = 0; b < batches.size(); ++b) {
    if (batches[b].empty())
      throw std::invalid_argument("true_batch_ranking: empty batch");
    int count = 0;
    for (int i : batches[b]) {
      if (i < 0 || i >= static_cast<int>(contaminated.size()))
        throw std::invalid_argument("true_batch_ranking: index out of range");
      count += contaminated[static_cast<std::size_t>(i)] ? 1 : 0;
    }
    fractions[b] = static_cast<double>(count) / static_cast<double>(batches[b].size());
  }
  return ranks_descending(fractions);
}

std::vector<std::vector<int>> make_batches(int n, const CvScheme& cv, RngStream& rng) {
  if (n <= 0) throw std::invalid_argument("make_batches: n must be > 0");
  if (cv.count <= 0) throw std::invalid_argument("make_batches: count must be > 0");
  std::vector<std::vector<int>> batches;
  if (cv.kind == CvScheme::Kind::randomized) {
    if (cv.subset_size <= 0 || cv.subset_size > n)
      throw std::invalid_argument("make_batches: need 0 < subset_size <= n");
    batches.reserve(static_cast<std::size_t>(cv.count));
    for (int b = 0; b < cv.count; ++b) batches.push_back(rng.subset(n, cv.subset_size));
  } else {
    if (cv.count > n) throw std::invalid_argument("make_batches: K must be <= n");
    const std::vector<int> perm = rng.permutation(n);
    batches.assign(static_cast<std::size_t>(cv.count), {});
    for (int i = 0; i < n; ++i)
      batches[static_cast<std::size_t>(i % cv.count)].push_back(perm[static_cast<std::size_t>(i)]);
    for (auto& fold : batches) std::sort(fold.begin(), fold.end());
  }
  return batches;
}

std::vector<std::vector<int>> complement_batches(
    const std::vector<std::vector<int>>& folds, int n) {
  std::vector<std::vector<int>> out;
  out.reserve(folds.size());
  std::vector<std::uint8_t> in_fold(static_cast<std::size_t>(n));
  for (const auto& fold : folds) {
    std::fill(in_fold.begin(), in_fold.end(), 0);
    for (int i : fold) {
      if (i < 0 || i >= n)
        throw std::invalid_argument("complement_batches: index out of range");
      in_fold[static_cast<std::size_t>(i)] = 1;
    }
    std::vector<int> comp;
    comp.reserve(static_cast<std::size_t>(n) - fold.size());
    for (int i = 0; i < n; ++i)
      if (!in_fold[static_cast<std::size_t>(i)]) comp.push_back(i);
    out.push_back(std::move(comp));
  }
  return out;
}

}  // namespace robustval
