#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "oracles.hpp"
#include "robustval/datagen.hpp"
#include "robustval/errors.hpp"
#include "robustval/losses.hpp"
#include "robustval/trimming.hpp"

using namespace robustval;

namespace {

Eigen::MatrixXd random_matrix(int n, int p, RngStream& rng, double mean = 0.0) {
  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = rng.normal(mean, 1.0);
  return X;
}

void check_partition(const TrimReport& report, int n) {
  std::set<int> all(report.kept.begin(), report.kept.end());
  for (int i : report.dropped) {
    CHECK(all.count(i) == 0);
    all.insert(i);
  }
  CHECK(all.size() == static_cast<std::size_t>(n));
  double min_dropped = std::numeric_limits<double>::infinity();
  for (int i : report.dropped)
    min_dropped = std::min(min_dropped, report.scores[static_cast<std::size_t>(i)]);
  for (int i : report.kept)
    CHECK(report.scores[static_cast<std::size_t>(i)] <= min_dropped + 1e-12);
}

}  // namespace

TEST_CASE("LOO trimming with alpha = 0 drops nothing") {
  RngStream rng(1);
  const Eigen::MatrixXd X = random_matrix(20, 2, rng);
  Eigen::VectorXd y(20);
  for (int i = 0; i < 20; ++i) y[i] = X(i, 0) + rng.normal(0, 0.3);
  RngStream trim_rng(2);
  const TrimReport report = loo_trim_training(X, y, 0.0, ols_fitter(), trim_rng);
  CHECK(report.dropped.empty());
  CHECK(report.kept.size() == 20);
}

TEST_CASE("LOO trimming with a robust fitter isolates the planted outliers") {
  Eigen::MatrixXd X(10, 1);
  Eigen::VectorXd y(10);
  for (int i = 0; i < 10; ++i) {
    X(i, 0) = i + 1.0;
    y[i] = 2.0 * X(i, 0);
  }
  y[3] = 50.0;
  y[7] = -40.0;
  TrimOptions opts;
  opts.alpha = 0.4;
  opts.n_starts = 200;
  RngStream rng(3);
  const TrimReport report = loo_trim_training(X, y, 0.2, lts_fitter(opts), rng);
  CHECK(report.dropped == std::vector<int>{3, 7});
  check_partition(report, 10);

  // Brute-force confirmation that the exhaustive LTS subset excludes them.
  const oracles::SubsetOptimum oracle = oracles::lts_exhaustive(X, y, 6);
  for (int i : oracle.subset) {
    CHECK(i != 3);
    CHECK(i != 7);
  }
}

TEST_CASE("OLS leave-one-out fast path equals explicit refits") {
  RngStream rng(4);
  const Eigen::MatrixXd X = random_matrix(30, 3, rng, 1.0);
  Eigen::VectorXd y(30);
  for (int i = 0; i < 30; ++i) y[i] = X(i, 0) - X(i, 2) + rng.normal(0, 0.7);

  const Fitter fast = ols_fitter();
  Fitter slow = ols_fitter();
  slow.loo_scores = nullptr;  // force the generic refit loop

  RngStream r1(5), r2(6);
  const std::vector<double> fast_scores = fast.loo_scores(X, y, r1);
  const std::vector<double> slow_scores = loo_scores_by_refit(X, y, slow, r2);
  REQUIRE(fast_scores.size() == slow_scores.size());
  for (std::size_t i = 0; i < fast_scores.size(); ++i)
    CHECK(fast_scores[i] == doctest::Approx(slow_scores[i]).epsilon(1e-8));
}

TEST_CASE("LOO failures carry the fold index") {
  // Only the last row carries the second direction: leaving it out makes the
  // remaining design rank deficient, and that fold index is reported.
  Eigen::MatrixXd X(4, 2);
  X << 1, 0, 1, 0, 1, 0, 0, 1;
  Eigen::VectorXd y(4);
  y << 1, 1, 1, 2;
  Fitter ols = ols_fitter();
  ols.loo_scores = nullptr;
  RngStream rng(7);
  CHECK_THROWS_WITH_AS(loo_scores_by_refit(X, y, ols, rng),
                       doctest::Contains("fold 3"), NumericalError);
}

TEST_CASE("trim_test_instances") {
  RngStream rng(8);
  const int m = 100, p = 4;
  const Eigen::MatrixXd X = random_matrix(m, p, rng, 2.0);
  Eigen::VectorXd beta(p);
  for (int j = 0; j < p; ++j) beta[j] = rng.normal(1, 1);
  Eigen::VectorXd y = X * beta;
  for (int i = 0; i < m; ++i) y[i] += rng.normal(0, 1);
  std::vector<int> planted = {4, 17, 42, 63, 90};
  for (int i : planted) y[i] = 50.0;

  FitResult truth;
  truth.beta = beta;

  SUBCASE("alpha = 0 keeps the plain mean") {
    const TrimReport report = trim_test_instances(X, y, truth, Task::regression, 0.0);
    CHECK(report.dropped.empty());
    LossVector kept_losses;
    for (int i : report.kept) kept_losses.values.push_back(report.scores[static_cast<std::size_t>(i)]);
    CHECK(aggregate_mean(kept_losses) ==
          doctest::Approx(aggregate_mean({report.scores, {}})).epsilon(1e-15));
  }

  SUBCASE("the gross instances are exactly the ones dropped") {
    const TrimReport report = trim_test_instances(X, y, truth, Task::regression, 0.05);
    CHECK(report.dropped == planted);
    check_partition(report, m);
  }
}

TEST_CASE("all-equal losses drop the highest indices") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(8, 1);
  Eigen::VectorXd y = Eigen::VectorXd::Ones(8);  // every loss = 1 under beta = 0
  FitResult zero_model;
  zero_model.beta = Eigen::VectorXd::Zero(1);
  const TrimReport report = trim_test_instances(X, y, zero_model, Task::regression, 0.3);
  CHECK(report.dropped == std::vector<int>{5, 6, 7});  // ceil(0.3 * 8) = 3
}

TEST_CASE("rank_batches: identical batches tie, a poisoned batch ranks first") {
  RngStream rng(9);
  const int n = 60, p = 2;
  Eigen::MatrixXd X = random_matrix(n, p, rng);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = X(i, 0) + rng.normal(0, 0.2);

  const std::vector<int> batch_a = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  SUBCASE("identical batches are all tied") {
    const std::vector<std::vector<int>> batches = {batch_a, batch_a, batch_a};
    RngStream fit_rng(10);
    const BatchRanking ranking =
        rank_batches(batches, X, y, {BatchScoreMethod::train_loss, false, 0.5},
                     ols_fitter(), lts_fitter(), nullptr, nullptr, fit_rng);
    for (double rank : ranking.ranks.ranks) CHECK(rank == 2.0);  // mid-rank of 3 ties
  }

  SUBCASE("a batch with gross responses ranks most outlying") {
    Eigen::VectorXd y2 = y;
    std::vector<std::vector<int>> batches;
    for (int b = 0; b < 4; ++b) {
      std::vector<int> batch;
      for (int i = 0; i < 15; ++i) batch.push_back(15 * b + i);
      batches.push_back(batch);
    }
    for (int i : batches[2]) y2[i] = 50.0;
    RngStream fit_rng(11);
    const BatchRanking ranking =
        rank_batches(batches, X, y2, {BatchScoreMethod::train_loss, false, 0.5},
                     ols_fitter(), lts_fitter(), nullptr, nullptr, fit_rng);
    CHECK(ranking.ranks.ranks[2] == 1.0);
  }
}

TEST_CASE("coefficient deviation separates clean from contaminated batches") {
  RngStream rng(12);
  TrimOptions opts;
  opts.alpha = 0.5;
  opts.n_starts = 60;
  const Fitter classical = ols_fitter();
  const Fitter robust = lts_fitter(opts);
  double clean_mean = 0.0, contaminated_mean = 0.0;
  const int seeds = 50;
  for (int s = 0; s < seeds; ++s) {
    const int nb = 40, p = 2;
    Eigen::MatrixXd X = random_matrix(nb, p, rng, 1.0);
    Eigen::VectorXd y(nb);
    for (int i = 0; i < nb; ++i) y[i] = X(i, 0) + rng.normal(0, 0.3);
    Eigen::VectorXd y_dirty = y;
    for (int i = 0; i < nb / 2; ++i) y_dirty[i] = 50.0;

    std::vector<int> batch(nb);
    std::iota(batch.begin(), batch.end(), 0);
    RngStream r1(100 + s), r2(200 + s);
    const BatchRanking clean =
        rank_batches({batch}, X, y, {BatchScoreMethod::coef_deviation, false, 0.5},
                     classical, robust, nullptr, nullptr, r1);
    const BatchRanking dirty =
        rank_batches({batch}, X, y_dirty, {BatchScoreMethod::coef_deviation, false, 0.5},
                     classical, robust, nullptr, nullptr, r2);
    clean_mean += clean.scores[0];
    contaminated_mean += dirty.scores[0];
  }
  CHECK(clean_mean / seeds < contaminated_mean / seeds);
}

TEST_CASE("true_batch_ranking follows contamination fractions") {
  std::vector<std::uint8_t> flags(10, 0);
  flags[0] = flags[1] = flags[2] = 1;
  // batch fractions: {0,1}->1.0? construct explicit fractions 0.5, 0.1, 0.3
  std::vector<std::uint8_t> f(30, 0);
  for (int i = 0; i < 5; ++i) f[static_cast<std::size_t>(i)] = 1;       // batch a: 5/10
  f[10] = 1;                                                            // batch b: 1/10
  for (int i = 20; i < 23; ++i) f[static_cast<std::size_t>(i)] = 1;     // batch c: 3/10
  std::vector<std::vector<int>> batches(3);
  for (int i = 0; i < 10; ++i) {
    batches[0].push_back(i);
    batches[1].push_back(10 + i);
    batches[2].push_back(20 + i);
  }
  const RankVector ranks = true_batch_ranking(batches, f);
  CHECK(ranks.ranks == std::vector<double>{1.0, 3.0, 2.0});

  const RankVector tied = true_batch_ranking(batches, std::vector<std::uint8_t>(30, 0));
  CHECK(tied.ranks == std::vector<double>{2.0, 2.0, 2.0});

  std::vector<std::uint8_t> two(30, 0);
  for (int i = 0; i < 2; ++i) {
    two[static_cast<std::size_t>(i)] = 1;
    two[static_cast<std::size_t>(10 + i)] = 1;
  }
  const RankVector mid = true_batch_ranking(batches, two);
  CHECK(mid.ranks == std::vector<double>{1.5, 1.5, 3.0});
}

TEST_CASE("make_batches shapes") {
  RngStream rng(13);
  const auto folds = make_batches(250, {CvScheme::Kind::kfold, 5, 0}, rng);
  REQUIRE(folds.size() == 5);
  std::set<int> seen;
  for (const auto& fold : folds) {
    CHECK(fold.size() == 50);
    seen.insert(fold.begin(), fold.end());
  }
  CHECK(seen.size() == 250);
  const auto complements = complement_batches(folds, 250);
  for (const auto& batch : complements) CHECK(batch.size() == 200);

  const auto randomized = make_batches(250, {CvScheme::Kind::randomized, 10, 125}, rng);
  REQUIRE(randomized.size() == 10);
  for (const auto& batch : randomized) CHECK(batch.size() == 125);

  const auto loo = make_batches(7, {CvScheme::Kind::kfold, 7, 0}, rng);
  REQUIRE(loo.size() == 7);
  for (const auto& fold : loo) CHECK(fold.size() == 1);
}

TEST_CASE("strategy composition with alpha = 0 reproduces the untrimmed pipeline") {
  RngStream rng(14);
  const int n = 40, m = 30, p = 3;
  const Eigen::MatrixXd X = random_matrix(n, p, rng);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = X(i, 1) + rng.normal(0, 0.4);
  const Eigen::MatrixXd Xt = random_matrix(m, p, rng);
  Eigen::VectorXd yt(m);
  for (int i = 0; i < m; ++i) yt[i] = Xt(i, 1) + rng.normal(0, 0.4);

  RngStream r1(15);
  const TrimReport train_trim = loo_trim_training(X, y, 0.0, ols_fitter(), r1);
  CHECK(train_trim.kept.size() == static_cast<std::size_t>(n));
  const FitResult fit = fit_ols(X, y);  // nothing was dropped
  const TrimReport test_trim = trim_test_instances(Xt, yt, fit, Task::regression, 0.0);
  CHECK(test_trim.kept.size() == static_cast<std::size_t>(m));
  const LossVector all{pointwise_losses(Task::regression, fit, Xt, yt), {}};
  LossVector kept;
  for (int i : test_trim.kept) kept.values.push_back(test_trim.scores[static_cast<std::size_t>(i)]);
  CHECK(aggregate_mean(kept) == aggregate_mean(all));
}
