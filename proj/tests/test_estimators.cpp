#include <doctest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "robustval/datagen.hpp"
#include "robustval/errors.hpp"
#include "robustval/estimators.hpp"

using namespace robustval;

namespace {

Eigen::MatrixXd random_matrix(int n, int p, RngStream& rng, double mean = 0.0) {
  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = rng.normal(mean, 1.0);
  return X;
}

void check_trace_monotone(const FitResult& fit) {
  for (std::size_t i = 0; i + 1 < fit.objective_trace.size(); ++i)
    CHECK(fit.objective_trace[i + 1] <= fit.objective_trace[i] + 1e-12);
}

}  // namespace

TEST_CASE("OLS recovers an exact linear map") {
  RngStream rng(1);
  const Eigen::MatrixXd X = random_matrix(40, 6, rng);
  Eigen::VectorXd beta(6);
  for (int j = 0; j < 6; ++j) beta[j] = rng.normal(1, 1);
  const FitResult fit = fit_ols(X, X * beta);
  CHECK((fit.beta - beta).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("OLS on a one-dimensional exact line") {
  Eigen::MatrixXd X(3, 1);
  X << 1, 2, 3;
  Eigen::VectorXd y(3);
  y << 2, 4, 6;
  const FitResult fit = fit_ols(X, y);
  CHECK(fit.beta[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("OLS first-order optimality on random instances") {
  RngStream rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd X = random_matrix(50, 5, rng);
    Eigen::VectorXd y(50);
    for (int i = 0; i < 50; ++i) y[i] = rng.normal(0, 2);
    const FitResult fit = fit_ols(X, y);
    const Eigen::VectorXd grad = 2.0 * X.transpose() * (X * fit.beta - y);
    CHECK(grad.lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_CASE("OLS scale equivariance") {
  RngStream rng(3);
  const Eigen::MatrixXd X = random_matrix(30, 4, rng);
  Eigen::VectorXd y(30);
  for (int i = 0; i < 30; ++i) y[i] = rng.normal(0, 1);
  const FitResult base = fit_ols(X, y);
  const FitResult scaled = fit_ols(X, (3.0 * y).eval());
  CHECK((scaled.beta - 3.0 * base.beta).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("OLS names the rank deficiency") {
  Eigen::MatrixXd X(10, 3);
  RngStream rng(4);
  for (int i = 0; i < 10; ++i) {
    X(i, 0) = rng.normal(0, 1);
    X(i, 1) = 2.0 * X(i, 0);  // dependent column
    X(i, 2) = rng.normal(0, 1);
  }
  Eigen::VectorXd y = Eigen::VectorXd::Ones(10);
  CHECK_THROWS_WITH_AS(fit_ols(X, y), doctest::Contains("1 of 3 columns dependent"),
                       NumericalError);
  Eigen::MatrixXd wide(2, 5);
  wide.setOnes();
  CHECK_THROWS_AS(fit_ols(wide, Eigen::VectorXd::Ones(2)), std::invalid_argument);
}

TEST_CASE("LTS ignores a gross response outlier on exact-line data") {
  Eigen::MatrixXd X(10, 1);
  Eigen::VectorXd y(10);
  for (int i = 0; i < 10; ++i) {
    X(i, 0) = i + 1.0;
    y[i] = 2.0 * X(i, 0);
  }
  y[9] = 50.0;
  RngStream rng(5);
  const FitResult fit = fit_lts(X, y, 0.5, 100, rng);
  CHECK(std::abs(fit.beta[0] - 2.0) < 1e-8);
  check_trace_monotone(fit);
  REQUIRE(fit.subset.has_value());
  CHECK(std::find(fit.subset->begin(), fit.subset->end(), 9) == fit.subset->end());
}

TEST_CASE("LTS exhaustive-start mode attains the h-subset optimum") {
  RngStream rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 10, p = 1;
    Eigen::MatrixXd X = random_matrix(n, p, rng);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i)
      y[i] = 1.5 * X(i, 0) + rng.normal(0, 0.5) + (i < 2 ? 20.0 : 0.0);
    TrimOptions opts;
    opts.alpha = 0.5;
    opts.exhaustive_h_subsets = true;
    RngStream fit_rng(100 + trial);
    const FitResult fit = fit_lts(X, y, opts, fit_rng);
    const oracles::SubsetOptimum oracle = oracles::lts_exhaustive(X, y, 5);
    CHECK(std::abs(fit.objective - oracle.objective) <= 1e-9);
    check_trace_monotone(fit);

    // The all-elemental-subset start policy lands on the same optimum here.
    TrimOptions elemental;
    elemental.alpha = 0.5;
    elemental.n_starts = 1000;  // enumerates all C(10,1) elemental subsets
    RngStream fit_rng2(200 + trial);
    const FitResult fit2 = fit_lts(X, y, elemental, fit_rng2);
    CHECK(std::abs(fit2.objective - oracle.objective) <= 1e-9);
  }
}

TEST_CASE("LTS with h = n equals OLS") {
  RngStream rng(7);
  const Eigen::MatrixXd X = random_matrix(20, 3, rng);
  Eigen::VectorXd y(20);
  for (int i = 0; i < 20; ++i) y[i] = rng.normal(0, 1);
  const FitResult ols = fit_ols(X, y);
  RngStream fit_rng(8);
  const FitResult lts = fit_lts(X, y, 0.01, 50, fit_rng);  // floor(0.01*20) = 0
  CHECK((lts.beta - ols.beta).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("LTS rejects h < p") {
  RngStream rng(9);
  const Eigen::MatrixXd X = random_matrix(10, 6, rng);
  const Eigen::VectorXd y = Eigen::VectorXd::Ones(10);
  CHECK_THROWS_AS(fit_lts(X, y, 0.5, 10, rng), std::invalid_argument);
  CHECK_THROWS_AS(fit_lts(X, y, 0.7, 10, rng), std::invalid_argument);
}

TEST_CASE("lasso with lambda = 0 on centered data equals OLS") {
  RngStream rng(10);
  Eigen::MatrixXd X = random_matrix(60, 4, rng);
  X.rowwise() -= X.colwise().mean();  // exactly centered design
  Eigen::VectorXd y(60);
  Eigen::VectorXd beta(4);
  for (int j = 0; j < 4; ++j) beta[j] = rng.normal(1, 1);
  y = X * beta;
  for (int i = 0; i < 60; ++i) y[i] += rng.normal(0, 0.5);
  y.array() -= y.mean();
  const FitResult ols = fit_ols(X, y);
  const FitResult lasso = fit_lasso(X, y, 0.0, 1e-12, 200000);
  CHECK((lasso.beta - ols.beta).lpNorm<Eigen::Infinity>() < 1e-6);
  CHECK(std::abs(lasso.intercept) < 1e-8);
}

TEST_CASE("lasso shrinks everything to zero at lambda_max") {
  RngStream rng(11);
  const Eigen::MatrixXd X = random_matrix(50, 8, rng, 2.0);
  Eigen::VectorXd y(50);
  for (int i = 0; i < 50; ++i) y[i] = rng.normal(1, 2);
  const double lam_max = lasso_lambda_max(X, y);
  const FitResult fit = fit_lasso(X, y, lam_max * (1.0 + 1e-12));
  CHECK(fit.beta.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("one-dimensional lasso is the closed-form soft threshold") {
  RngStream rng(12);
  Eigen::MatrixXd X(40, 1);
  Eigen::VectorXd y(40);
  for (int i = 0; i < 40; ++i) {
    X(i, 0) = rng.normal(0, 1);
    y[i] = 0.8 * X(i, 0) + rng.normal(0, 0.3);
  }
  const double n = 40.0;
  // Standardized problem: c = (1/n) Xs' yc with unit-variance Xs.
  const double xbar = X.col(0).mean();
  const Eigen::VectorXd xc = X.col(0).array() - xbar;
  const double sd = std::sqrt(xc.squaredNorm() / n);
  const Eigen::VectorXd xs = xc / sd;
  const Eigen::VectorXd yc = y.array() - y.mean();
  const double c = xs.dot(yc) / n;
  for (double lambda : {0.0, 0.1, 0.3, 2.0}) {
    const FitResult fit = fit_lasso(X, y, lambda, 1e-12);
    const double expected_std =
        (std::abs(c) > lambda ? (c > 0 ? c - lambda : c + lambda) : 0.0);
    CHECK(fit.beta[0] == doctest::Approx(expected_std / sd).epsilon(1e-9));
  }
}

TEST_CASE("lasso satisfies the KKT conditions") {
  RngStream rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 60, p = 10;
    const Eigen::MatrixXd X = random_matrix(n, p, rng, 1.0);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = X(i, 0) - 0.5 * X(i, 3) + rng.normal(0, 0.5);
    const double lambda = 0.05 + 0.1 * rng.uniform();
    const double tol = 1e-10;
    const FitResult fit = fit_lasso(X, y, lambda, tol, 100000);
    REQUIRE(fit.converged);

    // Re-derive the standardized problem the contract defines.
    Eigen::MatrixXd Xs(n, p);
    Eigen::VectorXd sd(p);
    for (int j = 0; j < p; ++j) {
      const Eigen::VectorXd xc = X.col(j).array() - X.col(j).mean();
      sd[j] = std::sqrt(xc.squaredNorm() / n);
      Xs.col(j) = xc / sd[j];
    }
    const Eigen::VectorXd yc = y.array() - y.mean();
    Eigen::VectorXd bs(p);
    for (int j = 0; j < p; ++j) bs[j] = fit.beta[j] * sd[j];
    const Eigen::VectorXd corr = Xs.transpose() * (yc - Xs * bs) / n;
    for (int j = 0; j < p; ++j) {
      CHECK(std::abs(corr[j]) <= lambda + 1e-6);
      if (bs[j] != 0.0)
        CHECK(std::abs(std::abs(corr[j]) - lambda) < 1e-6);  // active set equality
    }
  }
}

TEST_CASE("lasso reports non-convergence but still returns") {
  RngStream rng(14);
  const Eigen::MatrixXd X = random_matrix(30, 5, rng);
  Eigen::VectorXd y(30);
  for (int i = 0; i < 30; ++i) y[i] = rng.normal(0, 1);
  const FitResult fit = fit_lasso(X, y, 0.001, 1e-14, 1);
  CHECK_FALSE(fit.converged);
  CHECK(fit.iterations == 1);
}

TEST_CASE("sparse LTS with the penalty off matches LTS") {
  RngStream rng(15);
  const int n = 14, p = 3;
  const Eigen::MatrixXd X = random_matrix(n, p, rng);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = X(i, 0) + rng.normal(0, 0.4) + (i < 2 ? 15.0 : 0.0);
  TrimOptions opts;
  opts.alpha = 0.5;
  opts.exhaustive_h_subsets = true;  // C(14, 7) = 3432 starts
  opts.inner_tol = 1e-12;
  opts.inner_max_iter = 5000;
  RngStream r1(16), r2(17);
  const FitResult lts = fit_lts(X, y, opts, r1);
  const FitResult slts = fit_sparse_lts(X, y, 0.0, opts, r2);
  const int h = n - n / 2;
  // Objectives live on different scales: sum vs (1/2h)-scaled sum.
  CHECK(2.0 * h * slts.objective == doctest::Approx(lts.objective).epsilon(1e-6));
  CHECK((slts.beta - lts.beta).lpNorm<Eigen::Infinity>() < 1e-4);
}

TEST_CASE("sparse LTS beats every exhaustively enumerated h-subset lasso fit") {
  RngStream rng(18);
  const int n = 12, p = 2;
  const Eigen::MatrixXd X = random_matrix(n, p, rng, 1.0);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i)
    y[i] = 1.2 * X(i, 0) - 0.7 * X(i, 1) + rng.normal(0, 0.5) + (i < 2 ? 25.0 : 0.0);
  const double lambda = 0.1;
  TrimOptions opts;
  opts.alpha = 0.5;
  opts.exhaustive_h_subsets = true;
  RngStream fit_rng(19);
  const FitResult fit = fit_sparse_lts(X, y, lambda, opts, fit_rng);
  const int h = n - n / 2;
  const oracles::SubsetOptimum oracle = oracles::sparse_lts_exhaustive(X, y, h, lambda);
  CHECK(fit.objective <= oracle.objective + 1e-9);
  check_trace_monotone(fit);
}

TEST_CASE("sparse LTS recovers the true support under gross outliers") {
  RngStream rng(20);
  const int n = 40, p = 10;
  const Eigen::MatrixXd X = random_matrix(n, p, rng);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  beta[1] = 3.0;
  beta[6] = -2.0;
  Eigen::VectorXd y = X * beta;
  for (int i = 0; i < n; ++i) y[i] += rng.normal(0, 0.2);
  y[0] = 50.0;
  y[1] = 50.0;
  TrimOptions opts;
  opts.alpha = 0.25;
  opts.n_starts = 200;
  RngStream fit_rng(21);
  const FitResult fit = fit_sparse_lts(X, y, 0.12, opts, fit_rng);
  std::set<int> support;
  for (int j = 0; j < p; ++j)
    if (std::abs(fit.beta[j]) > 1e-6) support.insert(j);
  CHECK(support == std::set<int>{1, 6});
}

TEST_CASE("logistic gradient vanishes at the optimum") {
  // Rows 0 and 1 coincide with opposite labels, which rules out separation.
  Eigen::MatrixXd X(10, 2);
  X << 0.5, 1.2, 0.5, 1.2, 1.1, -0.9, 0.0, 0.3, -1.2, -0.5, 0.7, 0.8, -0.6, 1.5, 0.2,
      -1.1, 1.4, 0.1, -0.8, -0.7;
  Eigen::VectorXd y(10);
  y << 1, 0, 1, 1, 0, 1, 0, 0, 1, 0;
  const FitResult fit = fit_logistic(X, y, 1e-12, 200);
  REQUIRE(fit.converged);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < 10; ++i) {
    const double eta = fit.intercept + X.row(i).dot(fit.beta);
    const double p = 1.0 / (1.0 + std::exp(-eta));
    grad[0] += y[i] - p;
    grad[1] += X(i, 0) * (y[i] - p);
    grad[2] += X(i, 1) * (y[i] - p);
  }
  CHECK(grad.lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("logistic symmetry forces zero slopes") {
  RngStream rng(22);
  const int half = 40;
  Eigen::MatrixXd X(2 * half, 3);
  Eigen::VectorXd y(2 * half);
  for (int i = 0; i < half; ++i) {
    for (int j = 0; j < 3; ++j) {
      X(i, j) = rng.normal(0, 1);
      X(half + i, j) = -X(i, j);
    }
    const double label = rng.uniform() < 0.4 ? 1.0 : 0.0;
    y[i] = label;
    y[half + i] = label;  // (x, y) paired with (-x, y)
  }
  const FitResult fit = fit_logistic(X, y, 1e-12, 200);
  CHECK(fit.beta.lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("separable data reports quasi-separation") {
  Eigen::MatrixXd X(2, 1);
  X << 1.0, -1.0;
  Eigen::VectorXd y(2);
  y << 1.0, 0.0;
  const FitResult fit = fit_logistic(X, y);
  CHECK_FALSE(fit.converged);
  CHECK(fit.beta.norm() >= 20.0);  // ran into the slope-norm cap
}

TEST_CASE("logistic rejects single-class responses") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(10, 2);
  CHECK_THROWS_AS(fit_logistic(X, Eigen::VectorXd::Ones(10)), std::invalid_argument);
  CHECK_THROWS_AS(fit_logistic(X, Eigen::VectorXd::Zero(10)), std::invalid_argument);
}

TEST_CASE("trimmed logistic with h = n equals plain logistic") {
  RngStream rng(23);
  const int n = 30;
  Eigen::MatrixXd X = random_matrix(n, 2, rng);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const double eta = X(i, 0) - 0.5 * X(i, 1);
    y[i] = rng.uniform() < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
  }
  const FitResult plain = fit_logistic(X, y);
  RngStream fit_rng(24);
  const FitResult trimmed = fit_trimmed_logistic(X, y, 0.01, 50, fit_rng);  // h = n
  CHECK((trimmed.beta - plain.beta).lpNorm<Eigen::Infinity>() < 1e-6);
  CHECK(std::abs(trimmed.intercept - plain.intercept) < 1e-6);
}

TEST_CASE("trimmed logistic attains the exhaustive trimmed deviance") {
  RngStream rng(25);
  const int n = 14, p = 1;
  Eigen::MatrixXd X = random_matrix(n, p, rng);
  Eigen::VectorXd y(n);
  int ones = 0;
  for (int i = 0; i < n; ++i) {
    const double eta = 1.5 * X(i, 0);
    y[i] = rng.uniform() < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
    ones += y[i] == 1.0;
  }
  REQUIRE(ones > 2);
  REQUIRE(ones < n - 2);
  TrimOptions opts;
  opts.alpha = 0.5;
  opts.exhaustive_h_subsets = true;
  RngStream fit_rng(26);
  const FitResult fit = fit_trimmed_logistic(X, y, opts, fit_rng);
  check_trace_monotone(fit);

  const int h = n - n / 2;
  const auto inner_fit = [&](const std::vector<int>& H, Eigen::VectorXd& beta,
                             double& intercept) {
    Eigen::MatrixXd Xh(static_cast<Eigen::Index>(H.size()), p);
    Eigen::VectorXd yh(static_cast<Eigen::Index>(H.size()));
    int count_ones = 0;
    for (std::size_t k = 0; k < H.size(); ++k) {
      Xh.row(static_cast<Eigen::Index>(k)) = X.row(H[k]);
      yh[static_cast<Eigen::Index>(k)] = y[H[k]];
      count_ones += yh[static_cast<Eigen::Index>(k)] == 1.0;
    }
    if (count_ones == 0 || count_ones == static_cast<int>(H.size())) return false;
    const FitResult f = fit_logistic(Xh, yh);
    beta = f.beta;
    intercept = f.intercept;
    return true;
  };
  const auto all_losses = [&](const Eigen::VectorXd& beta, double intercept) {
    FitResult f;
    f.beta = beta;
    f.intercept = intercept;
    return pointwise_losses(Task::classification, f, X, y);
  };
  const oracles::SubsetOptimum oracle =
      oracles::trimmed_deviance_exhaustive(X, y, h, inner_fit, all_losses);
  CHECK(fit.objective <= oracle.objective + 1e-9);
}

TEST_CASE("trimmed logistic resists label-flipped gross outliers") {
  // Simulation oracle: trimmed fit classifies a clean holdout at least as
  // well as the plain fit when the training data carries planted outliers.
  RngStream rng(27);
  int trimmed_wins = 0;
  const int seeds = 10;
  for (int s = 0; s < seeds; ++s) {
    const int n = 120, p = 3;
    Eigen::MatrixXd X = random_matrix(n, p, rng);
    Eigen::VectorXd beta(p);
    for (int j = 0; j < p; ++j) beta[j] = rng.normal(1, 0.5);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      const double eta = X.row(i).dot(beta);
      y[i] = rng.uniform() < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
    }
    for (int i = 0; i < n / 10; ++i) {  // gross X with flipped labels
      X.row(i).setConstant(8.0);
      y[i] = 0.0;
    }
    Eigen::MatrixXd Xt = random_matrix(400, p, rng);
    Eigen::VectorXd yt(400);
    for (int i = 0; i < 400; ++i) {
      const double eta = Xt.row(i).dot(beta);
      yt[i] = rng.uniform() < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
    }
    const auto misclassification = [&](const FitResult& f) {
      int wrong = 0;
      for (int i = 0; i < 400; ++i) {
        const double eta = f.intercept + Xt.row(i).dot(f.beta);
        wrong += ((eta > 0.0 ? 1.0 : 0.0) != yt[i]) ? 1 : 0;
      }
      return wrong;
    };
    const FitResult plain = fit_logistic(X, y);
    RngStream fit_rng(1000 + s);
    TrimOptions opts;
    opts.alpha = 0.2;
    opts.n_starts = 50;
    const FitResult trimmed = fit_trimmed_logistic(X, y, opts, fit_rng);
    if (misclassification(trimmed) <= misclassification(plain)) ++trimmed_wins;
  }
  CHECK(trimmed_wins >= 7);
}

TEST_CASE("C-step traces are monotone across the trimmed family") {
  RngStream rng(28);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 40, p = 3;
    const Eigen::MatrixXd X = random_matrix(n, p, rng, 1.0);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i)
      y[i] = X(i, 0) + rng.normal(0, 1) + (i % 7 == 0 ? 30.0 : 0.0);
    RngStream r1(trial), r2(trial + 100);
    check_trace_monotone(fit_lts(X, y, 0.3, 40, r1));
    check_trace_monotone(fit_sparse_lts(X, y, 0.3, 0.05, 40, r2));
  }
}

TEST_CASE("L1 logistic approaches plain logistic as lambda vanishes") {
  RngStream rng(29);
  const int n = 80, p = 3;
  Eigen::MatrixXd X = random_matrix(n, p, rng);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const double eta = 0.8 * X(i, 0) - 0.5 * X(i, 2);
    y[i] = rng.uniform() < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
  }
  const FitResult mle = fit_logistic(X, y);
  const FitResult penalized = fit_l1_logistic(X, y, 1e-8, 1e-10, 500);
  CHECK((penalized.beta - mle.beta).lpNorm<Eigen::Infinity>() < 1e-2);
  const FitResult heavy = fit_l1_logistic(X, y, 10.0);
  CHECK(heavy.beta.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("select_lambda_cv returns a grid point that prefers the signal") {
  RngStream rng(30);
  const int n = 80, p = 20;
  const Eigen::MatrixXd X = random_matrix(n, p, rng);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  beta[2] = 2.0;
  beta[11] = -1.5;
  Eigen::VectorXd y = X * beta;
  for (int i = 0; i < n; ++i) y[i] += rng.normal(0, 0.5);
  RngStream cv_rng(31);
  const double lambda = select_lambda_cv(X, y, Task::regression, cv_rng);
  CHECK(lambda > 0.0);
  CHECK(lambda < lasso_lambda_max(X, y));
  const FitResult fit = fit_lasso(X, y, lambda);
  CHECK(std::abs(fit.beta[2]) > 0.5);
  CHECK(std::abs(fit.beta[11]) > 0.5);
}
