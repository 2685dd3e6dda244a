#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "robustval/datagen.hpp"
#include "robustval/rng.hpp"

namespace robustval {

struct FitResult {
  Eigen::VectorXd beta;            // original scale, intercept excluded
  double intercept = 0.0;          // 0 when the estimator has no intercept
  double objective = 0.0;
  std::optional<std::vector<int>> subset;  // final h-subset of trimmed fits, sorted
  int iterations = 0;
  bool converged = true;
  std::vector<double> objective_trace;  // one entry per C-step, non-increasing
};

// Least squares via column-pivoted QR. Requires n >= p and full column rank;
// a rank deficiency is reported with the number of dependent columns.
FitResult fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// Start policy and budgets for the C-step estimators (FAST-LTS scheme:
// n_starts short runs, the keep_best most promising refined to convergence).
// When C(n, elemental) <= n_starts the elemental starts are enumerated
// deterministically instead of sampled. exhaustive_h_subsets starts one run
// per h-subset, which provably attains the exhaustive-enumeration optimum.
struct TrimOptions {
  double alpha = 0.5;
  int n_starts = 500;
  int keep_best = 10;
  int initial_csteps = 2;
  int max_csteps = 50;
  int retry_cap = 50;
  bool exhaustive_h_subsets = false;
  std::uint64_t exhaustive_cap = 5000;
  double inner_tol = 1e-8;     // penalized subset solves
  int inner_max_iter = 500;
};

// Minimizes the sum of the h smallest squared residuals, h = n - floor(alpha*n).
FitResult fit_lts(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const TrimOptions& opts, RngStream& rng);
FitResult fit_lts(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha,
                  int n_starts, RngStream& rng);

// Cyclic coordinate descent with soft thresholding. Columns are standardized
// to mean 0 / variance 1 (1/n convention) and y is centered internally;
// beta comes back on the original scale with the implied intercept. lambda
// and the recorded objective (1/(2n))||r||^2 + lambda*||b||_1 refer to the
// standardized problem. Stops when the largest coordinate change in a sweep
// drops below tol; a budget overrun returns converged = false.
FitResult fit_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                    double tol = 1e-9, int max_iter = 100000);

// Smallest lambda that shrinks every coefficient to zero (standardized scale).
double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// C-steps with an L1-penalized least-squares fit on each working subset.
// The subset fits run on the raw scale (no centering, no intercept) so the
// objective (1/(2h)) sum_{i in subset} r_i^2 + lambda*||b||_1 is comparable
// across subsets and the trace stays monotone.
FitResult fit_sparse_lts(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         double lambda, const TrimOptions& opts, RngStream& rng);
FitResult fit_sparse_lts(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         double alpha, double lambda, int n_starts, RngStream& rng);

// Bernoulli ML with logit link and an intercept, via IRLS with step halving.
// Quasi-separation (parameter norm beyond norm_cap) stops the iteration and
// reports converged = false. y must contain both classes.
FitResult fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       double tol = 1e-10, int max_iter = 100);

// Trimmed maximum likelihood: C-steps on per-instance deviances, objective =
// sum of the h smallest deviances.
FitResult fit_trimmed_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const TrimOptions& opts, RngStream& rng);
FitResult fit_trimmed_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               double alpha, int n_starts, RngStream& rng);

// L1-penalized logistic regression (IRLS outer loop, weighted coordinate
// descent inner loop, unpenalized intercept). Stand-in for boosting in the
// p >= n classification runs.
FitResult fit_l1_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          double lambda, double tol = 1e-7, int max_iter = 100);

FitResult fit_trimmed_l1_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  double lambda, const TrimOptions& opts,
                                  RngStream& rng);

Eigen::VectorXd linear_predictor(const FitResult& fit, const Eigen::MatrixXd& X);

// Squared loss (regression) or deviance of the predicted class probability
// (classification) per instance.
std::vector<double> pointwise_losses(Task task, const FitResult& fit,
                                     const Eigen::MatrixXd& X, const Eigen::VectorXd& y);
double pointwise_loss(Task task, const FitResult& fit, const Eigen::RowVectorXd& x,
                      double y);

// Estimator handle used by the trimming strategies and experiment runners.
// loo_scores, when present, is a fast path returning the leave-one-out
// pointwise loss of every instance; trimming falls back to explicit refits.
struct Fitter {
  std::string name;
  bool robust = false;
  Task task = Task::regression;
  std::function<FitResult(const Eigen::MatrixXd&, const Eigen::VectorXd&, RngStream&)> fit;
  std::function<std::vector<double>(const Eigen::MatrixXd&, const Eigen::VectorXd&,
                                    RngStream&)>
      loo_scores;
};

Fitter ols_fitter();
Fitter lts_fitter(const TrimOptions& opts = {}, int loo_csteps = 4);
Fitter lasso_fitter(double lambda, double tol = 1e-7, int max_iter = 2000);
Fitter sparse_lts_fitter(double lambda, const TrimOptions& opts = {}, int loo_csteps = 4);
Fitter logistic_fitter();
Fitter trimmed_logistic_fitter(const TrimOptions& opts = {}, int loo_csteps = 4);
Fitter l1_logistic_fitter(double lambda);
Fitter trimmed_l1_logistic_fitter(double lambda, const TrimOptions& opts = {},
                                  int loo_csteps = 4);

// 5-fold CV over a geometric lambda grid below lambda_max, minimizing
// validation MSE (regression) or deviance (classification).
double select_lambda_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Task task,
                        RngStream& rng, int folds = 5, int grid_size = 8);

}  // namespace robustval
