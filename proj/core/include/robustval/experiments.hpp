#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "robustval/datagen.hpp"
#include "robustval/estimators.hpp"

namespace robustval {

// One measurement: (scenario, repetition, strategy, metric) -> value.
struct MetricRow {
  std::string scenario_id;
  std::string task;
  std::string contam_scheme;
  std::string estimator;
  std::string strategy;
  std::string cv_scheme;
  double r = 0.0;
  double r_val = 0.0;
  double snr_or_mu = 0.0;
  int repetition = 0;
  std::string metric_name;
  double value = 0.0;
};

inline constexpr const char* kMetricHardRankingError = "hard_ranking_error";
inline constexpr const char* kMetricWeakRankingErrorTrain = "weak_ranking_error_train";
inline constexpr const char* kMetricWeakRankingErrorTest = "weak_ranking_error_test";
inline constexpr const char* kMetricEmpiricalBdp = "empirical_bdp";
inline constexpr const char* kMetricAvgTestLoss = "avg_test_loss";
inline constexpr const char* kMetricFlipRate = "flip_rate";

// Total order over every key column (value last); run outputs are sorted with
// this before they are written, which makes runs byte-comparable.
bool row_less(const MetricRow& a, const MetricRow& b);
void sort_rows(std::vector<MetricRow>& rows);

// Budgets for the fits inside experiment repetitions. Estimator-side trimming
// always uses alpha = 0.5.
struct FitterBudget {
  int lts_starts = 40;
  int lts_keep = 5;
  int slts_starts = 20;
  int slts_keep = 3;
  int tlogit_starts = 20;
  int tlogit_keep = 3;
  int max_csteps = 50;
  int loo_csteps = 3;
  double lasso_tol = 1e-7;
  int lasso_max_iter = 2000;
  std::optional<double> lambda;  // fixed penalty; 5-fold CV per repetition when absent
};

struct RunOptions {
  std::uint64_t master_seed = 42;
  int repetitions = 0;  // 0: scenario default (50; 20 for p >= 500)
  int threads = 1;      // capped by ROBUST_ELICIT_THREADS
  std::vector<double> r_grid;          // empty: preset default
  std::vector<double> r_val_grid;      // empty: runner default
  std::vector<CvScheme> cv_schemes;    // empty: runner default
  FitterBudget budget;
};

// Applies the ROBUST_ELICIT_THREADS cap.
int effective_thread_count(int requested);

// Classical/robust estimator pair for a scenario: (ols, lts) respectively
// (lasso, sparse LTS) for regression, (logit, trimmed logit) respectively
// (l1 logit, trimmed l1 logit) for classification; the penalized pair kicks
// in at p >= n.
struct FitterPair {
  Fitter classical;
  Fitter robust;
};
FitterPair make_fitter_pair(const ScenarioConfig& cfg, const FitterBudget& budget,
                            double lambda);

// Finite-sample fluctuation of the average test loss: one OLS fit per
// training SNR in {5, 1, 0.2}, the fits and the true coefficients evaluated
// on prefix-nested test sets over the n_val grid (capped at n_val_cap).
std::vector<MetricRow> run_E0_fluctuation(std::uint64_t master_seed,
                                          int n_val_cap = 100000);

struct E1Options {
  int n = 250;
  int p = 20;
  int n_test = 10000;
  int repetitions = 100;
  double mix = 0.05;
  double trim_alpha = 0.05;
  int threads = 1;
  FitterBudget budget;
};

// Cauchy-contaminated validation: OLS and LTS against the true coefficients
// under mean / oracle / trimmed / arctan aggregation, with per-repetition
// flip indicators (estimated model's aggregate beats the truth's).
std::vector<MetricRow> run_E1_cauchy(std::uint64_t master_seed,
                                     const E1Options& opts = {});

// Contaminated training data, clean test set; batches ranked by in-sample /
// test losses (plain and 0.5-trimmed, classical and robust fits) and by
// coefficient deviation, scored by the hard ranking error against the true
// contamination-fraction ranking.
std::vector<MetricRow> run_E2_batch_ranking_clean_test(const ScenarioConfig& cfg,
                                                       const RunOptions& opts = {});

// As E2 restricted to k-fold CV, with the training data first trimmed by the
// leave-one-out strategy (alpha = r); the trim-base fitter is a strategy
// dimension.
std::vector<MetricRow> run_E3_batch_ranking_post_loo_trim(const ScenarioConfig& cfg,
                                                          const RunOptions& opts = {});

// Contaminated training and test data, randomized CV only: the test set is
// cleaned by trim_test_instances (alpha = r_val) under a model trained on the
// full training data before batches are ranked against it.
std::vector<MetricRow> run_E4_batch_ranking_contaminated_test(
    const ScenarioConfig& cfg, const RunOptions& opts = {});

// Separate identification of contaminated training instances (leave-one-out
// scores) and test instances (scores under a full-training-data model),
// evaluated by weak ranking errors with M = the realized contaminated count,
// plus per-repetition empirical-BDP indicators.
std::vector<MetricRow> run_E5_instance_identification(const ScenarioConfig& cfg,
                                                      const RunOptions& opts = {});

// As E5 but the test-instance scoring model is refit on LOO-trimmed training
// data; strategies span {trim-base} x {scorer}.
std::vector<MetricRow> run_E6_instance_identification_post_trim(
    const ScenarioConfig& cfg, const RunOptions& opts = {});

}  // namespace robustval
