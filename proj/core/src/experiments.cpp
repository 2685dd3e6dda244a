#include "robustval/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>
#include <tuple>

#include "robustval/bdp.hpp"
#include "robustval/errors.hpp"
#include "robustval/losses.hpp"
#include "robustval/trimming.hpp"

namespace robustval {

namespace {

std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string scenario_sid(const ScenarioConfig& cfg, double r, double r_val) {
  const double level = cfg.snr.has_value() ? *cfg.snr : cfg.mu;
  return cfg.id + "/" + to_string(cfg.contam_scheme) + "/m=" + fmt_short(level) +
         "/r=" + fmt_short(r) + "/rv=" + fmt_short(r_val);
}

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

std::vector<std::uint8_t> flags_of(const std::vector<std::uint8_t>& flags,
                                   const std::vector<int>& idx) {
  std::vector<std::uint8_t> out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out[k] = flags[static_cast<std::size_t>(idx[k])];
  return out;
}

std::vector<int> flagged_indices(const std::vector<std::uint8_t>& flags) {
  std::vector<int> out;
  for (std::size_t i = 0; i < flags.size(); ++i)
    if (flags[i]) out.push_back(static_cast<int>(i));
  return out;
}

// Deterministic parallel map over repetitions: per-repetition outputs land in
// slots indexed by repetition and are merged in order, so the thread count
// can never change the result.
std::vector<MetricRow> parallel_reps(
    int reps, int threads, const std::function<std::vector<MetricRow>(int)>& body) {
  std::vector<std::vector<MetricRow>> slots(static_cast<std::size_t>(reps));
  const int workers = std::min(effective_thread_count(threads), reps);
  if (workers <= 1) {
    for (int v = 0; v < reps; ++v) slots[static_cast<std::size_t>(v)] = body(v);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
      while (true) {
        const int v = next.fetch_add(1);
        if (v >= reps) return;
        try {
          slots[static_cast<std::size_t>(v)] = body(v);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  std::vector<MetricRow> rows;
  for (auto& slot : slots) rows.insert(rows.end(), slot.begin(), slot.end());
  return rows;
}

struct RepData {
  LinearModel model;
  Dataset train;  // contaminated at r
  Dataset test;   // contaminated at r_val
  double lambda = 0.0;
};

bool penalized_pair(const ScenarioConfig& cfg) { return cfg.p >= cfg.n; }

RepData make_rep_data(const ScenarioConfig& cfg, const std::string& sid,
                      std::uint64_t seed, int v, double r, double r_val,
                      const FitterBudget& budget) {
  RepData rep;
  {
    RngStream rng = RngStream::derive(seed, sid, v, "model");
    rep.model = draw_model(cfg, rng);
  }
  {
    RngStream rng = RngStream::derive(seed, sid, v, "train");
    rep.train = gen_dataset_from(rep.model, cfg, rng, cfg.n);
  }
  if (r > 0.0) {
    RngStream rng = RngStream::derive(seed, sid, v, "contam_train");
    rep.train = inject_contamination(rep.train, cfg.contam_scheme, r, cfg.gross_value, rng);
  }
  {
    RngStream rng = RngStream::derive(seed, sid, v, "test");
    rep.test = gen_dataset_from(rep.model, cfg, rng, cfg.n_test);
  }
  if (r_val > 0.0) {
    RngStream rng = RngStream::derive(seed, sid, v, "contam_test");
    rep.test = inject_contamination(rep.test, cfg.contam_scheme, r_val, cfg.gross_value, rng);
  }
  if (penalized_pair(cfg)) {
    if (budget.lambda.has_value()) {
      rep.lambda = *budget.lambda;
    } else {
      RngStream rng = RngStream::derive(seed, sid, v, "lambda_cv");
      rep.lambda = select_lambda_cv(rep.train.X, rep.train.y, cfg.task, rng);
    }
  }
  return rep;
}

MetricRow base_row(const ScenarioConfig& cfg, const std::string& sid, double r,
                   double r_val, int v) {
  MetricRow row;
  row.scenario_id = sid;
  row.task = to_string(cfg.task);
  row.contam_scheme = to_string(cfg.contam_scheme);
  row.r = r;
  row.r_val = r_val;
  row.snr_or_mu = cfg.snr.has_value() ? *cfg.snr : cfg.mu;
  row.repetition = v;
  return row;
}

void reject_case_y_classification(const ScenarioConfig& cfg) {
  if (cfg.task == Task::classification && cfg.contam_scheme == ContamScheme::case_y)
    throw std::invalid_argument(
        "classification runs support the cell_x scheme only: a binary response "
        "cannot take the gross value");
}

int scenario_reps(const ScenarioConfig& cfg, const RunOptions& opts) {
  return opts.repetitions > 0 ? opts.repetitions : cfg.repetitions;
}

std::vector<double> r_grid_of(const ScenarioConfig& cfg, const RunOptions& opts) {
  if (!opts.r_grid.empty()) return opts.r_grid;
  return {0.05, 0.15, 0.25, 0.5};
}

CvScheme with_subset_size(CvScheme cv, int n_sub) {
  if (cv.kind == CvScheme::Kind::randomized && cv.subset_size <= 0)
    cv.subset_size = n_sub;
  return cv;
}

// ---------------------------------------------------------------------------
// Batch machinery shared by E2/E3/E4.

struct BatchFits {
  std::vector<FitResult> classical, robust;
  std::vector<std::uint8_t> fail_classical, fail_robust;
};

BatchFits fit_batches(const std::vector<std::vector<int>>& batches,
                      const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const FitterPair& pair, std::uint64_t seed,
                      const std::string& sid, int v, const std::string& purpose) {
  BatchFits fits;
  fits.classical.resize(batches.size());
  fits.robust.resize(batches.size());
  fits.fail_classical.assign(batches.size(), 0);
  fits.fail_robust.assign(batches.size(), 0);
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const Eigen::MatrixXd Xb = rows_of(X, batches[b]);
    const Eigen::VectorXd yb = elems_of(y, batches[b]);
    {
      RngStream rng = RngStream::derive(
          seed, sid, v, purpose + "/b" + std::to_string(b) + "/" + pair.classical.name);
      try {
        fits.classical[b] = pair.classical.fit(Xb, yb, rng);
      } catch (const std::exception&) {
        fits.fail_classical[b] = 1;
      }
    }
    {
      RngStream rng = RngStream::derive(
          seed, sid, v, purpose + "/b" + std::to_string(b) + "/" + pair.robust.name);
      try {
        fits.robust[b] = pair.robust.fit(Xb, yb, rng);
      } catch (const std::exception&) {
        fits.fail_robust[b] = 1;
      }
    }
  }
  return fits;
}

constexpr double kWorstScore = -std::numeric_limits<double>::infinity();

struct StrategyScores {
  std::string strategy;
  std::string estimator;
  std::vector<double> scores;
};

// In-sample and coefficient-deviation scores; one entry per strategy.
std::vector<StrategyScores> train_side_scores(
    const std::vector<std::vector<int>>& batches, const Eigen::MatrixXd& X,
    const Eigen::VectorXd& y, const BatchFits& fits, const FitterPair& pair,
    double trim_alpha) {
  std::vector<StrategyScores> out;
  for (int robust = 0; robust < 2; ++robust) {
    const Fitter& fitter = robust ? pair.robust : pair.classical;
    const auto& fitted = robust ? fits.robust : fits.classical;
    const auto& failed = robust ? fits.fail_robust : fits.fail_classical;
    StrategyScores plain{"train_loss", fitter.name, {}};
    StrategyScores trimmed{"train_loss_trimmed", fitter.name, {}};
    for (std::size_t b = 0; b < batches.size(); ++b) {
      if (failed[b]) {
        plain.scores.push_back(kWorstScore);
        trimmed.scores.push_back(kWorstScore);
        continue;
      }
      LossVector losses;
      losses.values = pointwise_losses(fitter.task, fitted[b], rows_of(X, batches[b]),
                                       elems_of(y, batches[b]));
      plain.scores.push_back(aggregate_mean(losses));
      trimmed.scores.push_back(aggregate_trimmed(losses, trim_alpha));
    }
    out.push_back(std::move(plain));
    out.push_back(std::move(trimmed));
  }
  StrategyScores deviation{"coef_deviation",
                           pair.classical.name + "+" + pair.robust.name, {}};
  for (std::size_t b = 0; b < batches.size(); ++b) {
    if (fits.fail_classical[b] || fits.fail_robust[b]) {
      deviation.scores.push_back(kWorstScore);
      continue;
    }
    const double di = fits.classical[b].intercept - fits.robust[b].intercept;
    deviation.scores.push_back(
        std::sqrt((fits.classical[b].beta - fits.robust[b].beta).squaredNorm() + di * di));
  }
  out.push_back(std::move(deviation));
  return out;
}

std::vector<StrategyScores> test_side_scores(const BatchFits& fits,
                                             const FitterPair& pair,
                                             const Eigen::MatrixXd& test_X,
                                             const Eigen::VectorXd& test_y,
                                             double trim_alpha,
                                             const std::string& suffix) {
  std::vector<StrategyScores> out;
  for (int robust = 0; robust < 2; ++robust) {
    const Fitter& fitter = robust ? pair.robust : pair.classical;
    const auto& fitted = robust ? fits.robust : fits.classical;
    const auto& failed = robust ? fits.fail_robust : fits.fail_classical;
    StrategyScores plain{"test_loss" + suffix, fitter.name, {}};
    StrategyScores trimmed{"test_loss_trimmed" + suffix, fitter.name, {}};
    for (std::size_t b = 0; b < fitted.size(); ++b) {
      if (failed[b]) {
        plain.scores.push_back(kWorstScore);
        trimmed.scores.push_back(kWorstScore);
        continue;
      }
      LossVector losses;
      losses.values = pointwise_losses(fitter.task, fitted[b], test_X, test_y);
      plain.scores.push_back(aggregate_mean(losses));
      trimmed.scores.push_back(aggregate_trimmed(losses, trim_alpha));
    }
    out.push_back(std::move(plain));
    out.push_back(std::move(trimmed));
  }
  return out;
}

void emit_hard_ranking_rows(std::vector<MetricRow>& rows, const MetricRow& base,
                            const std::string& cv_label,
                            const std::vector<StrategyScores>& strategies,
                            const RankVector& truth, const std::string& suffix) {
  for (const auto& s : strategies) {
    const RankVector predicted = ranks_descending(s.scores);
    MetricRow row = base;
    row.estimator = s.estimator;
    row.strategy = s.strategy + suffix;
    row.cv_scheme = cv_label;
    row.metric_name = kMetricHardRankingError;
    row.value = hard_ranking_error(truth, predicted);
    rows.push_back(std::move(row));
  }
}

}  // namespace

// ---------------------------------------------------------------------------

bool row_less(const MetricRow& a, const MetricRow& b) {
  const auto key = [](const MetricRow& m) {
    return std::tie(m.scenario_id, m.task, m.contam_scheme, m.estimator, m.strategy,
                    m.cv_scheme, m.r, m.r_val, m.snr_or_mu, m.repetition, m.metric_name,
                    m.value);
  };
  return key(a) < key(b);
}

void sort_rows(std::vector<MetricRow>& rows) {
  std::sort(rows.begin(), rows.end(), row_less);
}

int effective_thread_count(int requested) {
  int threads = std::max(requested, 1);
  if (const char* env = std::getenv("ROBUST_ELICIT_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap >= 1)
      threads = std::min<long>(threads, cap);
  }
  return threads;
}

FitterPair make_fitter_pair(const ScenarioConfig& cfg, const FitterBudget& budget,
                            double lambda) {
  TrimOptions trim;
  trim.alpha = 0.5;
  trim.max_csteps = budget.max_csteps;
  FitterPair pair;
  if (cfg.task == Task::regression) {
    if (!penalized_pair(cfg)) {
      trim.n_starts = budget.lts_starts;
      trim.keep_best = budget.lts_keep;
      pair.classical = ols_fitter();
      pair.robust = lts_fitter(trim, budget.loo_csteps);
    } else {
      trim.n_starts = budget.slts_starts;
      trim.keep_best = budget.slts_keep;
      pair.classical = lasso_fitter(lambda, budget.lasso_tol, budget.lasso_max_iter);
      pair.robust = sparse_lts_fitter(lambda, trim, budget.loo_csteps);
    }
  } else {
    trim.n_starts = budget.tlogit_starts;
    trim.keep_best = budget.tlogit_keep;
    if (!penalized_pair(cfg)) {
      pair.classical = logistic_fitter();
      pair.robust = trimmed_logistic_fitter(trim, budget.loo_csteps);
    } else {
      pair.classical = l1_logistic_fitter(lambda);
      pair.robust = trimmed_l1_logistic_fitter(lambda, trim, budget.loo_csteps);
    }
  }
  return pair;
}

// ---------------------------------------------------------------------------
// E0

std::vector<MetricRow> run_E0_fluctuation(std::uint64_t master_seed, int n_val_cap) {
  if (n_val_cap < 100) throw std::invalid_argument("run_E0: n_val_cap must be >= 100");
  ScenarioConfig cfg = preset("reg-p20");
  cfg.s0 = cfg.p;  // every coefficient non-zero in this illustration

  std::vector<int> grid;
  for (int v = 100; v <= 900; v += 100) grid.push_back(v);
  for (int v = 1000; v <= 9000; v += 1000) grid.push_back(v);
  for (int v = 10000; v <= 90000; v += 10000) grid.push_back(v);
  grid.push_back(100000);
  grid.erase(std::remove_if(grid.begin(), grid.end(),
                            [&](int v) { return v > n_val_cap; }),
             grid.end());
  const int max_nval = grid.back();

  const std::vector<double> snrs = {5.0, 1.0, 0.2};

  Eigen::VectorXd beta;
  {
    RngStream rng = RngStream::derive(master_seed, "E0", 0, "model");
    cfg.snr = snrs[0];
    beta = draw_model(cfg, rng).beta;
  }
  const double beta_norm2 = beta.squaredNorm();

  // One OLS fit per training noise level, shared coefficients.
  struct TrainedModel {
    double snr;
    FitResult fit;
  };
  std::vector<TrainedModel> trained;
  for (double snr : snrs) {
    LinearModel model{beta, std::sqrt(beta_norm2 / snr)};
    cfg.snr = snr;
    RngStream rng =
        RngStream::derive(master_seed, "E0", 0, "train/snr=" + fmt_short(snr));
    const Dataset train = gen_regression_from(model, cfg, rng, cfg.n);
    trained.push_back({snr, fit_ols(train.X, train.y)});
  }

  std::vector<MetricRow> rows;
  for (double test_snr : snrs) {
    LinearModel model{beta, std::sqrt(beta_norm2 / test_snr)};
    cfg.snr = test_snr;
    RngStream rng =
        RngStream::derive(master_seed, "E0", 0, "test/snr=" + fmt_short(test_snr));
    const Dataset test = gen_regression_from(model, cfg, rng, max_nval);

    FitResult truth;
    truth.beta = beta;
    std::vector<std::pair<std::string, const FitResult*>> models;
    for (const auto& t : trained)
      models.emplace_back("trained_snr=" + fmt_short(t.snr), &t.fit);
    models.emplace_back("truth", &truth);

    for (const auto& [label, fit] : models) {
      const std::vector<double> losses =
          pointwise_losses(Task::regression, *fit, test.X, test.y);
      double running_sum = 0.0;
      std::size_t consumed = 0;
      for (int n_val : grid) {
        while (consumed < static_cast<std::size_t>(n_val)) running_sum += losses[consumed++];
        MetricRow row;
        row.scenario_id = "E0/nval=" + std::to_string(n_val);
        row.task = "regression";
        row.contam_scheme = "none";
        row.estimator = label == "truth" ? "truth" : "ols";
        row.strategy = label;
        row.cv_scheme = "none";
        row.snr_or_mu = test_snr;
        row.repetition = 0;
        row.metric_name = kMetricAvgTestLoss;
        row.value = running_sum / static_cast<double>(n_val);
        rows.push_back(std::move(row));
      }
    }
  }
  sort_rows(rows);
  return rows;
}

// ---------------------------------------------------------------------------
// E1

std::vector<MetricRow> run_E1_cauchy(std::uint64_t master_seed, const E1Options& opts) {
  if (opts.repetitions <= 0) throw std::invalid_argument("run_E1: repetitions must be > 0");
  TrimOptions lts_opts;
  lts_opts.alpha = 0.5;
  lts_opts.n_starts = opts.budget.lts_starts;
  lts_opts.keep_best = opts.budget.lts_keep;
  lts_opts.max_csteps = opts.budget.max_csteps;

  const auto body = [&](int v) {
    std::vector<MetricRow> rows;
    Eigen::VectorXd beta(opts.p);
    {
      RngStream rng = RngStream::derive(master_seed, "E1", v, "model");
      for (int j = 0; j < opts.p; ++j) beta[j] = rng.normal(1.0, 1.0);
    }
    Dataset train, test;
    {
      RngStream rng = RngStream::derive(master_seed, "E1", v, "train");
      train = gen_cauchy_mixture_from(beta, opts.n, opts.mix, rng);
    }
    {
      RngStream rng = RngStream::derive(master_seed, "E1", v, "test");
      test = gen_cauchy_mixture_from(beta, opts.n_test, opts.mix, rng);
    }

    FitResult truth;
    truth.beta = beta;
    const FitResult ols = fit_ols(train.X, train.y);
    FitResult lts;
    {
      RngStream rng = RngStream::derive(master_seed, "E1", v, "fit/lts");
      lts = fit_lts(train.X, train.y, lts_opts, rng);
    }

    const auto loss_vector = [&](const FitResult& fit) {
      LossVector l;
      l.values = pointwise_losses(Task::regression, fit, test.X, test.y);
      l.source_flags = test.contaminated;
      return l;
    };
    const LossVector l_truth = loss_vector(truth);
    const LossVector l_ols = loss_vector(ols);
    const LossVector l_lts = loss_vector(lts);

    const std::vector<std::pair<std::string, std::function<double(const LossVector&)>>>
        aggregators = {
            {"agg=mean", [](const LossVector& l) { return aggregate_mean(l); }},
            {"agg=oracle", [](const LossVector& l) { return aggregate_oracle(l).value; }},
            {"agg=trim" + fmt_short(opts.trim_alpha),
             [&](const LossVector& l) { return aggregate_trimmed(l, opts.trim_alpha); }},
            {"agg=arctan",
             [](const LossVector& l) {
               return aggregate_transformed(l, LossTransform::arctan);
             }},
        };

    for (const auto& [label, agg] : aggregators) {
      const double a_truth = agg(l_truth);
      const std::vector<std::pair<std::string, double>> estimates = {
          {"ols", agg(l_ols)}, {"lts", agg(l_lts)}};
      MetricRow base;
      base.scenario_id = "E1";
      base.task = "regression";
      base.contam_scheme = "cauchy_mixture";
      base.strategy = label;
      base.cv_scheme = "none";
      base.r = opts.mix;
      base.r_val = opts.mix;
      base.snr_or_mu = 1.0;  // sigma of the ideal noise component
      base.repetition = v;

      MetricRow truth_row = base;
      truth_row.estimator = "truth";
      truth_row.metric_name = kMetricAvgTestLoss;
      truth_row.value = a_truth;
      rows.push_back(std::move(truth_row));

      for (const auto& [est, value] : estimates) {
        MetricRow loss_row = base;
        loss_row.estimator = est;
        loss_row.metric_name = kMetricAvgTestLoss;
        loss_row.value = value;
        rows.push_back(std::move(loss_row));

        MetricRow flip_row = base;
        flip_row.estimator = est;
        flip_row.metric_name = kMetricFlipRate;
        flip_row.value = value < a_truth ? 1.0 : 0.0;
        rows.push_back(std::move(flip_row));
      }
    }
    return rows;
  };

  std::vector<MetricRow> rows = parallel_reps(opts.repetitions, opts.threads, body);
  sort_rows(rows);
  return rows;
}

// ---------------------------------------------------------------------------
// E2

std::vector<MetricRow> run_E2_batch_ranking_clean_test(const ScenarioConfig& cfg,
                                                       const RunOptions& opts) {
  cfg.validate();
  reject_case_y_classification(cfg);
  const int reps = scenario_reps(cfg, opts);
  const std::vector<double> r_grid = r_grid_of(cfg, opts);
  std::vector<CvScheme> schemes = opts.cv_schemes;
  if (schemes.empty())
    schemes = {CvScheme{CvScheme::Kind::randomized, 10, cfg.n_sub},
               CvScheme{CvScheme::Kind::randomized, 100, cfg.n_sub},
               CvScheme{CvScheme::Kind::kfold, 5, 0},
               CvScheme{CvScheme::Kind::kfold, 10, 0}};

  std::vector<MetricRow> rows;
  for (double r : r_grid) {
    const std::string sid = scenario_sid(cfg, r, 0.0);
    const auto body = [&, r](int v) {
      std::vector<MetricRow> out;
      const RepData rep =
          make_rep_data(cfg, sid, opts.master_seed, v, r, 0.0, opts.budget);
      const FitterPair pair = make_fitter_pair(cfg, opts.budget, rep.lambda);
      const MetricRow base = base_row(cfg, sid, r, 0.0, v);

      for (const CvScheme& raw_scheme : schemes) {
        const CvScheme scheme = with_subset_size(raw_scheme, cfg.n_sub);
        std::vector<std::vector<int>> batches;
        {
          RngStream rng = RngStream::derive(opts.master_seed, sid, v,
                                            "batches/" + scheme.label());
          batches = make_batches(cfg.n, scheme, rng);
        }
        if (scheme.kind == CvScheme::Kind::kfold)
          batches = complement_batches(batches, cfg.n);

        const BatchFits fits =
            fit_batches(batches, rep.train.X, rep.train.y, pair, opts.master_seed, sid,
                        v, "fit/" + scheme.label());
        const RankVector truth = true_batch_ranking(batches, rep.train.contaminated);

        std::vector<StrategyScores> strategies =
            train_side_scores(batches, rep.train.X, rep.train.y, fits, pair, 0.5);
        const std::vector<StrategyScores> test_strats =
            test_side_scores(fits, pair, rep.test.X, rep.test.y, 0.5, "");
        strategies.insert(strategies.end(), test_strats.begin(), test_strats.end());

        emit_hard_ranking_rows(out, base, scheme.label(), strategies, truth, "");
      }
      return out;
    };
    std::vector<MetricRow> grid_rows = parallel_reps(reps, opts.threads, body);
    rows.insert(rows.end(), grid_rows.begin(), grid_rows.end());
  }
  sort_rows(rows);
  return rows;
}

// ---------------------------------------------------------------------------
// E3

std::vector<MetricRow> run_E3_batch_ranking_post_loo_trim(const ScenarioConfig& cfg,
                                                          const RunOptions& opts) {
  cfg.validate();
  reject_case_y_classification(cfg);
  const int reps = scenario_reps(cfg, opts);
  const std::vector<double> r_grid = r_grid_of(cfg, opts);
  std::vector<CvScheme> schemes = opts.cv_schemes;
  if (schemes.empty())
    schemes = {CvScheme{CvScheme::Kind::kfold, 5, 0},
               CvScheme{CvScheme::Kind::kfold, 10, 0}};
  for (const CvScheme& s : schemes)
    if (s.kind != CvScheme::Kind::kfold)
      throw std::invalid_argument("run_E3: post-LOO batch ranking uses k-fold CV only");

  std::vector<MetricRow> rows;
  for (double r : r_grid) {
    const std::string sid = scenario_sid(cfg, r, 0.0);
    const auto body = [&, r](int v) {
      std::vector<MetricRow> out;
      const RepData rep =
          make_rep_data(cfg, sid, opts.master_seed, v, r, 0.0, opts.budget);
      const FitterPair pair = make_fitter_pair(cfg, opts.budget, rep.lambda);
      const MetricRow base = base_row(cfg, sid, r, 0.0, v);

      for (int robust_base = 0; robust_base < 2; ++robust_base) {
        const Fitter& trim_base = robust_base ? pair.robust : pair.classical;
        std::vector<int> kept;
        {
          RngStream rng =
              RngStream::derive(opts.master_seed, sid, v, "loo/" + trim_base.name);
          const TrimReport trim =
              loo_trim_training(rep.train.X, rep.train.y, r, trim_base, rng);
          kept = trim.kept;
        }
        const Eigen::MatrixXd Xk = rows_of(rep.train.X, kept);
        const Eigen::VectorXd yk = elems_of(rep.train.y, kept);
        const std::vector<std::uint8_t> flags_k = flags_of(rep.train.contaminated, kept);
        const int nk = static_cast<int>(kept.size());
        const std::string suffix = "/loobase=" + trim_base.name;

        for (const CvScheme& scheme : schemes) {
          std::vector<std::vector<int>> batches;
          {
            RngStream rng = RngStream::derive(opts.master_seed, sid, v,
                                              "batches/" + scheme.label());
            batches = make_batches(nk, scheme, rng);
          }
          batches = complement_batches(batches, nk);

          const BatchFits fits = fit_batches(batches, Xk, yk, pair, opts.master_seed,
                                             sid, v, "fit/" + scheme.label());
          const RankVector truth = true_batch_ranking(batches, flags_k);

          std::vector<StrategyScores> strategies =
              train_side_scores(batches, Xk, yk, fits, pair, 0.5);
          const std::vector<StrategyScores> test_strats =
              test_side_scores(fits, pair, rep.test.X, rep.test.y, 0.5, "");
          strategies.insert(strategies.end(), test_strats.begin(), test_strats.end());

          emit_hard_ranking_rows(out, base, scheme.label(), strategies, truth, suffix);
        }
      }
      return out;
    };
    std::vector<MetricRow> grid_rows = parallel_reps(reps, opts.threads, body);
    rows.insert(rows.end(), grid_rows.begin(), grid_rows.end());
  }
  sort_rows(rows);
  return rows;
}

// ---------------------------------------------------------------------------
// E4

std::vector<MetricRow> run_E4_batch_ranking_contaminated_test(const ScenarioConfig& cfg,
                                                              const RunOptions& opts) {
  cfg.validate();
  reject_case_y_classification(cfg);
  const int reps = scenario_reps(cfg, opts);
  const std::vector<double> r_grid =
      opts.r_grid.empty() ? std::vector<double>{0.1, 0.25, 0.5} : opts.r_grid;
  const std::vector<double> r_val_grid =
      opts.r_val_grid.empty() ? std::vector<double>{0.1, 0.25, 0.5} : opts.r_val_grid;
  std::vector<CvScheme> schemes = opts.cv_schemes;
  if (schemes.empty())
    schemes = {CvScheme{CvScheme::Kind::randomized, 10, cfg.n_sub},
               CvScheme{CvScheme::Kind::randomized, 100, cfg.n_sub}};
  for (const CvScheme& s : schemes)
    if (s.kind != CvScheme::Kind::randomized)
      throw std::invalid_argument("run_E4: contaminated-test ranking uses randomized CV only");

  std::vector<MetricRow> rows;
  for (double r : r_grid) {
    for (double r_val : r_val_grid) {
      const std::string sid = scenario_sid(cfg, r, r_val);
      const auto body = [&, r, r_val](int v) {
        std::vector<MetricRow> out;
        const RepData rep =
            make_rep_data(cfg, sid, opts.master_seed, v, r, r_val, opts.budget);
        const FitterPair pair = make_fitter_pair(cfg, opts.budget, rep.lambda);
        const MetricRow base = base_row(cfg, sid, r, r_val, v);

        // Clean the test set under a model trained on the full training data.
        struct CleanedTest {
          std::string cleaner;
          Eigen::MatrixXd X;
          Eigen::VectorXd y;
        };
        std::vector<CleanedTest> cleaned;
        for (int robust_cleaner = 0; robust_cleaner < 2; ++robust_cleaner) {
          const Fitter& cleaner = robust_cleaner ? pair.robust : pair.classical;
          RngStream rng =
              RngStream::derive(opts.master_seed, sid, v, "fit/full/" + cleaner.name);
          const FitResult full = cleaner.fit(rep.train.X, rep.train.y, rng);
          const TrimReport trim =
              trim_test_instances(rep.test.X, rep.test.y, full, cfg.task, r_val);
          cleaned.push_back({cleaner.name, rows_of(rep.test.X, trim.kept),
                             elems_of(rep.test.y, trim.kept)});
        }

        for (const CvScheme& raw_scheme : schemes) {
          const CvScheme scheme = with_subset_size(raw_scheme, cfg.n_sub);
          std::vector<std::vector<int>> batches;
          {
            RngStream rng = RngStream::derive(opts.master_seed, sid, v,
                                              "batches/" + scheme.label());
            batches = make_batches(cfg.n, scheme, rng);
          }
          const BatchFits fits =
              fit_batches(batches, rep.train.X, rep.train.y, pair, opts.master_seed,
                          sid, v, "fit/" + scheme.label());
          const RankVector truth = true_batch_ranking(batches, rep.train.contaminated);

          // Train-side scores do not depend on the cleaning model.
          const std::vector<StrategyScores> train_strats =
              train_side_scores(batches, rep.train.X, rep.train.y, fits, pair, 0.5);
          emit_hard_ranking_rows(out, base, scheme.label(), train_strats, truth,
                                 "/cleaner=none");

          for (const CleanedTest& ct : cleaned) {
            const std::vector<StrategyScores> test_strats =
                test_side_scores(fits, pair, ct.X, ct.y, 0.5, "");
            emit_hard_ranking_rows(out, base, scheme.label(), test_strats, truth,
                                   "/cleaner=" + ct.cleaner);
          }
        }
        return out;
      };
      std::vector<MetricRow> cell_rows = parallel_reps(reps, opts.threads, body);
      rows.insert(rows.end(), cell_rows.begin(), cell_rows.end());
    }
  }
  sort_rows(rows);
  return rows;
}

// ---------------------------------------------------------------------------
// E5

namespace {

void emit_instance_id_rows(std::vector<MetricRow>& out, const MetricRow& base,
                           const std::string& strategy, const std::string& estimator,
                           const Dataset& train,
                           const std::vector<double>* train_scores,
                           const Dataset& test, const std::vector<double>& test_scores) {
  // Training identification (omitted when the realized outlier count is 0).
  if (train_scores != nullptr) {
    const int m_train = train.contaminated_count();
    if (m_train > 0) {
      const RankVector predicted = ranks_descending(*train_scores);
      MetricRow row = base;
      row.estimator = estimator;
      row.strategy = strategy;
      row.cv_scheme = "none";
      row.metric_name = kMetricWeakRankingErrorTrain;
      row.value = weak_ranking_error(flagged_indices(train.contaminated), predicted,
                                     m_train);
      out.push_back(std::move(row));
    }
  }
  const int m_test = test.contaminated_count();
  if (m_test > 0) {
    const RankVector predicted = ranks_descending(test_scores);
    const double weak = weak_ranking_error(flagged_indices(test.contaminated),
                                           predicted, m_test);
    MetricRow row = base;
    row.estimator = estimator;
    row.strategy = strategy;
    row.cv_scheme = "none";
    row.metric_name = kMetricWeakRankingErrorTest;
    row.value = weak;
    out.push_back(row);

    row.metric_name = kMetricEmpiricalBdp;  // per-repetition indicator
    row.value = weak > 0.0 ? 1.0 : 0.0;
    out.push_back(std::move(row));
  }
}

}  // namespace

std::vector<MetricRow> run_E5_instance_identification(const ScenarioConfig& cfg,
                                                      const RunOptions& opts) {
  cfg.validate();
  reject_case_y_classification(cfg);
  const int reps = scenario_reps(cfg, opts);
  const std::vector<double> r_grid = r_grid_of(cfg, opts);
  const std::vector<double> r_val_grid =
      opts.r_val_grid.empty() ? std::vector<double>{0.1, 0.25, 0.5} : opts.r_val_grid;

  std::vector<MetricRow> rows;
  for (double r : r_grid) {
    for (double r_val : r_val_grid) {
      const std::string sid = scenario_sid(cfg, r, r_val);
      const auto body = [&, r, r_val](int v) {
        std::vector<MetricRow> out;
        const RepData rep =
            make_rep_data(cfg, sid, opts.master_seed, v, r, r_val, opts.budget);
        const FitterPair pair = make_fitter_pair(cfg, opts.budget, rep.lambda);
        const MetricRow base = base_row(cfg, sid, r, r_val, v);

        for (int robust_scorer = 0; robust_scorer < 2; ++robust_scorer) {
          const Fitter& scorer = robust_scorer ? pair.robust : pair.classical;

          std::vector<double> train_scores;
          {
            RngStream rng =
                RngStream::derive(opts.master_seed, sid, v, "loo/" + scorer.name);
            train_scores = scorer.loo_scores
                               ? scorer.loo_scores(rep.train.X, rep.train.y, rng)
                               : loo_scores_by_refit(rep.train.X, rep.train.y, scorer, rng);
          }

          std::vector<double> test_scores;
          {
            RngStream rng = RngStream::derive(opts.master_seed, sid, v,
                                              "fit/full/" + scorer.name);
            const FitResult full = scorer.fit(rep.train.X, rep.train.y, rng);
            test_scores = pointwise_losses(cfg.task, full, rep.test.X, rep.test.y);
          }

          emit_instance_id_rows(out, base, "score=" + scorer.name, scorer.name,
                                rep.train, &train_scores, rep.test, test_scores);
        }
        return out;
      };
      std::vector<MetricRow> cell_rows = parallel_reps(reps, opts.threads, body);
      rows.insert(rows.end(), cell_rows.begin(), cell_rows.end());
    }
  }
  sort_rows(rows);
  return rows;
}

// ---------------------------------------------------------------------------
// E6

std::vector<MetricRow> run_E6_instance_identification_post_trim(
    const ScenarioConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  reject_case_y_classification(cfg);
  const int reps = scenario_reps(cfg, opts);
  const std::vector<double> r_grid = r_grid_of(cfg, opts);
  const std::vector<double> r_val_grid =
      opts.r_val_grid.empty() ? std::vector<double>{0.1, 0.25, 0.5} : opts.r_val_grid;

  std::vector<MetricRow> rows;
  for (double r : r_grid) {
    for (double r_val : r_val_grid) {
      const std::string sid = scenario_sid(cfg, r, r_val);
      const auto body = [&, r, r_val](int v) {
        std::vector<MetricRow> out;
        const RepData rep =
            make_rep_data(cfg, sid, opts.master_seed, v, r, r_val, opts.budget);
        const FitterPair pair = make_fitter_pair(cfg, opts.budget, rep.lambda);
        const MetricRow base = base_row(cfg, sid, r, r_val, v);

        for (int robust_base = 0; robust_base < 2; ++robust_base) {
          const Fitter& trim_base = robust_base ? pair.robust : pair.classical;
          std::vector<int> kept;
          {
            RngStream rng =
                RngStream::derive(opts.master_seed, sid, v, "loo/" + trim_base.name);
            const TrimReport trim =
                loo_trim_training(rep.train.X, rep.train.y, r, trim_base, rng);
            kept = trim.kept;
          }
          const Eigen::MatrixXd Xk = rows_of(rep.train.X, kept);
          const Eigen::VectorXd yk = elems_of(rep.train.y, kept);

          for (int robust_scorer = 0; robust_scorer < 2; ++robust_scorer) {
            const Fitter& scorer = robust_scorer ? pair.robust : pair.classical;
            RngStream rng = RngStream::derive(opts.master_seed, sid, v,
                                              "fit/full/" + scorer.name);
            const FitResult refit = scorer.fit(Xk, yk, rng);
            const std::vector<double> test_scores =
                pointwise_losses(cfg.task, refit, rep.test.X, rep.test.y);
            emit_instance_id_rows(out, base,
                                  "trim=" + trim_base.name + "/score=" + scorer.name,
                                  scorer.name, rep.train, nullptr, rep.test,
                                  test_scores);
          }
        }
        return out;
      };
      std::vector<MetricRow> cell_rows = parallel_reps(reps, opts.threads, body);
      rows.insert(rows.end(), cell_rows.begin(), cell_rows.end());
    }
  }
  sort_rows(rows);
  return rows;
}

}  // namespace robustval
