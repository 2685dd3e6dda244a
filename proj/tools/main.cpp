// Command-line harness: dataset generation, single fits, experiment runners,
// report rendering and breakdown-point calculators.

#include <CLI11.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "robustval/bdp.hpp"
#include "robustval/datagen.hpp"
#include "robustval/errors.hpp"
#include "robustval/estimators.hpp"
#include "robustval/experiments.hpp"
#include "robustval/io.hpp"
#include "robustval/losses.hpp"

namespace rv = robustval;

namespace {

std::string shortest_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return rv::format_double17(v);
  return std::string(buf, ptr);
}

std::string sanitize_filename(const std::string& s) {
  std::string out;
  for (char c : s)
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
  return out;
}

struct GenArgs {
  std::string preset = "reg-p20";
  int size = 0;  // 0: preset n
  double r = 0.0;
  std::string contam;
  std::uint64_t seed = 7;
  std::string out;
};

int cmd_gen(const GenArgs& args) {
  rv::ScenarioConfig cfg = rv::preset(args.preset);
  if (!args.contam.empty()) cfg.contam_scheme = rv::contam_scheme_from_string(args.contam);
  const int size = args.size > 0 ? args.size : cfg.n;
  const std::string sid = args.preset + "/gen";
  rv::RngStream data_rng = rv::RngStream::derive(args.seed, sid, 0, "train");
  rv::Dataset data = rv::gen_dataset(cfg, data_rng, size);
  if (args.r > 0.0) {
    rv::RngStream contam_rng = rv::RngStream::derive(args.seed, sid, 0, "contam_train");
    data = rv::inject_contamination(data, cfg.contam_scheme, args.r, cfg.gross_value,
                                    contam_rng);
  }
  if (args.out.empty()) {
    rv::write_dataset_csv(data, std::cout);
  } else {
    rv::write_dataset_csv(data, args.out);
    std::cerr << "wrote " << data.n() << " rows, " << (data.p() + 2) << " columns to "
              << args.out << "\n";
  }
  return 0;
}

struct FitArgs {
  std::string input;
  std::string estimator = "ols";
  double alpha = 0.5;
  double lambda = 0.1;
  int starts = 500;
  std::uint64_t seed = 1;
};

int cmd_fit(const FitArgs& args) {
  const rv::Dataset data = rv::read_dataset_csv(args.input);
  rv::RngStream rng = rv::RngStream::derive(args.seed, "fit", 0, args.estimator);
  rv::FitResult fit;
  if (args.estimator == "ols") {
    fit = rv::fit_ols(data.X, data.y);
  } else if (args.estimator == "lts") {
    fit = rv::fit_lts(data.X, data.y, args.alpha, args.starts, rng);
  } else if (args.estimator == "lasso") {
    fit = rv::fit_lasso(data.X, data.y, args.lambda);
  } else if (args.estimator == "slts") {
    fit = rv::fit_sparse_lts(data.X, data.y, args.alpha, args.lambda, args.starts, rng);
  } else if (args.estimator == "logit") {
    fit = rv::fit_logistic(data.X, data.y);
  } else if (args.estimator == "tlogit") {
    fit = rv::fit_trimmed_logistic(data.X, data.y, args.alpha, args.starts, rng);
  } else if (args.estimator == "l1_logit") {
    fit = rv::fit_l1_logistic(data.X, data.y, args.lambda);
  } else {
    throw std::invalid_argument("fit: unknown estimator '" + args.estimator + "'");
  }

  std::cout << "estimator: " << args.estimator << "\n";
  std::cout << "converged: " << (fit.converged ? "true" : "false") << "\n";
  std::cout << "iterations: " << fit.iterations << "\n";
  std::cout << "objective: " << rv::format_double17(fit.objective) << "\n";
  std::cout << "intercept: " << rv::format_double17(fit.intercept) << "\n";
  std::cout << "beta:";
  for (int j = 0; j < fit.beta.size(); ++j)
    std::cout << (j == 0 ? " " : ",") << rv::format_double17(fit.beta[j]);
  std::cout << "\n";
  if (fit.subset.has_value()) {
    std::cout << "subset_size: " << fit.subset->size() << "\n";
    std::cout << "subset:";
    for (std::size_t k = 0; k < fit.subset->size(); ++k)
      std::cout << (k == 0 ? " " : ",") << (*fit.subset)[k];
    std::cout << "\n";
  }
  return 0;
}

struct RunArgs {
  std::string experiment;
  std::string config_path;
  int n_val_cap = 100000;
  // flags that were explicitly given override config-file values
  bool has_preset = false, has_seed = false, has_out = false, has_reps = false,
       has_threads = false, has_snr = false, has_mu = false, has_contam = false,
       has_lambda = false, has_gross = false, has_r = false, has_rval = false,
       has_cv = false;
  std::string preset;
  std::uint64_t seed = 42;
  std::string out;
  int reps = 0;
  int threads = 1;
  double snr = 0.0, mu = 0.0, lambda = 0.0, gross = 50.0;
  std::string contam;
  std::vector<double> r_grid, r_val_grid;
  std::vector<std::string> cv_labels;
};

int cmd_run(const RunArgs& args) {
  rv::RunConfig config;
  if (!args.config_path.empty()) config = rv::parse_config_file(args.config_path);
  if (args.has_preset) config.preset = args.preset;
  if (args.has_seed) config.master_seed = args.seed;
  if (args.has_out) config.out = args.out;
  if (args.has_reps) config.repetitions = args.reps;
  if (args.has_threads) config.threads = args.threads;
  if (args.has_snr) config.snr = args.snr;
  if (args.has_mu) config.mu = args.mu;
  if (args.has_contam) config.contam = args.contam;
  if (args.has_lambda) config.lambda = args.lambda;
  if (args.has_gross) config.gross = args.gross;
  if (args.has_r) config.r_grid = args.r_grid;
  if (args.has_rval) config.r_val_grid = args.r_val_grid;
  if (args.has_cv) config.cv_labels = args.cv_labels;

  std::vector<rv::MetricRow> rows;
  if (args.experiment == "E0") {
    rows = rv::run_E0_fluctuation(config.master_seed, args.n_val_cap);
  } else if (args.experiment == "E1") {
    rv::E1Options opts;
    if (config.repetitions > 0) opts.repetitions = config.repetitions;
    opts.threads = config.threads;
    rows = rv::run_E1_cauchy(config.master_seed, opts);
  } else {
    const rv::ScenarioConfig cfg = rv::scenario_from_config(config);
    rv::RunOptions opts;
    opts.master_seed = config.master_seed;
    opts.repetitions = config.repetitions;
    opts.threads = config.threads;
    opts.r_grid = config.r_grid;
    opts.r_val_grid = config.r_val_grid;
    if (config.lambda.has_value()) opts.budget.lambda = *config.lambda;
    for (const std::string& label : config.cv_labels)
      opts.cv_schemes.push_back(rv::parse_cv_label(label, cfg.n_sub));

    if (args.experiment == "E2")
      rows = rv::run_E2_batch_ranking_clean_test(cfg, opts);
    else if (args.experiment == "E3")
      rows = rv::run_E3_batch_ranking_post_loo_trim(cfg, opts);
    else if (args.experiment == "E4")
      rows = rv::run_E4_batch_ranking_contaminated_test(cfg, opts);
    else if (args.experiment == "E5")
      rows = rv::run_E5_instance_identification(cfg, opts);
    else
      rows = rv::run_E6_instance_identification_post_trim(cfg, opts);
  }

  const std::string out_path =
      config.out.empty() ? "metrics_" + args.experiment + ".csv" : config.out;
  rv::write_metrics_csv(rows, out_path);
  std::cerr << "wrote " << rows.size() << " rows to " << out_path << "\n";
  return 0;
}

struct ReportArgs {
  std::string input;
  std::string out_dir = "report";
  std::string x_field = "r";
};

int cmd_report(const ReportArgs& args) {
  const std::vector<rv::MetricRow> rows = rv::read_metrics_csv(args.input);
  if (rows.empty())
    throw std::invalid_argument("report: '" + args.input + "' holds no metric rows");
  std::filesystem::create_directories(args.out_dir);

  const std::vector<rv::SummaryRow> summary = rv::summarize_metrics(rows, args.x_field);
  {
    std::ofstream out(args.out_dir + "/summary.csv");
    if (!out) throw std::invalid_argument("cannot open summary.csv for writing");
    rv::write_summary_csv(summary, args.x_field, out);
  }
  int charts = 0;
  for (const rv::ChartFacet& facet : rv::build_report_facets(summary, args.x_field)) {
    const std::string path =
        args.out_dir + "/chart_" + sanitize_filename(facet.name) + ".svg";
    rv::render_chart(facet, path);
    ++charts;
  }
  std::cerr << "wrote summary.csv and " << charts << " charts to " << args.out_dir
            << "\n";
  return 0;
}

struct BdpArgs {
  bool empirical = false;
  bool demonstrate = false;
  double c = 1.0;
  int k = 1;
  int n_test = 100;
  int batches = 0;
  int n_val = 0;
  double gross = 1e6;
  double model_t = 0.0;
  double model_x = 1.0;
  std::string loss = "squared";
};

int cmd_bdp(const BdpArgs& args) {
  if (args.empirical == args.demonstrate)
    throw std::invalid_argument("bdp: pass exactly one of --empirical / --demonstrate");
  if (args.empirical) {
    const rv::BdpRecord rec =
        args.batches > 0
            ? rv::empirical_bdp_resampled(args.c, args.n_val > 0 ? args.n_val : args.n_test,
                                          args.k, args.batches)
            : rv::empirical_bdp(args.c, args.n_test, args.k);
    std::cout << shortest_double(rec.empirical_bdp) << "\n";
    std::cerr << "c=" << shortest_double(rec.per_eval_bdp) << " k=" << rec.arity
              << " evaluations=" << rec.n_eval << "\n";
    return 0;
  }
  rv::ActionLoss loss;
  if (args.loss == "squared")
    loss = rv::squared_action_loss();
  else if (args.loss == "arctan")
    loss = rv::arctan_squared_action_loss();
  else
    throw std::invalid_argument("bdp: unknown loss '" + args.loss +
                                "' (expected squared or arctan)");
  const int flips = rv::demonstrate_breakdown(args.n_test, args.gross, args.model_t,
                                              args.model_x, loss);
  std::cout << flips << "\n";
  std::cerr << "empirical BDP upper bound: "
            << shortest_double(static_cast<double>(flips) /
                               static_cast<double>(args.n_test + flips))
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contamination-aware model validation: robust fits, trimmed "
               "aggregation, ranking evaluation and the empirical breakdown point "
               "of elicitability."};
  app.require_subcommand(1);

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen", "Generate a dataset CSV");
  gen->add_option("--preset", gen_args.preset, "Scenario preset")->capture_default_str();
  gen->add_option("--size", gen_args.size, "Rows to generate (default: preset n)");
  gen->add_option("--r", gen_args.r, "Training contamination radius")->capture_default_str();
  gen->add_option("--contam", gen_args.contam, "case_y or cell_x (default: preset)");
  gen->add_option("--seed", gen_args.seed, "Master seed")->capture_default_str();
  gen->add_option("--out", gen_args.out, "Output path (default: stdout)");

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "Fit one estimator on a dataset CSV");
  fit->add_option("--input", fit_args.input, "Dataset CSV")->required();
  fit->add_option("--estimator", fit_args.estimator,
                  "ols | lts | lasso | slts | logit | tlogit | l1_logit")
      ->capture_default_str();
  fit->add_option("--alpha", fit_args.alpha, "Trimming rate")->capture_default_str();
  fit->add_option("--lambda", fit_args.lambda, "L1 penalty")->capture_default_str();
  fit->add_option("--starts", fit_args.starts, "C-step starts")->capture_default_str();
  fit->add_option("--seed", fit_args.seed, "Seed for subset starts")->capture_default_str();

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Execute an experiment runner (E0..E6)");
  run->add_option("experiment", run_args.experiment, "E0..E6")
      ->required()
      ->check(CLI::IsMember({"E0", "E1", "E2", "E3", "E4", "E5", "E6"}));
  run->add_option("--config", run_args.config_path, "key=value or JSON config file");
  auto* opt_preset = run->add_option("--preset", run_args.preset, "Scenario preset");
  auto* opt_seed = run->add_option("--seed", run_args.seed, "Master seed");
  auto* opt_out = run->add_option("--out", run_args.out, "Metrics CSV path");
  auto* opt_reps = run->add_option("--reps", run_args.reps, "Repetitions V");
  auto* opt_threads = run->add_option("--threads", run_args.threads,
                                      "Worker threads (capped by ROBUST_ELICIT_THREADS)");
  auto* opt_snr = run->add_option("--snr", run_args.snr, "Regression SNR");
  auto* opt_mu = run->add_option("--mu", run_args.mu, "Predictor mean / signal level");
  auto* opt_contam = run->add_option("--contam", run_args.contam, "case_y or cell_x");
  auto* opt_lambda = run->add_option("--lambda", run_args.lambda, "Fixed L1 penalty");
  auto* opt_gross = run->add_option("--gross", run_args.gross, "Gross outlier value");
  auto* opt_r = run->add_option("--r", run_args.r_grid, "Contamination radius grid");
  auto* opt_rval = run->add_option("--rval", run_args.r_val_grid, "Test radius grid");
  auto* opt_cv = run->add_option("--cv", run_args.cv_labels, "CV schemes, e.g. rand10 kfold5");
  run->add_option("--nval-cap", run_args.n_val_cap, "E0 n_val cap")->capture_default_str();

  ReportArgs report_args;
  auto* report =
      app.add_subcommand("report", "Aggregate a metrics CSV into means and SVG charts");
  report->add_option("--input", report_args.input, "Metrics CSV")->required();
  report->add_option("--out-dir", report_args.out_dir, "Output directory")->capture_default_str();
  report->add_option("--x", report_args.x_field, "x field: r, r_val or snr_or_mu")
      ->capture_default_str();

  BdpArgs bdp_args;
  auto* bdp = app.add_subcommand("bdp", "Breakdown-point calculators");
  bdp->add_flag("--empirical", bdp_args.empirical, "Empirical BDP c / c(n_test, k)");
  bdp->add_flag("--demonstrate", bdp_args.demonstrate, "Constructive breakdown flip count");
  bdp->add_option("--c", bdp_args.c, "Per-evaluation BDP of the loss")->capture_default_str();
  bdp->add_option("--k", bdp_args.k, "Loss arity")->capture_default_str();
  bdp->add_option("--n-test", bdp_args.n_test, "Test set size")->capture_default_str();
  bdp->add_option("--batches", bdp_args.batches, "Resampled validation: batch count");
  bdp->add_option("--n-val", bdp_args.n_val, "Resampled validation: batch size");
  bdp->add_option("--gross", bdp_args.gross, "Gross value for crafted instances")
      ->capture_default_str();
  bdp->add_option("--model-t", bdp_args.model_t, "True functional value")->capture_default_str();
  bdp->add_option("--model-x", bdp_args.model_x, "Competitor action")->capture_default_str();
  bdp->add_option("--loss", bdp_args.loss, "squared or arctan")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_args);
    if (fit->parsed()) return cmd_fit(fit_args);
    if (run->parsed()) {
      run_args.has_preset = opt_preset->count() > 0;
      run_args.has_seed = opt_seed->count() > 0;
      run_args.has_out = opt_out->count() > 0;
      run_args.has_reps = opt_reps->count() > 0;
      run_args.has_threads = opt_threads->count() > 0;
      run_args.has_snr = opt_snr->count() > 0;
      run_args.has_mu = opt_mu->count() > 0;
      run_args.has_contam = opt_contam->count() > 0;
      run_args.has_lambda = opt_lambda->count() > 0;
      run_args.has_gross = opt_gross->count() > 0;
      run_args.has_r = opt_r->count() > 0;
      run_args.has_rval = opt_rval->count() > 0;
      run_args.has_cv = opt_cv->count() > 0;
      return cmd_run(run_args);
    }
    if (report->parsed()) return cmd_report(report_args);
    if (bdp->parsed()) return cmd_bdp(bdp_args);
  } catch (const rv::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
