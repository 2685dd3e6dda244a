#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "robustval/rng.hpp"

namespace robustval {

enum class Task { regression, classification };
enum class ContamScheme { case_y, cell_x };

std::string to_string(Task t);
std::string to_string(ContamScheme s);
Task task_from_string(const std::string& s);
ContamScheme contam_scheme_from_string(const std::string& s);

struct CvScheme {
  enum class Kind { randomized, kfold };
  Kind kind = Kind::randomized;
  int count = 10;        // B batches or K folds
  int subset_size = 0;   // n_sub; randomized mode only
  std::string label() const;  // "rand10", "kfold5", ...
};

// One scenario row: dimensions and default knobs. Grids over r and SNR/mu
// live in the presets and are iterated by the experiment runners.
struct ScenarioConfig {
  std::string id;
  Task task = Task::regression;
  int p = 20;
  int n = 250;
  int n_test = 100;
  int n_sub = 125;
  int s0 = 20;
  double mu = 2.0;
  std::optional<double> snr;  // regression only
  double r = 0.0;
  double r_val = 0.0;
  ContamScheme contam_scheme = ContamScheme::case_y;
  int repetitions = 50;
  CvScheme cv{CvScheme::Kind::randomized, 10, 125};
  double gross_value = 50.0;

  void validate() const;  // throws std::invalid_argument on bad fields
};

std::vector<std::string> preset_names();
ScenarioConfig preset(const std::string& name);
std::vector<double> preset_snr_or_mu_grid(const std::string& name);
std::vector<double> preset_r_grid(const std::string& name);

struct Dataset {
  Eigen::MatrixXd X;  // n x p
  Eigen::VectorXd y;  // regression: real; classification: {0,1}
  std::vector<std::uint8_t> contaminated;
  Eigen::VectorXd beta_true;
  double sigma = 0.0;  // regression noise sd

  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }
  int contaminated_count() const;
};

// Coefficient vector plus noise level; shared between the training set and
// every test set of one repetition.
struct LinearModel {
  Eigen::VectorXd beta;
  double sigma = 0.0;
};

// beta has exactly s0 non-zero entries at uniformly chosen positions with
// N(1,1) values; sigma^2 = ||beta||^2 / SNR (theoretical predictor
// covariance I_p). sigma is 0 when SNR is absent (classification).
LinearModel draw_model(const ScenarioConfig& cfg, RngStream& rng);

Dataset gen_regression(const ScenarioConfig& cfg, RngStream& rng, int size);
Dataset gen_regression_from(const LinearModel& model, const ScenarioConfig& cfg,
                            RngStream& rng, int size);

// Logits X*beta are centered by their own sample mean before the Bernoulli
// draw, which balances the classes.
Dataset gen_classification(const ScenarioConfig& cfg, RngStream& rng, int size);
Dataset gen_classification_from(const LinearModel& model, const ScenarioConfig& cfg,
                                RngStream& rng, int size);

Dataset gen_dataset(const ScenarioConfig& cfg, RngStream& rng, int size);
Dataset gen_dataset_from(const LinearModel& model, const ScenarioConfig& cfg,
                         RngStream& rng, int size);

// Value semantics: returns a modified copy, flags exactly the touched rows.
// case_y replaces Binomial(n, r) responses by gross_value; cell_x replaces
// floor(0.1 p) cells in each of floor(r n) rows (rejected when floor(0.1 p)
// would be 0, since no cell would change).
Dataset inject_contamination(const Dataset& data, ContamScheme scheme, double r,
                             double gross_value, RngStream& rng);

// Regression with mixture noise: each error is standard Cauchy with
// probability mix (instance flagged) and N(0,1) otherwise. Predictors are
// N_p(2*1, I), all p coefficients N(1,1).
Dataset gen_cauchy_mixture_regression(int n, int p, double mix, RngStream& rng);
Dataset gen_cauchy_mixture_from(const Eigen::VectorXd& beta, int n, double mix,
                                RngStream& rng);

// CSV schema: header "x1,..,xp,y,contaminated", 17-significant-digit floats.
void write_dataset_csv(const Dataset& data, std::ostream& out);
void write_dataset_csv(const Dataset& data, const std::string& path);
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::string& path);

}  // namespace robustval
