#include "robustval/datagen.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "robustval/errors.hpp"

namespace robustval {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(std::string_view field, const char* what) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw std::invalid_argument(std::string("dataset CSV: bad ") + what + " field '" +
                                std::string(field) + "'");
  return v;
}

}  // namespace

std::string to_string(Task t) {
  return t == Task::regression ? "regression" : "classification";
}

std::string to_string(ContamScheme s) {
  return s == ContamScheme::case_y ? "case_y" : "cell_x";
}

Task task_from_string(const std::string& s) {
  if (s == "regression") return Task::regression;
  if (s == "classification") return Task::classification;
  throw std::invalid_argument("unknown task '" + s + "'");
}

ContamScheme contam_scheme_from_string(const std::string& s) {
  if (s == "case_y") return ContamScheme::case_y;
  if (s == "cell_x") return ContamScheme::cell_x;
  throw std::invalid_argument("unknown contamination scheme '" + s + "'");
}

std::string CvScheme::label() const {
  return (kind == Kind::randomized ? "rand" : "kfold") + std::to_string(count);
}

void ScenarioConfig::validate() const {
  if (p <= 0 || n <= 0 || n_test <= 0) throw std::invalid_argument("scenario: dimensions must be positive");
  if (s0 < 0 || s0 > p) throw std::invalid_argument("scenario: need 0 <= s0 <= p");
  if (n_sub <= 0 || n_sub > n) throw std::invalid_argument("scenario: need 0 < n_sub <= n");
  if (!(r >= 0.0 && r < 1.0)) throw std::invalid_argument("scenario: need 0 <= r < 1");
  if (!(r_val >= 0.0 && r_val < 1.0)) throw std::invalid_argument("scenario: need 0 <= r_val < 1");
  if (task == Task::regression && snr.has_value() && !(*snr > 0.0))
    throw std::invalid_argument("scenario: snr must be > 0");
  if (repetitions <= 0) throw std::invalid_argument("scenario: repetitions must be > 0");
}

std::vector<std::string> preset_names() {
  return {"reg-p20", "reg-p250", "reg-p500", "cls-p20", "cls-p250", "cls-p500"};
}

ScenarioConfig preset(const std::string& name) {
  ScenarioConfig cfg;
  cfg.id = name;
  if (name == "reg-p20") {
    cfg.task = Task::regression;
    cfg.p = 20; cfg.n = 250; cfg.n_test = 100; cfg.n_sub = 125; cfg.s0 = 20;
    cfg.mu = 2.0; cfg.snr = 5.0;
  } else if (name == "reg-p250") {
    cfg.task = Task::regression;
    cfg.p = 250; cfg.n = 100; cfg.n_test = 50; cfg.n_sub = 50; cfg.s0 = 15;
    cfg.mu = 2.0; cfg.snr = 5.0;
  } else if (name == "reg-p500") {
    cfg.task = Task::regression;
    cfg.p = 500; cfg.n = 100; cfg.n_test = 50; cfg.n_sub = 50; cfg.s0 = 15;
    cfg.mu = 2.0; cfg.snr = 5.0;
  } else if (name == "cls-p20") {
    cfg.task = Task::classification;
    cfg.p = 20; cfg.n = 250; cfg.n_test = 100; cfg.n_sub = 125; cfg.s0 = 20;
    cfg.mu = 3.0; cfg.snr.reset();
    cfg.contam_scheme = ContamScheme::cell_x;
  } else if (name == "cls-p250") {
    cfg.task = Task::classification;
    cfg.p = 250; cfg.n = 100; cfg.n_test = 50; cfg.n_sub = 50; cfg.s0 = 15;
    cfg.mu = 3.0; cfg.snr.reset();
    cfg.contam_scheme = ContamScheme::cell_x;
  } else if (name == "cls-p500") {
    cfg.task = Task::classification;
    cfg.p = 500; cfg.n = 100; cfg.n_test = 50; cfg.n_sub = 50; cfg.s0 = 15;
    cfg.mu = 3.0; cfg.snr.reset();
    cfg.contam_scheme = ContamScheme::cell_x;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  cfg.r = 0.25;
  cfg.cv = CvScheme{CvScheme::Kind::randomized, 10, cfg.n_sub};
  cfg.repetitions = cfg.p >= 500 ? 20 : 50;  // desk-scale runtime guard
  return cfg;
}

std::vector<double> preset_snr_or_mu_grid(const std::string& name) {
  ScenarioConfig cfg = preset(name);
  if (cfg.task == Task::regression) return {0.5, 2.0, 5.0};
  return {0.5, 3.0, 8.0};
}

std::vector<double> preset_r_grid(const std::string& name) {
  preset(name);  // validates the name
  return {0.05, 0.15, 0.25, 0.5};
}

int Dataset::contaminated_count() const {
  int c = 0;
  for (auto f : contaminated) c += f ? 1 : 0;
  return c;
}

LinearModel draw_model(const ScenarioConfig& cfg, RngStream& rng) {
  cfg.validate();
  LinearModel model;
  model.beta = Eigen::VectorXd::Zero(cfg.p);
  const std::vector<int> support = rng.subset(cfg.p, cfg.s0);
  for (int j : support) model.beta[j] = rng.normal(1.0, 1.0);
  if (cfg.task == Task::regression && cfg.snr.has_value())
    model.sigma = std::sqrt(model.beta.squaredNorm() / *cfg.snr);
  return model;
}

namespace {

Eigen::MatrixXd draw_design(int size, int p, double mu, RngStream& rng) {
  Eigen::MatrixXd X(size, p);
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = rng.normal(mu, 1.0);
  return X;
}

}  // namespace

Dataset gen_regression_from(const LinearModel& model, const ScenarioConfig& cfg,
                            RngStream& rng, int size) {
  if (size <= 0) throw std::invalid_argument("gen_regression: size must be > 0");
  if (cfg.task != Task::regression)
    throw std::invalid_argument("gen_regression: scenario task is not regression");
  Dataset d;
  d.X = draw_design(size, cfg.p, cfg.mu, rng);
  d.beta_true = model.beta;
  d.sigma = model.sigma;
  d.y = d.X * model.beta;
  for (int i = 0; i < size; ++i) d.y[i] += rng.normal(0.0, model.sigma);
  d.contaminated.assign(static_cast<std::size_t>(size), 0);
  return d;
}

Dataset gen_regression(const ScenarioConfig& cfg, RngStream& rng, int size) {
  const LinearModel model = draw_model(cfg, rng);
  return gen_regression_from(model, cfg, rng, size);
}

Dataset gen_classification_from(const LinearModel& model, const ScenarioConfig& cfg,
                                RngStream& rng, int size) {
  if (size <= 0) throw std::invalid_argument("gen_classification: size must be > 0");
  if (cfg.task != Task::classification)
    throw std::invalid_argument("gen_classification: scenario task is not classification");
  Dataset d;
  d.X = draw_design(size, cfg.p, cfg.mu, rng);
  d.beta_true = model.beta;
  d.sigma = 0.0;
  Eigen::VectorXd raw = d.X * model.beta;
  const double center = raw.mean();
  d.y.resize(size);
  for (int i = 0; i < size; ++i) {
    const double logit = raw[i] - center;
    const double prob = 1.0 / (1.0 + std::exp(-logit));
    d.y[i] = rng.uniform() < prob ? 1.0 : 0.0;
  }
  d.contaminated.assign(static_cast<std::size_t>(size), 0);
  return d;
}

Dataset gen_classification(const ScenarioConfig& cfg, RngStream& rng, int size) {
  const LinearModel model = draw_model(cfg, rng);
  return gen_classification_from(model, cfg, rng, size);
}

Dataset gen_dataset_from(const LinearModel& model, const ScenarioConfig& cfg,
                         RngStream& rng, int size) {
  return cfg.task == Task::regression ? gen_regression_from(model, cfg, rng, size)
                                      : gen_classification_from(model, cfg, rng, size);
}

Dataset gen_dataset(const ScenarioConfig& cfg, RngStream& rng, int size) {
  const LinearModel model = draw_model(cfg, rng);
  return gen_dataset_from(model, cfg, rng, size);
}

Dataset inject_contamination(const Dataset& data, ContamScheme scheme, double r,
                             double gross_value, RngStream& rng) {
  if (!(r >= 0.0 && r < 1.0))
    throw std::invalid_argument("inject_contamination: need 0 <= r < 1");
  Dataset out = data;
  const int n = data.n();
  if (scheme == ContamScheme::case_y) {
    const int m = rng.binomial(n, r);
    for (int i : rng.subset(n, m)) {
      out.y[i] = gross_value;
      out.contaminated[static_cast<std::size_t>(i)] = 1;
    }
  } else {
    const int cells = data.p() / 10;  // floor(0.1 p)
    if (cells == 0)
      throw std::invalid_argument(
          "inject_contamination: cell_x with p < 10 would replace floor(0.1*p) = 0 "
          "cells per row; nothing would change");
    const int m = static_cast<int>(std::floor(r * static_cast<double>(n)));
    for (int i : rng.subset(n, m)) {
      for (int j : rng.subset(data.p(), cells)) out.X(i, j) = gross_value;
      out.contaminated[static_cast<std::size_t>(i)] = 1;
    }
  }
  return out;
}

Dataset gen_cauchy_mixture_from(const Eigen::VectorXd& beta, int n, double mix,
                                RngStream& rng) {
  if (!(mix >= 0.0 && mix <= 1.0))
    throw std::invalid_argument("gen_cauchy_mixture: need 0 <= mix <= 1");
  if (n <= 0) throw std::invalid_argument("gen_cauchy_mixture: n must be > 0");
  const int p = static_cast<int>(beta.size());
  Dataset d;
  d.X = draw_design(n, p, 2.0, rng);
  d.beta_true = beta;
  d.sigma = 1.0;
  d.y = d.X * beta;
  d.contaminated.assign(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    if (rng.uniform() < mix) {
      d.y[i] += rng.cauchy(0.0, 1.0);
      d.contaminated[static_cast<std::size_t>(i)] = 1;
    } else {
      d.y[i] += rng.normal(0.0, 1.0);
    }
  }
  return d;
}

Dataset gen_cauchy_mixture_regression(int n, int p, double mix, RngStream& rng) {
  if (p <= 0) throw std::invalid_argument("gen_cauchy_mixture: p must be > 0");
  Eigen::VectorXd beta(p);
  for (int j = 0; j < p; ++j) beta[j] = rng.normal(1.0, 1.0);
  return gen_cauchy_mixture_from(beta, n, mix, rng);
}

void write_dataset_csv(const Dataset& data, std::ostream& out) {
  for (int j = 0; j < data.p(); ++j) out << 'x' << (j + 1) << ',';
  out << "y,contaminated\n";
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < data.p(); ++j) out << fmt17(data.X(i, j)) << ',';
    out << fmt17(data.y[i]) << ','
        << (data.contaminated[static_cast<std::size_t>(i)] ? 1 : 0) << '\n';
  }
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open '" + path + "' for writing");
  write_dataset_csv(data, out);
}

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("dataset CSV: missing header");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) header.push_back(field);
  }
  if (header.size() < 3 || header[header.size() - 2] != "y" ||
      header.back() != "contaminated")
    throw std::invalid_argument("dataset CSV: header must be x1..xp,y,contaminated");
  const int p = static_cast<int>(header.size()) - 2;
  for (int j = 0; j < p; ++j)
    if (header[static_cast<std::size_t>(j)] != "x" + std::to_string(j + 1))
      throw std::invalid_argument("dataset CSV: predictor columns must be x1..xp");

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string_view field =
          std::string_view(line).substr(start, comma == std::string::npos
                                                   ? std::string::npos
                                                   : comma - start);
      row.push_back(parse_double(field, "numeric"));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (static_cast<int>(row.size()) != p + 2)
      throw std::invalid_argument("dataset CSV: row has wrong column count");
    rows.push_back(std::move(row));
  }

  Dataset d;
  const int n = static_cast<int>(rows.size());
  d.X.resize(n, p);
  d.y.resize(n);
  d.contaminated.assign(static_cast<std::size_t>(n), 0);
  d.beta_true.resize(0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) d.X(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    d.y[i] = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)];
    d.contaminated[static_cast<std::size_t>(i)] =
        rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(p) + 1] != 0.0 ? 1 : 0;
  }
  return d;
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "': no such file");
  return read_dataset_csv(in);
}

}  // namespace robustval
