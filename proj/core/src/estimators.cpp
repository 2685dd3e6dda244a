#include "robustval/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "robustval/errors.hpp"
#include "robustval/losses.hpp"

namespace robustval {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

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

// h smallest by (value, index): among ties the lower index is kept.
std::vector<int> select_h_smallest(const std::vector<double>& vals, int h) {
  std::vector<int> idx(vals.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto cmp = [&](int a, int b) {
    const double va = vals[static_cast<std::size_t>(a)];
    const double vb = vals[static_cast<std::size_t>(b)];
    if (va != vb) return va < vb;
    return a < b;
  };
  if (h < static_cast<int>(idx.size()))
    std::nth_element(idx.begin(), idx.begin() + h, idx.end(), cmp);
  idx.resize(static_cast<std::size_t>(h));
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<std::vector<int>> all_subsets(int n, int k, std::uint64_t cap,
                                          const char* what) {
  std::uint64_t count = 0;
  try {
    count = binomial_coefficient(n, k);
  } catch (const std::invalid_argument&) {
    count = std::numeric_limits<std::uint64_t>::max();
  }
  if (count > cap)
    throw std::invalid_argument(std::string(what) +
                                ": subset enumeration exceeds the configured cap");
  std::vector<std::vector<int>> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<int> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    out.push_back(idx);
    int pos = k - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - k + pos) --pos;
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
    for (int j = pos + 1; j < k; ++j)
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generic C-step machinery shared by LTS, sparse LTS and trimmed logistic.

struct InnerFit {
  Eigen::VectorXd beta;
  double intercept = 0.0;
  bool ok = false;
  bool converged = true;
  int iterations = 0;
};

struct CStepProblem {
  int n = 0;
  int h = 0;
  int elemental_size = 0;
  std::function<InnerFit(const std::vector<int>&, const InnerFit*)> fit_on;
  std::function<void(const InnerFit&, std::vector<double>&)> losses_all;
  std::function<double(const InnerFit&, double subset_sum)> objective;
};

struct CStepRun {
  InnerFit fit;
  std::vector<int> subset;
  double objective = kInf;
  std::vector<double> trace;
  int csteps = 0;
  bool converged = false;
  bool ok = false;
};

CStepRun run_csteps(const CStepProblem& prob, std::vector<int> current, int max_steps,
                    const InnerFit* warm_init) {
  CStepRun run;
  std::vector<double> losses(static_cast<std::size_t>(prob.n));
  InnerFit warm_storage;
  const InnerFit* warm = warm_init;
  for (int step = 0; step < max_steps; ++step) {
    InnerFit fit = prob.fit_on(current, warm);
    if (!fit.ok) return run;  // degenerate subset, run.ok stays false
    prob.losses_all(fit, losses);
    std::vector<int> next = select_h_smallest(losses, prob.h);
    double subset_sum = 0.0;
    for (int i : next) subset_sum += losses[static_cast<std::size_t>(i)];
    run.objective = prob.objective(fit, subset_sum);
    run.trace.push_back(run.objective);
    run.csteps = step + 1;
    const bool stable = static_cast<int>(current.size()) == prob.h && next == current;
    run.fit = std::move(fit);
    run.subset = std::move(next);
    run.ok = true;
    if (stable) {
      run.converged = true;
      return run;
    }
    current = run.subset;
    warm_storage = run.fit;
    warm = &warm_storage;
  }
  return run;
}

FitResult run_trimmed_fit(const CStepProblem& prob, const TrimOptions& opts,
                          RngStream& rng, const char* what) {
  std::vector<std::vector<int>> starts;
  bool enumerated = false;
  const int elemental = std::min(prob.elemental_size, prob.n);
  if (opts.exhaustive_h_subsets) {
    starts = all_subsets(prob.n, prob.h, opts.exhaustive_cap, what);
    enumerated = true;
  } else {
    std::uint64_t elemental_total = std::numeric_limits<std::uint64_t>::max();
    try {
      elemental_total = binomial_coefficient(prob.n, elemental);
    } catch (const std::invalid_argument&) {
    }
    if (elemental_total <= static_cast<std::uint64_t>(opts.n_starts)) {
      starts = all_subsets(prob.n, elemental, elemental_total, what);
      enumerated = true;
    } else {
      starts.reserve(static_cast<std::size_t>(opts.n_starts));
      for (int s = 0; s < opts.n_starts; ++s) starts.push_back(rng.subset(prob.n, elemental));
    }
  }

  std::vector<CStepRun> runs;
  runs.reserve(starts.size());
  for (const auto& start : starts) {
    CStepRun run = run_csteps(prob, start, opts.initial_csteps, nullptr);
    if (!run.ok && !enumerated) {
      for (int t = 0; t < opts.retry_cap && !run.ok; ++t)
        run = run_csteps(prob, rng.subset(prob.n, elemental), opts.initial_csteps,
                         nullptr);
    }
    if (run.ok) runs.push_back(std::move(run));
  }
  if (runs.empty())
    throw NumericalError(std::string(what) + ": every start subset was degenerate");

  std::vector<std::size_t> order(runs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return runs[a].objective < runs[b].objective;
  });

  const std::size_t keep = std::min<std::size_t>(
      static_cast<std::size_t>(std::max(opts.keep_best, 1)), order.size());
  const CStepRun* best = nullptr;
  std::vector<CStepRun> refined;
  refined.reserve(keep);
  for (std::size_t k = 0; k < keep; ++k) {
    CStepRun run = runs[order[k]];
    if (!run.converged && run.csteps < opts.max_csteps) {
      CStepRun cont =
          run_csteps(prob, run.subset, opts.max_csteps - run.csteps, &run.fit);
      if (cont.ok) {
        cont.trace.insert(cont.trace.begin(), run.trace.begin(), run.trace.end());
        cont.csteps += run.csteps;
        run = std::move(cont);
      }
    }
    refined.push_back(std::move(run));
    if (best == nullptr || refined.back().objective < best->objective)
      best = &refined.back();
  }

  FitResult out;
  out.beta = best->fit.beta;
  out.intercept = best->fit.intercept;
  out.objective = best->objective;
  out.subset = best->subset;
  out.iterations = best->csteps;
  out.converged = best->converged;
  out.objective_trace = best->trace;
  return out;
}

void check_alpha(double alpha, const char* what) {
  if (!(alpha > 0.0 && alpha <= 0.5))
    throw std::invalid_argument(std::string(what) + ": alpha must lie in (0, 0.5]");
}

int trimmed_h(int n, double alpha) {
  return n - static_cast<int>(std::floor(alpha * static_cast<double>(n)));
}

// ---------------------------------------------------------------------------
// Least squares

struct OlsCore {
  Eigen::VectorXd beta;
  int rank = 0;
  bool ok = false;
};

OlsCore ols_core(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  OlsCore out;
  if (X.rows() < X.cols()) return out;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  out.rank = static_cast<int>(qr.rank());
  if (out.rank < X.cols()) return out;
  out.beta = qr.solve(y);
  out.ok = true;
  return out;
}

// ---------------------------------------------------------------------------
// Coordinate descent lasso on raw columns (no centering, no intercept):
// minimize (1/(2m)) ||y - X b||^2 + lambda ||b||_1.

double soft_threshold(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

struct CdStatus {
  int sweeps = 0;
  bool converged = false;
};

CdStatus cd_lasso_raw(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                      double tol, int max_iter, Eigen::VectorXd& beta) {
  const auto m = static_cast<double>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (beta.size() != p) beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd col_scale(p);
  for (int j = 0; j < p; ++j) col_scale[j] = X.col(j).squaredNorm() / m;
  Eigen::VectorXd r = y - X * beta;
  CdStatus status;
  for (int sweep = 1; sweep <= max_iter; ++sweep) {
    double max_delta = 0.0;
    for (int j = 0; j < p; ++j) {
      if (col_scale[j] <= 0.0) {
        if (beta[j] != 0.0) {
          r += X.col(j) * beta[j];
          beta[j] = 0.0;
        }
        continue;
      }
      const double z = X.col(j).dot(r) / m + col_scale[j] * beta[j];
      const double bj = soft_threshold(z, lambda) / col_scale[j];
      const double d = bj - beta[j];
      if (d != 0.0) {
        r -= X.col(j) * d;
        beta[j] = bj;
        max_delta = std::max(max_delta, std::abs(d));
      }
    }
    status.sweeps = sweep;
    if (max_delta < tol) {
      status.converged = true;
      return status;
    }
  }
  return status;
}

struct Standardization {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;  // 1/n convention; 0 marks a constant column
  double y_mean = 0.0;
};

Standardization standardize(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            Eigen::MatrixXd& Xs, Eigen::VectorXd& yc) {
  const auto n = static_cast<double>(X.rows());
  Standardization st;
  st.mean = X.colwise().mean();
  st.sd.resize(X.cols());
  Xs.resize(X.rows(), X.cols());
  for (int j = 0; j < X.cols(); ++j) {
    Eigen::VectorXd centered = X.col(j).array() - st.mean[j];
    const double var = centered.squaredNorm() / n;
    if (var < 1e-24) {
      st.sd[j] = 0.0;
      Xs.col(j).setZero();
    } else {
      st.sd[j] = std::sqrt(var);
      Xs.col(j) = centered / st.sd[j];
    }
  }
  st.y_mean = y.mean();
  yc = y.array() - st.y_mean;
  return st;
}

FitResult fit_lasso_core(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         double lambda, double tol, int max_iter,
                         const Eigen::VectorXd* warm_original) {
  if (lambda < 0.0) throw std::invalid_argument("fit_lasso: lambda must be >= 0");
  if (X.rows() < 2) throw std::invalid_argument("fit_lasso: need at least 2 rows");
  Eigen::MatrixXd Xs;
  Eigen::VectorXd yc;
  const Standardization st = standardize(X, y, Xs, yc);

  Eigen::VectorXd bs = Eigen::VectorXd::Zero(X.cols());
  if (warm_original != nullptr && warm_original->size() == X.cols())
    for (int j = 0; j < X.cols(); ++j) bs[j] = (*warm_original)[j] * st.sd[j];

  const CdStatus status = cd_lasso_raw(Xs, yc, lambda, tol, max_iter, bs);

  FitResult out;
  out.beta.resize(X.cols());
  for (int j = 0; j < X.cols(); ++j)
    out.beta[j] = st.sd[j] > 0.0 ? bs[j] / st.sd[j] : 0.0;
  out.intercept = st.y_mean - st.mean.dot(out.beta);
  const Eigen::VectorXd r = yc - Xs * bs;
  out.objective =
      r.squaredNorm() / (2.0 * static_cast<double>(X.rows())) + lambda * bs.lpNorm<1>();
  out.iterations = status.sweeps;
  out.converged = status.converged;
  return out;
}

// ---------------------------------------------------------------------------
// Logistic regression via IRLS with step halving and an intercept.

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double total_deviance(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double dev = 0.0;
  for (int i = 0; i < eta.size(); ++i)
    dev += deviance_loss(y[i] != 0.0 ? 1 : 0, sigmoid(eta[i]));
  return dev;
}

struct LogisticSettings {
  double tol = 1e-10;
  int max_iter = 100;
  double slope_norm_cap = 20.0;
  // Quasi-separation means no MLE exists; inside C-steps such subsets count
  // as degenerate (like rank deficiency in LTS) so every evaluated subset has
  // a well-defined fit.
  bool capped_is_failure = false;
};

InnerFit irls_logistic_core(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const LogisticSettings& settings, const InnerFit* warm) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  InnerFit fit;
  int ones = 0;
  for (int i = 0; i < n; ++i) ones += y[i] != 0.0 ? 1 : 0;
  if (ones == 0 || ones == n) return fit;  // single class: no MLE

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double intercept = 0.0;
  if (warm != nullptr && warm->beta.size() == p) {
    beta = warm->beta;
    intercept = warm->intercept;
  }

  Eigen::VectorXd eta = (X * beta).array() + intercept;
  double dev = total_deviance(eta, y);
  bool converged = false;
  bool capped = false;
  int it = 0;
  for (it = 1; it <= settings.max_iter; ++it) {
    Eigen::VectorXd prob(n), w(n);
    for (int i = 0; i < n; ++i) {
      prob[i] = sigmoid(eta[i]);
      w[i] = std::max(prob[i] * (1.0 - prob[i]), 1e-10);
    }
    // Normal equations on the design [1 X].
    const int q = p + 1;
    Eigen::MatrixXd M(q, q);
    Eigen::VectorXd g(q);
    const Eigen::VectorXd resid = y - prob;
    M(0, 0) = w.sum();
    for (int j = 0; j < p; ++j) {
      const double wx = w.dot(X.col(j));
      M(0, j + 1) = wx;
      M(j + 1, 0) = wx;
    }
    for (int j = 0; j < p; ++j)
      for (int k = j; k < p; ++k) {
        const double v = (w.array() * X.col(j).array() * X.col(k).array()).sum();
        M(j + 1, k + 1) = v;
        M(k + 1, j + 1) = v;
      }
    g[0] = resid.sum();
    for (int j = 0; j < p; ++j) g[j + 1] = X.col(j).dot(resid);
    Eigen::VectorXd delta = M.ldlt().solve(g);
    if (!delta.allFinite()) return fit;  // degenerate weighted design

    double step = 1.0;
    double new_dev = dev;
    Eigen::VectorXd new_beta;
    double new_intercept = 0.0;
    Eigen::VectorXd new_eta;
    bool improved = false;
    for (int half = 0; half < 30; ++half) {
      new_intercept = intercept + step * delta[0];
      new_beta = beta + step * delta.tail(p);
      new_eta = (X * new_beta).array() + new_intercept;
      new_dev = total_deviance(new_eta, y);
      if (new_dev <= dev + 1e-12) {
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) {
      converged = true;  // no descent direction left at this scale
      break;
    }
    const double gain = dev - new_dev;
    beta = std::move(new_beta);
    intercept = new_intercept;
    eta = std::move(new_eta);
    dev = new_dev;
    if (beta.norm() > settings.slope_norm_cap) {
      capped = true;  // quasi-separation: the MLE runs away
      break;
    }
    if (gain < settings.tol) {
      converged = true;
      break;
    }
  }

  fit.beta = std::move(beta);
  fit.intercept = intercept;
  fit.ok = true;
  fit.converged = converged && !capped;
  fit.iterations = std::min(it, settings.max_iter);
  return fit;
}

// ---------------------------------------------------------------------------
// L1-penalized logistic regression: IRLS outer loop, weighted coordinate
// descent inner loop, unpenalized intercept, accepted only while the
// penalized deviance improves.

struct L1LogisticSettings {
  double lambda = 0.0;
  double tol = 1e-7;
  int max_iter = 100;
  double cd_tol = 1e-8;
  int cd_max_sweeps = 100;
};

InnerFit l1_logistic_core(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const L1LogisticSettings& settings, const InnerFit* warm,
                          int* outer_iters) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  InnerFit fit;
  int ones = 0;
  for (int i = 0; i < n; ++i) ones += y[i] != 0.0 ? 1 : 0;
  if (ones == 0 || ones == n) return fit;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double intercept = 0.0;
  if (warm != nullptr && warm->beta.size() == p) {
    beta = warm->beta;
    intercept = warm->intercept;
  }
  const auto objective = [&](const Eigen::VectorXd& b, double a) {
    const Eigen::VectorXd eta = (X * b).array() + a;
    return total_deviance(eta, y) / (2.0 * static_cast<double>(n)) +
           settings.lambda * b.lpNorm<1>();
  };

  double obj = objective(beta, intercept);
  bool converged = false;
  int it = 0;
  for (it = 1; it <= settings.max_iter; ++it) {
    const Eigen::VectorXd eta = (X * beta).array() + intercept;
    Eigen::VectorXd w(n), z(n);
    for (int i = 0; i < n; ++i) {
      const double pr = sigmoid(eta[i]);
      w[i] = std::max(pr * (1.0 - pr), 1e-6);
      z[i] = eta[i] + (y[i] - pr) / w[i];
    }
    Eigen::VectorXd cand_beta = beta;
    double cand_intercept = intercept;
    Eigen::VectorXd r = z - X * cand_beta;
    r.array() -= cand_intercept;
    const double w_sum = w.sum();
    Eigen::VectorXd col_scale(p);
    for (int j = 0; j < p; ++j)
      col_scale[j] = (w.array() * X.col(j).array().square()).sum() / n;
    for (int sweep = 0; sweep < settings.cd_max_sweeps; ++sweep) {
      double max_delta = 0.0;
      const double da = (w.array() * r.array()).sum() / w_sum;
      if (da != 0.0) {
        cand_intercept += da;
        r.array() -= da;
        max_delta = std::abs(da);
      }
      for (int j = 0; j < p; ++j) {
        if (col_scale[j] <= 0.0) continue;
        const double zj = (w.array() * X.col(j).array() * r.array()).sum() / n +
                          col_scale[j] * cand_beta[j];
        const double bj = soft_threshold(zj, settings.lambda) / col_scale[j];
        const double d = bj - cand_beta[j];
        if (d != 0.0) {
          r -= X.col(j) * d;
          cand_beta[j] = bj;
          max_delta = std::max(max_delta, std::abs(d));
        }
      }
      if (max_delta < settings.cd_tol) break;
    }
    const double cand_obj = objective(cand_beta, cand_intercept);
    if (cand_obj > obj) break;  // quadratic model stopped helping
    const double gain = obj - cand_obj;
    beta = std::move(cand_beta);
    intercept = cand_intercept;
    obj = cand_obj;
    if (gain < settings.tol) {
      converged = true;
      break;
    }
  }

  if (outer_iters != nullptr) *outer_iters = std::min(it, settings.max_iter);
  fit.beta = std::move(beta);
  fit.intercept = intercept;
  fit.ok = true;
  fit.converged = converged;
  fit.iterations = std::min(it, settings.max_iter);
  return fit;
}

void require_binary(const Eigen::VectorXd& y, const char* what) {
  int ones = 0, zeros = 0;
  for (int i = 0; i < y.size(); ++i) {
    if (y[i] == 0.0)
      ++zeros;
    else if (y[i] == 1.0)
      ++ones;
    else
      throw std::invalid_argument(std::string(what) + ": responses must be 0 or 1");
  }
  if (ones == 0 || zeros == 0)
    throw std::invalid_argument(std::string(what) +
                                ": all responses share one class, no information");
}

}  // namespace

// ---------------------------------------------------------------------------

FitResult fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) throw std::invalid_argument("fit_ols: X/y size mismatch");
  if (X.rows() < X.cols())
    throw std::invalid_argument("fit_ols: need n >= p");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  const int rank = static_cast<int>(qr.rank());
  if (rank < X.cols())
    throw NumericalError("fit_ols: design is rank deficient (" +
                         std::to_string(X.cols() - rank) + " of " +
                         std::to_string(X.cols()) + " columns dependent)");
  FitResult out;
  out.beta = qr.solve(y);
  out.objective = (y - X * out.beta).squaredNorm();
  out.iterations = 1;
  out.converged = true;
  return out;
}

FitResult fit_lts(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const TrimOptions& opts, RngStream& rng) {
  check_alpha(opts.alpha, "fit_lts");
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (y.size() != n) throw std::invalid_argument("fit_lts: X/y size mismatch");
  const int h = trimmed_h(n, opts.alpha);
  if (h < p)
    throw std::invalid_argument("fit_lts: h = " + std::to_string(h) +
                                " is below p = " + std::to_string(p));

  CStepProblem prob;
  prob.n = n;
  prob.h = h;
  prob.elemental_size = p;
  prob.fit_on = [&](const std::vector<int>& idx, const InnerFit*) {
    InnerFit fit;
    const OlsCore core = ols_core(rows_of(X, idx), elems_of(y, idx));
    if (!core.ok) return fit;
    fit.beta = core.beta;
    fit.ok = true;
    return fit;
  };
  prob.losses_all = [&](const InnerFit& fit, std::vector<double>& losses) {
    const Eigen::VectorXd r = y - X * fit.beta;
    for (int i = 0; i < n; ++i) losses[static_cast<std::size_t>(i)] = r[i] * r[i];
  };
  prob.objective = [](const InnerFit&, double subset_sum) { return subset_sum; };
  return run_trimmed_fit(prob, opts, rng, "fit_lts");
}

FitResult fit_lts(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha,
                  int n_starts, RngStream& rng) {
  TrimOptions opts;
  opts.alpha = alpha;
  opts.n_starts = n_starts;
  return fit_lts(X, y, opts, rng);
}

FitResult fit_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                    double tol, int max_iter) {
  return fit_lasso_core(X, y, lambda, tol, max_iter, nullptr);
}

double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Eigen::MatrixXd Xs;
  Eigen::VectorXd yc;
  standardize(X, y, Xs, yc);
  return (Xs.transpose() * yc).cwiseAbs().maxCoeff() / static_cast<double>(X.rows());
}

FitResult fit_sparse_lts(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         double lambda, const TrimOptions& opts, RngStream& rng) {
  check_alpha(opts.alpha, "fit_sparse_lts");
  if (lambda < 0.0) throw std::invalid_argument("fit_sparse_lts: lambda must be >= 0");
  const int n = static_cast<int>(X.rows());
  if (y.size() != n) throw std::invalid_argument("fit_sparse_lts: X/y size mismatch");
  const int h = trimmed_h(n, opts.alpha);
  if (h < 2) throw std::invalid_argument("fit_sparse_lts: need h >= 2");

  CStepProblem prob;
  prob.n = n;
  prob.h = h;
  prob.elemental_size = std::min(3, h);
  prob.fit_on = [&, lambda, opts](const std::vector<int>& idx, const InnerFit* warm) {
    InnerFit fit;
    Eigen::VectorXd beta =
        warm != nullptr ? warm->beta : Eigen::VectorXd::Zero(X.cols());
    const CdStatus status = cd_lasso_raw(rows_of(X, idx), elems_of(y, idx), lambda,
                                         opts.inner_tol, opts.inner_max_iter, beta);
    fit.beta = std::move(beta);
    fit.ok = true;
    fit.converged = status.converged;
    return fit;
  };
  prob.losses_all = [&](const InnerFit& fit, std::vector<double>& losses) {
    const Eigen::VectorXd r = y - X * fit.beta;
    for (int i = 0; i < n; ++i) losses[static_cast<std::size_t>(i)] = r[i] * r[i];
  };
  prob.objective = [h, lambda](const InnerFit& fit, double subset_sum) {
    return subset_sum / (2.0 * static_cast<double>(h)) + lambda * fit.beta.lpNorm<1>();
  };
  return run_trimmed_fit(prob, opts, rng, "fit_sparse_lts");
}

FitResult fit_sparse_lts(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         double alpha, double lambda, int n_starts, RngStream& rng) {
  TrimOptions opts;
  opts.alpha = alpha;
  opts.n_starts = n_starts;
  return fit_sparse_lts(X, y, lambda, opts, rng);
}

FitResult fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tol,
                       int max_iter) {
  require_binary(y, "fit_logistic");
  LogisticSettings settings;
  settings.tol = tol;
  settings.max_iter = max_iter;
  const InnerFit fit = irls_logistic_core(X, y, settings, nullptr);
  if (!fit.ok) throw NumericalError("fit_logistic: IRLS produced a degenerate system");
  FitResult out;
  out.beta = fit.beta;
  out.intercept = fit.intercept;
  out.objective = total_deviance((X * fit.beta).array() + fit.intercept, y);
  out.iterations = fit.iterations;
  out.converged = fit.converged;
  return out;
}

FitResult fit_trimmed_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const TrimOptions& opts, RngStream& rng) {
  require_binary(y, "fit_trimmed_logistic");
  check_alpha(opts.alpha, "fit_trimmed_logistic");
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  const int h = trimmed_h(n, opts.alpha);
  if (h < 2) throw std::invalid_argument("fit_trimmed_logistic: need h >= 2");

  LogisticSettings settings;
  CStepProblem prob;
  prob.n = n;
  prob.h = h;
  prob.elemental_size = std::min(n, p + 2);
  prob.fit_on = [&, settings](const std::vector<int>& idx, const InnerFit* warm) {
    return irls_logistic_core(rows_of(X, idx), elems_of(y, idx), settings, warm);
  };
  prob.losses_all = [&](const InnerFit& fit, std::vector<double>& losses) {
    const Eigen::VectorXd eta = (X * fit.beta).array() + fit.intercept;
    for (int i = 0; i < n; ++i)
      losses[static_cast<std::size_t>(i)] =
          deviance_loss(y[i] != 0.0 ? 1 : 0, sigmoid(eta[i]));
  };
  prob.objective = [](const InnerFit&, double subset_sum) { return subset_sum; };
  return run_trimmed_fit(prob, opts, rng, "fit_trimmed_logistic");
}

FitResult fit_trimmed_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               double alpha, int n_starts, RngStream& rng) {
  TrimOptions opts;
  opts.alpha = alpha;
  opts.n_starts = n_starts;
  return fit_trimmed_logistic(X, y, opts, rng);
}

FitResult fit_l1_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          double lambda, double tol, int max_iter) {
  require_binary(y, "fit_l1_logistic");
  if (lambda < 0.0) throw std::invalid_argument("fit_l1_logistic: lambda must be >= 0");
  L1LogisticSettings settings;
  settings.lambda = lambda;
  settings.tol = tol;
  settings.max_iter = max_iter;
  int outer = 0;
  const InnerFit fit = l1_logistic_core(X, y, settings, nullptr, &outer);
  if (!fit.ok) throw NumericalError("fit_l1_logistic: degenerate system");
  FitResult out;
  out.beta = fit.beta;
  out.intercept = fit.intercept;
  out.objective = total_deviance((X * fit.beta).array() + fit.intercept, y) /
                      (2.0 * static_cast<double>(X.rows())) +
                  lambda * fit.beta.lpNorm<1>();
  out.iterations = outer;
  out.converged = fit.converged;
  return out;
}

FitResult fit_trimmed_l1_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  double lambda, const TrimOptions& opts,
                                  RngStream& rng) {
  require_binary(y, "fit_trimmed_l1_logistic");
  check_alpha(opts.alpha, "fit_trimmed_l1_logistic");
  if (lambda < 0.0)
    throw std::invalid_argument("fit_trimmed_l1_logistic: lambda must be >= 0");
  const int n = static_cast<int>(X.rows());
  const int h = trimmed_h(n, opts.alpha);
  if (h < 2) throw std::invalid_argument("fit_trimmed_l1_logistic: need h >= 2");

  L1LogisticSettings settings;
  settings.lambda = lambda;
  CStepProblem prob;
  prob.n = n;
  prob.h = h;
  prob.elemental_size = std::min(h, 8);
  prob.fit_on = [&, settings](const std::vector<int>& idx, const InnerFit* warm) {
    return l1_logistic_core(rows_of(X, idx), elems_of(y, idx), settings, warm, nullptr);
  };
  prob.losses_all = [&](const InnerFit& fit, std::vector<double>& losses) {
    const Eigen::VectorXd eta = (X * fit.beta).array() + fit.intercept;
    for (int i = 0; i < n; ++i)
      losses[static_cast<std::size_t>(i)] =
          deviance_loss(y[i] != 0.0 ? 1 : 0, sigmoid(eta[i]));
  };
  prob.objective = [h, lambda](const InnerFit& fit, double subset_sum) {
    return subset_sum / (2.0 * static_cast<double>(h)) + lambda * fit.beta.lpNorm<1>();
  };
  return run_trimmed_fit(prob, opts, rng, "fit_trimmed_l1_logistic");
}

Eigen::VectorXd linear_predictor(const FitResult& fit, const Eigen::MatrixXd& X) {
  return ((X * fit.beta).array() + fit.intercept).matrix();
}

std::vector<double> pointwise_losses(Task task, const FitResult& fit,
                                     const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& y) {
  const Eigen::VectorXd eta = linear_predictor(fit, X);
  std::vector<double> out(static_cast<std::size_t>(X.rows()));
  if (task == Task::regression) {
    for (int i = 0; i < X.rows(); ++i) out[static_cast<std::size_t>(i)] = squared_loss(y[i], eta[i]);
  } else {
    for (int i = 0; i < X.rows(); ++i)
      out[static_cast<std::size_t>(i)] = deviance_loss(y[i] != 0.0 ? 1 : 0, sigmoid(eta[i]));
  }
  return out;
}

double pointwise_loss(Task task, const FitResult& fit, const Eigen::RowVectorXd& x,
                      double y) {
  const double eta = x.dot(fit.beta) + fit.intercept;
  if (task == Task::regression) return squared_loss(y, eta);
  return deviance_loss(y != 0.0 ? 1 : 0, sigmoid(eta));
}

// ---------------------------------------------------------------------------
// Fitter handles and leave-one-out fast paths

namespace {

std::vector<int> indices_without(int n, int skip) {
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(n - 1));
  for (int i = 0; i < n; ++i)
    if (i != skip) idx.push_back(i);
  return idx;
}

// Warm leave-one-out for C-step fitters: start each fold's C-steps from the
// full-data solution and run only a few steps. Accuracy/runtime trade-off per
// fold is loo_csteps.
template <typename MakeProblem>
std::vector<double> loo_warm_csteps(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    double alpha, int loo_csteps,
                                    const FitResult& full, Task task,
                                    MakeProblem&& make_problem) {
  const int n = static_cast<int>(X.rows());
  std::vector<double> scores(static_cast<std::size_t>(n));
  InnerFit warm;
  warm.beta = full.beta;
  warm.intercept = full.intercept;
  warm.ok = true;
  for (int i = 0; i < n; ++i) {
    const std::vector<int> keep = indices_without(n, i);
    const Eigen::MatrixXd Xr = rows_of(X, keep);
    const Eigen::VectorXd yr = elems_of(y, keep);
    const int h_i = trimmed_h(n - 1, alpha);
    CStepProblem prob = make_problem(Xr, yr, h_i);
    // Initial subset: the h_i best-fitting reduced rows under the full model.
    std::vector<double> losses(static_cast<std::size_t>(n - 1));
    prob.losses_all(warm, losses);
    const std::vector<int> start = select_h_smallest(losses, h_i);
    const CStepRun run = run_csteps(prob, start, loo_csteps, &warm);
    if (!run.ok)
      throw NumericalError("loo_scores: degenerate leave-one-out fit at fold " +
                           std::to_string(i));
    FitResult reduced;
    reduced.beta = run.fit.beta;
    reduced.intercept = run.fit.intercept;
    scores[static_cast<std::size_t>(i)] = pointwise_loss(task, reduced, X.row(i), y[i]);
  }
  return scores;
}

}  // namespace

Fitter ols_fitter() {
  Fitter f;
  f.name = "ols";
  f.robust = false;
  f.task = Task::regression;
  f.fit = [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, RngStream&) {
    return fit_ols(X, y);
  };
  f.loo_scores = [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, RngStream&) {
    // Hat-matrix identity: e_{(i)} = e_i / (1 - h_ii), h_ii = ||q_i||^2.
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    if (n < p + 1)
      throw std::invalid_argument("loo_scores: need n >= p + 1 for leave-one-out OLS");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (static_cast<int>(qr.rank()) < p)
      throw NumericalError("loo_scores: design is rank deficient (" +
                           std::to_string(p - static_cast<int>(qr.rank())) + " of " +
                           std::to_string(p) + " columns dependent)");
    const Eigen::VectorXd beta = qr.solve(y);
    const Eigen::VectorXd e = y - X * beta;
    const Eigen::MatrixXd thin_q =
        qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
    std::vector<double> scores(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const double leverage = thin_q.row(i).squaredNorm();
      const double denom = 1.0 - leverage;
      scores[static_cast<std::size_t>(i)] =
          denom <= 1e-12 ? kInf : squared_loss(0.0, e[i] / denom);
    }
    return scores;
  };
  return f;
}

Fitter lts_fitter(const TrimOptions& opts, int loo_csteps) {
  Fitter f;
  f.name = "lts";
  f.robust = true;
  f.task = Task::regression;
  f.fit = [opts](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, RngStream& rng) {
    return fit_lts(X, y, opts, rng);
  };
  f.loo_scores = [opts, loo_csteps](const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    RngStream& rng) {
    const FitResult full = fit_lts(X, y, opts, rng);
    return loo_warm_csteps(
        X, y, opts.alpha, loo_csteps, full, Task::regression,
        [](const Eigen::MatrixXd& Xr, const Eigen::VectorXd& yr, int h) {
          CStepProblem prob;
          prob.n = static_cast<int>(Xr.rows());
          prob.h = h;
          prob.elemental_size = static_cast<int>(Xr.cols());
          prob.fit_on = [&Xr, &yr](const std::vector<int>& idx, const InnerFit*) {
            InnerFit fit;
            const OlsCore core = ols_core(rows_of(Xr, idx), elems_of(yr, idx));
            if (!core.ok) return fit;
            fit.beta = core.beta;
            fit.ok = true;
            return fit;
          };
          prob.losses_all = [&Xr, &yr](const InnerFit& fit, std::vector<double>& losses) {
            const Eigen::VectorXd r = yr - Xr * fit.beta;
            for (int i = 0; i < Xr.rows(); ++i)
              losses[static_cast<std::size_t>(i)] = r[i] * r[i];
          };
          prob.objective = [](const InnerFit&, double s) { return s; };
          return prob;
        });
  };
  return f;
}

Fitter lasso_fitter(double lambda, double tol, int max_iter) {
  Fitter f;
  f.name = "lasso";
  f.robust = false;
  f.task = Task::regression;
  f.fit = [lambda, tol, max_iter](const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  RngStream&) {
    return fit_lasso(X, y, lambda, tol, max_iter);
  };
  f.loo_scores = [lambda, tol, max_iter](const Eigen::MatrixXd& X,
                                         const Eigen::VectorXd& y, RngStream&) {
    const int n = static_cast<int>(X.rows());
    const FitResult full = fit_lasso(X, y, lambda, tol, max_iter);
    std::vector<double> scores(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const std::vector<int> keep = indices_without(n, i);
      const FitResult fold = fit_lasso_core(rows_of(X, keep), elems_of(y, keep), lambda,
                                            tol, max_iter, &full.beta);
      scores[static_cast<std::size_t>(i)] =
          pointwise_loss(Task::regression, fold, X.row(i), y[i]);
    }
    return scores;
  };
  return f;
}

Fitter sparse_lts_fitter(double lambda, const TrimOptions& opts, int loo_csteps) {
  Fitter f;
  f.name = "slts";
  f.robust = true;
  f.task = Task::regression;
  f.fit = [lambda, opts](const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         RngStream& rng) {
    return fit_sparse_lts(X, y, lambda, opts, rng);
  };
  f.loo_scores = [lambda, opts, loo_csteps](const Eigen::MatrixXd& X,
                                            const Eigen::VectorXd& y, RngStream& rng) {
    const FitResult full = fit_sparse_lts(X, y, lambda, opts, rng);
    return loo_warm_csteps(
        X, y, opts.alpha, loo_csteps, full, Task::regression,
        [lambda](const Eigen::MatrixXd& Xr, const Eigen::VectorXd& yr, int h) {
          CStepProblem prob;
          prob.n = static_cast<int>(Xr.rows());
          prob.h = h;
          prob.elemental_size = std::min(3, h);
          prob.fit_on = [&Xr, &yr, lambda](const std::vector<int>& idx,
                                           const InnerFit* warm) {
            InnerFit fit;
            Eigen::VectorXd beta =
                warm != nullptr ? warm->beta : Eigen::VectorXd::Zero(Xr.cols());
            cd_lasso_raw(rows_of(Xr, idx), elems_of(yr, idx), lambda, 1e-8, 200, beta);
            fit.beta = std::move(beta);
            fit.ok = true;
            return fit;
          };
          prob.losses_all = [&Xr, &yr](const InnerFit& fit, std::vector<double>& losses) {
            const Eigen::VectorXd r = yr - Xr * fit.beta;
            for (int i = 0; i < Xr.rows(); ++i)
              losses[static_cast<std::size_t>(i)] = r[i] * r[i];
          };
          prob.objective = [h, lambda](const InnerFit& fit, double s) {
            return s / (2.0 * static_cast<double>(h)) + lambda * fit.beta.lpNorm<1>();
          };
          return prob;
        });
  };
  return f;
}

Fitter logistic_fitter() {
  Fitter f;
  f.name = "logit";
  f.robust = false;
  f.task = Task::classification;
  f.fit = [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, RngStream&) {
    return fit_logistic(X, y);
  };
  f.loo_scores = [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, RngStream&) {
    require_binary(y, "loo_scores(logit)");
    const int n = static_cast<int>(X.rows());
    LogisticSettings settings;
    const InnerFit full = irls_logistic_core(X, y, settings, nullptr);
    if (!full.ok) throw NumericalError("loo_scores(logit): degenerate full fit");
    std::vector<double> scores(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const std::vector<int> keep = indices_without(n, i);
      const InnerFit fold =
          irls_logistic_core(rows_of(X, keep), elems_of(y, keep), settings, &full);
      if (!fold.ok)
        throw NumericalError("loo_scores(logit): single-class fold at index " +
                             std::to_string(i));
      const double eta = X.row(i).dot(fold.beta) + fold.intercept;
      scores[static_cast<std::size_t>(i)] =
          deviance_loss(y[i] != 0.0 ? 1 : 0, sigmoid(eta));
    }
    return scores;
  };
  return f;
}

Fitter trimmed_logistic_fitter(const TrimOptions& opts, int loo_csteps) {
  Fitter f;
  f.name = "tlogit";
  f.robust = true;
  f.task = Task::classification;
  f.fit = [opts](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, RngStream& rng) {
    return fit_trimmed_logistic(X, y, opts, rng);
  };
  f.loo_scores = [opts, loo_csteps](const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    RngStream& rng) {
    const FitResult full = fit_trimmed_logistic(X, y, opts, rng);
    return loo_warm_csteps(
        X, y, opts.alpha, loo_csteps, full, Task::classification,
        [](const Eigen::MatrixXd& Xr, const Eigen::VectorXd& yr, int h) {
          CStepProblem prob;
          prob.n = static_cast<int>(Xr.rows());
          prob.h = h;
          prob.elemental_size = std::min(static_cast<int>(Xr.rows()),
                                         static_cast<int>(Xr.cols()) + 2);
          LogisticSettings settings;
          prob.fit_on = [&Xr, &yr, settings](const std::vector<int>& idx,
                                             const InnerFit* warm) {
            return irls_logistic_core(rows_of(Xr, idx), elems_of(yr, idx), settings,
                                      warm);
          };
          prob.losses_all = [&Xr, &yr](const InnerFit& fit, std::vector<double>& losses) {
            const Eigen::VectorXd eta = (Xr * fit.beta).array() + fit.intercept;
            for (int i = 0; i < Xr.rows(); ++i)
              losses[static_cast<std::size_t>(i)] =
                  deviance_loss(yr[i] != 0.0 ? 1 : 0, sigmoid(eta[i]));
          };
          prob.objective = [](const InnerFit&, double s) { return s; };
          return prob;
        });
  };
  return f;
}

Fitter l1_logistic_fitter(double lambda) {
  Fitter f;
  f.name = "l1_logit";
  f.robust = false;
  f.task = Task::classification;
  f.fit = [lambda](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, RngStream&) {
    return fit_l1_logistic(X, y, lambda);
  };
  f.loo_scores = [lambda](const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          RngStream&) {
    require_binary(y, "loo_scores(l1_logit)");
    const int n = static_cast<int>(X.rows());
    L1LogisticSettings settings;
    settings.lambda = lambda;
    const InnerFit full = l1_logistic_core(X, y, settings, nullptr, nullptr);
    if (!full.ok) throw NumericalError("loo_scores(l1_logit): degenerate full fit");
    std::vector<double> scores(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const std::vector<int> keep = indices_without(n, i);
      const InnerFit fold = l1_logistic_core(rows_of(X, keep), elems_of(y, keep),
                                             settings, &full, nullptr);
      if (!fold.ok)
        throw NumericalError("loo_scores(l1_logit): single-class fold at index " +
                             std::to_string(i));
      const double eta = X.row(i).dot(fold.beta) + fold.intercept;
      scores[static_cast<std::size_t>(i)] =
          deviance_loss(y[i] != 0.0 ? 1 : 0, sigmoid(eta));
    }
    return scores;
  };
  return f;
}

Fitter trimmed_l1_logistic_fitter(double lambda, const TrimOptions& opts,
                                  int loo_csteps) {
  Fitter f;
  f.name = "tl1_logit";
  f.robust = true;
  f.task = Task::classification;
  f.fit = [lambda, opts](const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         RngStream& rng) {
    return fit_trimmed_l1_logistic(X, y, lambda, opts, rng);
  };
  f.loo_scores = [lambda, opts, loo_csteps](const Eigen::MatrixXd& X,
                                            const Eigen::VectorXd& y, RngStream& rng) {
    const FitResult full = fit_trimmed_l1_logistic(X, y, lambda, opts, rng);
    return loo_warm_csteps(
        X, y, opts.alpha, loo_csteps, full, Task::classification,
        [lambda](const Eigen::MatrixXd& Xr, const Eigen::VectorXd& yr, int h) {
          CStepProblem prob;
          prob.n = static_cast<int>(Xr.rows());
          prob.h = h;
          prob.elemental_size = std::min(h, 8);
          L1LogisticSettings settings;
          settings.lambda = lambda;
          prob.fit_on = [&Xr, &yr, settings](const std::vector<int>& idx,
                                             const InnerFit* warm) {
            return l1_logistic_core(rows_of(Xr, idx), elems_of(yr, idx), settings, warm,
                                    nullptr);
          };
          prob.losses_all = [&Xr, &yr](const InnerFit& fit, std::vector<double>& losses) {
            const Eigen::VectorXd eta = (Xr * fit.beta).array() + fit.intercept;
            for (int i = 0; i < Xr.rows(); ++i)
              losses[static_cast<std::size_t>(i)] =
                  deviance_loss(yr[i] != 0.0 ? 1 : 0, sigmoid(eta[i]));
          };
          prob.objective = [h, lambda](const InnerFit& fit, double s) {
            return s / (2.0 * static_cast<double>(h)) + lambda * fit.beta.lpNorm<1>();
          };
          return prob;
        });
  };
  return f;
}

double select_lambda_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Task task,
                        RngStream& rng, int folds, int grid_size) {
  const int n = static_cast<int>(X.rows());
  if (folds < 2 || folds > n)
    throw std::invalid_argument("select_lambda_cv: need 2 <= folds <= n");
  const std::vector<int> perm = rng.permutation(n);
  std::vector<int> assignment(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    assignment[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = i % folds;

  double lam_max;
  if (task == Task::regression) {
    lam_max = lasso_lambda_max(X, y);
  } else {
    const Eigen::VectorXd yc = y.array() - y.mean();
    lam_max = 0.0;
    for (int j = 0; j < X.cols(); ++j) {
      const Eigen::VectorXd xc = X.col(j).array() - X.col(j).mean();
      lam_max = std::max(lam_max, std::abs(xc.dot(yc)) / static_cast<double>(n));
    }
  }
  std::vector<double> grid;
  for (int k = 1; k <= grid_size; ++k) grid.push_back(lam_max * std::pow(0.5, k));

  std::vector<double> cv_error(grid.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    std::vector<int> train, val;
    for (int i = 0; i < n; ++i)
      (assignment[static_cast<std::size_t>(i)] == f ? val : train).push_back(i);
    const Eigen::MatrixXd Xt = rows_of(X, train);
    const Eigen::VectorXd yt = elems_of(y, train);
    const Eigen::MatrixXd Xv = rows_of(X, val);
    const Eigen::VectorXd yv = elems_of(y, val);

    if (task == Task::regression) {
      Eigen::VectorXd warm;  // descend the grid with warm starts
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const FitResult fit = fit_lasso_core(Xt, yt, grid[g], 1e-7, 2000,
                                             warm.size() > 0 ? &warm : nullptr);
        warm = fit.beta;
        const Eigen::VectorXd pred = linear_predictor(fit, Xv);
        cv_error[g] += (yv - pred).squaredNorm() / static_cast<double>(val.size());
      }
    } else {
      L1LogisticSettings settings;
      InnerFit warm;
      for (std::size_t g = 0; g < grid.size(); ++g) {
        settings.lambda = grid[g];
        const InnerFit fit =
            l1_logistic_core(Xt, yt, settings, warm.ok ? &warm : nullptr, nullptr);
        if (!fit.ok)
          throw NumericalError("select_lambda_cv: single-class training fold");
        warm = fit;
        const Eigen::VectorXd eta = (Xv * fit.beta).array() + fit.intercept;
        double dev = 0.0;
        for (int i = 0; i < Xv.rows(); ++i)
          dev += deviance_loss(yv[i] != 0.0 ? 1 : 0, sigmoid(eta[i]));
        cv_error[g] += dev / static_cast<double>(val.size());
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (cv_error[g] < cv_error[best]) best = g;
  return grid[best];
}

}  // namespace robustval
