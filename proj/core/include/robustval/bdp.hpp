#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "robustval/losses.hpp"

namespace robustval {

// Pointwise loss of an action against one observation, e.g. squared loss for
// mean elicitation.
using ActionLoss = std::function<double(double y, double action)>;

ActionLoss squared_action_loss();
ActionLoss arctan_squared_action_loss();

// Compares the functional's true value t against a competitor x on a sample.
struct ConsistencyProbe {
  double functional_value = 0.0;  // t
  double competitor = 0.0;        // x, must differ from t
  ActionLoss loss;
};

struct ConsistencyComparison {
  double risk_true = 0.0;
  double risk_competitor = 0.0;
  bool truth_wins = false;  // risk_true < risk_competitor, strict
};

ConsistencyComparison probe_consistency(const ConsistencyProbe& probe,
                                        std::span<const double> sample);

// Constructive breakdown witness: starts from a deterministic clean test set
// (normal quantile grid around model_t, unit scale) on which model_t must
// strictly beat model_x, then inserts contaminated observations crafted to
// maximize L(y, model_t) - L(y, model_x) until the empirical comparison
// flips. Returns the number of insertions; an unbounded loss with a large
// gross value flips after one. Raises NumericalError when n_test insertions
// never flip the comparison (the bounded-loss regime can refuse).
int demonstrate_breakdown(int n_test, double gross, double model_t, double model_x,
                          const ActionLoss& loss);

struct BdpRecord {
  double per_eval_bdp = 0.0;    // c, the loss's own BDP per evaluation
  int arity = 0;                // k
  std::uint64_t n_eval = 0;     // number of loss evaluations aggregated
  double empirical_bdp = 0.0;   // exactly c / n_eval
};

// Single test set: n_eval = C(n_test, k).
BdpRecord empirical_bdp(double c, int n_test, int k);

// B resampled validation sets of size n_val: n_eval = B * C(n_val, k).
BdpRecord empirical_bdp_resampled(double c, int n_val, int k, int batches);

// Fraction of repetitions whose weak ranking error is non-zero; the
// experiment-level empirical BDP the appendix figures report.
double experiment_bdp(std::span<const double> weak_errors);

}  // namespace robustval
