#include "robustval/bdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "robustval/errors.hpp"
#include "robustval/rng.hpp"

namespace robustval {

ActionLoss squared_action_loss() {
  return [](double y, double action) { return squared_loss(y, action); };
}

ActionLoss arctan_squared_action_loss() {
  return [](double y, double action) { return std::atan(squared_loss(y, action)); };
}

ConsistencyComparison probe_consistency(const ConsistencyProbe& probe,
                                        std::span<const double> sample) {
  if (probe.functional_value == probe.competitor)
    throw std::invalid_argument("probe_consistency: competitor must differ from t");
  if (!probe.loss) throw std::invalid_argument("probe_consistency: loss handle unset");
  if (sample.empty()) throw std::invalid_argument("probe_consistency: empty sample");
  ConsistencyComparison out;
  double sum_t = 0.0, sum_x = 0.0;
  for (double y : sample) {
    sum_t += probe.loss(y, probe.functional_value);
    sum_x += probe.loss(y, probe.competitor);
  }
  const double m = static_cast<double>(sample.size());
  out.risk_true = sum_t / m;
  out.risk_competitor = sum_x / m;
  out.truth_wins = out.risk_true < out.risk_competitor;
  return out;
}

int demonstrate_breakdown(int n_test, double gross, double model_t, double model_x,
                          const ActionLoss& loss) {
  if (n_test <= 0) throw std::invalid_argument("demonstrate_breakdown: n_test must be > 0");
  if (model_t == model_x)
    throw std::invalid_argument("demonstrate_breakdown: models must differ");
  if (!loss) throw std::invalid_argument("demonstrate_breakdown: loss handle unset");

  // Deterministic clean sample around model_t.
  std::vector<double> clean(static_cast<std::size_t>(n_test));
  for (int i = 0; i < n_test; ++i)
    clean[static_cast<std::size_t>(i)] =
        model_t + inverse_normal_cdf((static_cast<double>(i) + 0.5) /
                                     static_cast<double>(n_test));

  double sum_t = 0.0, sum_x = 0.0;
  for (double y : clean) {
    sum_t += loss(y, model_t);
    sum_x += loss(y, model_x);
  }
  if (!(sum_t < sum_x))
    throw std::invalid_argument(
        "demonstrate_breakdown: model_t does not strictly win on the clean test set");

  // Candidate placements for a contaminated observation; the greedy insert
  // maximizes the per-instance loss gap. A gross placement beyond the
  // competitor covers unbounded losses; placing mass at the competitor's
  // prediction covers bounded ones.
  const double direction = model_x > model_t ? 1.0 : -1.0;
  std::vector<double> candidates = {model_x, model_x + direction,
                                    model_t + direction * std::abs(gross)};
  for (double mag = 1.0; mag <= std::abs(gross); mag *= 10.0)
    candidates.push_back(model_t + direction * mag);

  double best_gap = -std::numeric_limits<double>::infinity();
  double best_y = model_x;
  for (double y : candidates) {
    const double gap = loss(y, model_t) - loss(y, model_x);
    if (gap > best_gap) {
      best_gap = gap;
      best_y = y;
    }
  }
  if (!(best_gap > 0.0))
    throw NumericalError(
        "demonstrate_breakdown: no contaminated placement inflates model_t's loss");

  const double insert_t = loss(best_y, model_t);
  const double insert_x = loss(best_y, model_x);
  for (int m = 1; m <= n_test; ++m) {
    const double total = static_cast<double>(n_test + m);
    const double risk_t = (sum_t + static_cast<double>(m) * insert_t) / total;
    const double risk_x = (sum_x + static_cast<double>(m) * insert_x) / total;
    if (risk_t >= risk_x) return m;
  }
  throw NumericalError(
      "demonstrate_breakdown: comparison never flipped within n_test insertions "
      "(bounded per-instance influence)");
}

BdpRecord empirical_bdp(double c, int n_test, int k) {
  if (!(c > 0.0 && c <= 1.0))
    throw std::invalid_argument("empirical_bdp: c must lie in (0, 1]");
  if (k <= 0 || k > n_test)
    throw std::invalid_argument("empirical_bdp: need 1 <= k <= n_test");
  BdpRecord rec;
  rec.per_eval_bdp = c;
  rec.arity = k;
  rec.n_eval = binomial_coefficient(n_test, k);
  rec.empirical_bdp = c / static_cast<double>(rec.n_eval);
  return rec;
}

BdpRecord empirical_bdp_resampled(double c, int n_val, int k, int batches) {
  if (batches <= 0)
    throw std::invalid_argument("empirical_bdp_resampled: batches must be > 0");
  BdpRecord rec = empirical_bdp(c, n_val, k);
  const std::uint64_t per_batch = rec.n_eval;
  if (per_batch > std::numeric_limits<std::uint64_t>::max() /
                      static_cast<std::uint64_t>(batches))
    throw std::invalid_argument("empirical_bdp_resampled: evaluation count overflow");
  rec.n_eval = per_batch * static_cast<std::uint64_t>(batches);
  rec.empirical_bdp = c / static_cast<double>(rec.n_eval);
  return rec;
}

double experiment_bdp(std::span<const double> weak_errors) {
  if (weak_errors.empty())
    throw std::invalid_argument("experiment_bdp: no repetitions");
  int nonzero = 0;
  for (double e : weak_errors) nonzero += e > 0.0 ? 1 : 0;
  return static_cast<double>(nonzero) / static_cast<double>(weak_errors.size());
}

}  // namespace robustval
