#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "robustval/experiments.hpp"

namespace robustval {

inline constexpr const char* kMetricsCsvHeader =
    "scenario_id,task,contam_scheme,estimator,strategy,cv_scheme,r,r_val,snr_or_mu,"
    "repetition,metric_name,value";

// %.17g: round-trips every double, dot decimal separator regardless of locale.
std::string format_double17(double v);

// Rows come out sorted by every key column. String fields must not contain
// commas or newlines. An empty row set yields a header-only CSV.
void write_metrics_csv(std::vector<MetricRow> rows, std::ostream& out);
void write_metrics_csv(std::vector<MetricRow> rows, const std::string& path);
std::vector<MetricRow> read_metrics_csv(std::istream& in);
std::vector<MetricRow> read_metrics_csv(const std::string& path);

// Run configuration: flat key=value lines (# comments) or a JSON object with
// the same keys. Unknown keys are rejected by name.
struct RunConfig {
  std::string preset = "reg-p20";
  std::uint64_t master_seed = 42;
  std::string out;
  int repetitions = 0;
  int threads = 1;
  std::optional<double> snr;
  std::optional<double> mu;
  std::optional<std::string> contam;
  std::optional<double> lambda;
  std::optional<double> gross;
  std::vector<double> r_grid;
  std::vector<double> r_val_grid;
  std::vector<std::string> cv_labels;  // e.g. rand10, kfold5
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

ScenarioConfig scenario_from_config(const RunConfig& config);
CvScheme parse_cv_label(const std::string& label, int n_sub);

struct ChartSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // sorted by x before drawing
};

struct ChartFacet {
  std::string name;      // used for the title and the file name
  std::string x_label;
  std::string y_label;
  std::vector<ChartSeries> series;
};

// Static SVG line chart: one polyline per series, legend, axis ticks. No
// scripts, deterministic text. Throws on an empty facet.
void render_chart(const ChartFacet& facet, std::ostream& out);
void render_chart(const ChartFacet& facet, const std::string& path);

struct SummaryRow {
  std::string metric_name;
  std::string cv_scheme;
  std::string strategy;
  std::string estimator;
  double x = 0.0;
  double mean_value = 0.0;
  int count = 0;
};

// Per-strategy means of `value` against the chosen x field ("r", "r_val" or
// "snr_or_mu"), one group per (metric, cv scheme, strategy, estimator).
std::vector<SummaryRow> summarize_metrics(const std::vector<MetricRow>& rows,
                                          const std::string& x_field);

// Facets the summary like the appendix figures: one facet per (metric,
// cv scheme, strategy family), one line per (strategy, estimator).
std::vector<ChartFacet> build_report_facets(const std::vector<SummaryRow>& summary,
                                            const std::string& x_field);

void write_summary_csv(const std::vector<SummaryRow>& summary, const std::string& x_field,
                       std::ostream& out);

}  // namespace robustval
