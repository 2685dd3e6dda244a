#include "robustval/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>  // vendored nlohmann/json

namespace robustval {

namespace {

double parse_double_field(std::string_view field, const std::string& what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw std::invalid_argument("metrics CSV: bad " + what + " field '" +
                                std::string(field) + "'");
  return v;
}

int parse_int_field(std::string_view field, const std::string& what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw std::invalid_argument("metrics CSV: bad " + what + " field '" +
                                std::string(field) + "'");
  return v;
}

void check_csv_safe(const std::string& s, const char* what) {
  if (s.find(',') != std::string::npos || s.find('\n') != std::string::npos)
    throw std::invalid_argument(std::string("metrics CSV: ") + what +
                                " contains a comma or newline: '" + s + "'");
}

std::vector<std::string_view> split_fields(const std::string& line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(std::string_view(line).substr(start));
      break;
    }
    fields.push_back(std::string_view(line).substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::vector<double> parse_double_list(const std::string& value, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(parse_double_field(item, "config key " + key));
  return out;
}

std::vector<std::string> parse_string_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void apply_config_key(RunConfig& config, const std::string& key,
                      const std::string& value) {
  if (key == "preset") {
    config.preset = value;
  } else if (key == "seed" || key == "master_seed") {
    config.master_seed = std::stoull(value);
  } else if (key == "out") {
    config.out = value;
  } else if (key == "reps" || key == "repetitions") {
    config.repetitions = parse_int_field(value, "config key " + key);
  } else if (key == "threads") {
    config.threads = parse_int_field(value, "config key " + key);
  } else if (key == "snr") {
    config.snr = parse_double_field(value, "config key snr");
  } else if (key == "mu") {
    config.mu = parse_double_field(value, "config key mu");
  } else if (key == "contam") {
    config.contam = value;
  } else if (key == "lambda") {
    config.lambda = parse_double_field(value, "config key lambda");
  } else if (key == "gross") {
    config.gross = parse_double_field(value, "config key gross");
  } else if (key == "r_grid") {
    config.r_grid = parse_double_list(value, key);
  } else if (key == "r_val_grid") {
    config.r_val_grid = parse_double_list(value, key);
  } else if (key == "cv") {
    config.cv_labels = parse_string_list(value);
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

std::string trim_ws(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

RunConfig parse_config_json(const std::string& text) {
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  if (!parsed.is_object()) throw std::invalid_argument("config: JSON root must be an object");
  RunConfig config;
  for (const auto& [key, value] : parsed.items()) {
    std::string as_text;
    if (value.is_string()) {
      as_text = value.get<std::string>();
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& item : value) {
        if (!joined.empty()) joined += ',';
        joined += item.is_string() ? item.get<std::string>() : item.dump();
      }
      as_text = joined;
    } else {
      as_text = value.dump();
    }
    apply_config_key(config, key, as_text);
  }
  return config;
}

}  // namespace

std::string format_double17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_metrics_csv(std::vector<MetricRow> rows, std::ostream& out) {
  sort_rows(rows);
  out << kMetricsCsvHeader << '\n';
  for (const MetricRow& r : rows) {
    check_csv_safe(r.scenario_id, "scenario_id");
    check_csv_safe(r.task, "task");
    check_csv_safe(r.contam_scheme, "contam_scheme");
    check_csv_safe(r.estimator, "estimator");
    check_csv_safe(r.strategy, "strategy");
    check_csv_safe(r.cv_scheme, "cv_scheme");
    check_csv_safe(r.metric_name, "metric_name");
    out << r.scenario_id << ',' << r.task << ',' << r.contam_scheme << ','
        << r.estimator << ',' << r.strategy << ',' << r.cv_scheme << ','
        << format_double17(r.r) << ',' << format_double17(r.r_val) << ','
        << format_double17(r.snr_or_mu) << ',' << r.repetition << ','
        << r.metric_name << ',' << format_double17(r.value) << '\n';
  }
}

void write_metrics_csv(std::vector<MetricRow> rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open '" + path + "' for writing");
  write_metrics_csv(std::move(rows), out);
}

std::vector<MetricRow> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsCsvHeader)
    throw std::invalid_argument("metrics CSV: missing or unexpected header");
  std::vector<MetricRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string_view> f = split_fields(line);
    if (f.size() != 12)
      throw std::invalid_argument("metrics CSV: row has " + std::to_string(f.size()) +
                                  " fields, expected 12");
    MetricRow row;
    row.scenario_id = std::string(f[0]);
    row.task = std::string(f[1]);
    row.contam_scheme = std::string(f[2]);
    row.estimator = std::string(f[3]);
    row.strategy = std::string(f[4]);
    row.cv_scheme = std::string(f[5]);
    row.r = parse_double_field(f[6], "r");
    row.r_val = parse_double_field(f[7], "r_val");
    row.snr_or_mu = parse_double_field(f[8], "snr_or_mu");
    row.repetition = parse_int_field(f[9], "repetition");
    row.metric_name = std::string(f[10]);
    row.value = parse_double_field(f[11], "value");
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<MetricRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "': no such file");
  return read_metrics_csv(in);
}

RunConfig parse_config_text(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return parse_config_json(text);

  RunConfig config;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    line = trim_ws(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key=value, got '" + line + "'");
    apply_config_key(config, trim_ws(line.substr(0, eq)), trim_ws(line.substr(eq + 1)));
  }
  return config;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "': no such file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

ScenarioConfig scenario_from_config(const RunConfig& config) {
  ScenarioConfig cfg = preset(config.preset);
  if (config.snr.has_value()) {
    if (cfg.task != Task::regression)
      throw std::invalid_argument("config: key 'snr' applies to regression presets only");
    cfg.snr = *config.snr;
  }
  if (config.mu.has_value()) cfg.mu = *config.mu;
  if (config.contam.has_value()) cfg.contam_scheme = contam_scheme_from_string(*config.contam);
  if (config.gross.has_value()) cfg.gross_value = *config.gross;
  if (config.repetitions > 0) cfg.repetitions = config.repetitions;
  cfg.validate();
  return cfg;
}

CvScheme parse_cv_label(const std::string& label, int n_sub) {
  const auto parse_count = [&](std::size_t prefix_len) {
    const std::string digits = label.substr(prefix_len);
    if (digits.empty()) throw std::invalid_argument("config: bad cv label '" + label + "'");
    return parse_int_field(digits, "cv label " + label);
  };
  if (label.rfind("rand", 0) == 0)
    return CvScheme{CvScheme::Kind::randomized, parse_count(4), n_sub};
  if (label.rfind("kfold", 0) == 0)
    return CvScheme{CvScheme::Kind::kfold, parse_count(5), 0};
  throw std::invalid_argument("config: bad cv label '" + label +
                              "' (expected randB or kfoldK)");
}

// ---------------------------------------------------------------------------
// Charts

namespace {

const char* kPalette[] = {"#000000", "#2ca02c", "#d62728", "#1f77b4",
                          "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
                          "#7f7f7f", "#bcbd22", "#17becf"};

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

// Strategy family for faceting: base method without the trimmed marker or
// any /key=value qualifiers.
std::string strategy_family(const std::string& strategy) {
  std::string family = strategy.substr(0, strategy.find('/'));
  const std::string suffix = "_trimmed";
  if (family.size() > suffix.size() &&
      family.compare(family.size() - suffix.size(), suffix.size(), suffix) == 0)
    family.resize(family.size() - suffix.size());
  return family;
}

double x_of(const MetricRow& row, const std::string& x_field) {
  if (x_field == "r") return row.r;
  if (x_field == "r_val") return row.r_val;
  if (x_field == "snr_or_mu") return row.snr_or_mu;
  throw std::invalid_argument("report: unknown x field '" + x_field +
                              "' (expected r, r_val or snr_or_mu)");
}

}  // namespace

void render_chart(const ChartFacet& facet, std::ostream& out) {
  if (facet.series.empty())
    throw std::invalid_argument("render_chart: facet '" + facet.name + "' has no series");
  for (const ChartSeries& s : facet.series)
    if (s.points.empty())
      throw std::invalid_argument("render_chart: series '" + s.label + "' has no points");

  double x_min = facet.series[0].points[0].first, x_max = x_min;
  double y_min = facet.series[0].points[0].second, y_max = y_min;
  for (const ChartSeries& s : facet.series)
    for (const auto& [x, y] : s.points) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  if (x_max - x_min < 1e-12) {
    x_min -= 0.5;
    x_max += 0.5;
  }
  if (y_max - y_min < 1e-12) {
    y_min -= 0.5;
    y_max += 0.5;
  }

  const double width = 640.0, height = 420.0;
  const double left = 70.0, right = 180.0, top = 40.0, bottom = 50.0;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  const auto px = [&](double x) { return left + (x - x_min) / (x_max - x_min) * plot_w; };
  const auto py = [&](double y) {
    return top + plot_h - (y - y_min) / (y_max - y_min) * plot_h;
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' ' << height
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << fmt2(left) << "\" y=\"22\" font-family=\"sans-serif\" "
         "font-size=\"14\">"
      << xml_escape(facet.name) << "</text>\n";

  // Axes and ticks.
  out << "<line x1=\"" << fmt2(left) << "\" y1=\"" << fmt2(top + plot_h) << "\" x2=\""
      << fmt2(left + plot_w) << "\" y2=\"" << fmt2(top + plot_h)
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << fmt2(left) << "\" y1=\"" << fmt2(top) << "\" x2=\""
      << fmt2(left) << "\" y2=\"" << fmt2(top + plot_h) << "\" stroke=\"black\"/>\n";
  const int ticks = 5;
  for (int t = 0; t <= ticks; ++t) {
    const double fx = x_min + (x_max - x_min) * t / ticks;
    const double fy = y_min + (y_max - y_min) * t / ticks;
    out << "<line x1=\"" << fmt2(px(fx)) << "\" y1=\"" << fmt2(top + plot_h)
        << "\" x2=\"" << fmt2(px(fx)) << "\" y2=\"" << fmt2(top + plot_h + 5)
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << fmt2(px(fx)) << "\" y=\"" << fmt2(top + plot_h + 18)
        << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">"
        << fmt_tick(fx) << "</text>\n";
    out << "<line x1=\"" << fmt2(left - 5) << "\" y1=\"" << fmt2(py(fy)) << "\" x2=\""
        << fmt2(left) << "\" y2=\"" << fmt2(py(fy)) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << fmt2(left - 8) << "\" y=\"" << fmt2(py(fy) + 3)
        << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">"
        << fmt_tick(fy) << "</text>\n";
  }
  out << "<text x=\"" << fmt2(left + plot_w / 2) << "\" y=\"" << fmt2(height - 12)
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">"
      << xml_escape(facet.x_label) << "</text>\n";
  out << "<text x=\"16\" y=\"" << fmt2(top + plot_h / 2)
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 16 "
      << fmt2(top + plot_h / 2) << ")\">" << xml_escape(facet.y_label) << "</text>\n";

  for (std::size_t s = 0; s < facet.series.size(); ++s) {
    const char* color = kPalette[s % (sizeof kPalette / sizeof kPalette[0])];
    std::vector<std::pair<double, double>> pts = facet.series[s].points;
    std::sort(pts.begin(), pts.end());
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i > 0) out << ' ';
      out << fmt2(px(pts[i].first)) << ',' << fmt2(py(pts[i].second));
    }
    out << "\"/>\n";
    for (const auto& [x, y] : pts)
      out << "<circle cx=\"" << fmt2(px(x)) << "\" cy=\"" << fmt2(py(y))
          << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    const double ly = top + 14.0 * static_cast<double>(s);
    out << "<rect x=\"" << fmt2(left + plot_w + 12) << "\" y=\"" << fmt2(ly)
        << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n";
    out << "<text x=\"" << fmt2(left + plot_w + 26) << "\" y=\"" << fmt2(ly + 9)
        << "\" font-family=\"sans-serif\" font-size=\"10\">"
        << xml_escape(facet.series[s].label) << "</text>\n";
  }
  out << "</svg>\n";
}

void render_chart(const ChartFacet& facet, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open '" + path + "' for writing");
  render_chart(facet, out);
}

std::vector<SummaryRow> summarize_metrics(const std::vector<MetricRow>& rows,
                                          const std::string& x_field) {
  std::map<std::tuple<std::string, std::string, std::string, std::string, double>,
           std::pair<double, int>>
      groups;
  for (const MetricRow& row : rows) {
    auto& acc = groups[{row.metric_name, row.cv_scheme, row.strategy, row.estimator,
                        x_of(row, x_field)}];
    acc.first += row.value;
    acc.second += 1;
  }
  std::vector<SummaryRow> out;
  out.reserve(groups.size());
  for (const auto& [key, acc] : groups) {
    SummaryRow s;
    std::tie(s.metric_name, s.cv_scheme, s.strategy, s.estimator, s.x) = key;
    s.mean_value = acc.first / static_cast<double>(acc.second);
    s.count = acc.second;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ChartFacet> build_report_facets(const std::vector<SummaryRow>& summary,
                                            const std::string& x_field) {
  std::map<std::string, std::map<std::string, ChartSeries>> facets;
  for (const SummaryRow& s : summary) {
    const std::string facet_name =
        s.metric_name + " | " + s.cv_scheme + " | " + strategy_family(s.strategy);
    const std::string line = s.strategy + " : " + s.estimator;
    ChartSeries& series = facets[facet_name][line];
    series.label = line;
    series.points.emplace_back(s.x, s.mean_value);
  }
  std::vector<ChartFacet> out;
  for (auto& [name, lines] : facets) {
    ChartFacet facet;
    facet.name = name;
    facet.x_label = x_field;
    facet.y_label = "mean value";
    for (auto& [_, series] : lines) facet.series.push_back(std::move(series));
    out.push_back(std::move(facet));
  }
  return out;
}

void write_summary_csv(const std::vector<SummaryRow>& summary,
                       const std::string& x_field, std::ostream& out) {
  out << "metric_name,cv_scheme,strategy,estimator," << x_field << ",mean_value,count\n";
  for (const SummaryRow& s : summary)
    out << s.metric_name << ',' << s.cv_scheme << ',' << s.strategy << ','
        << s.estimator << ',' << format_double17(s.x) << ','
        << format_double17(s.mean_value) << ',' << s.count << '\n';
}

}  // namespace robustval
