#include "fedboost/cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace fedboost::cli {

namespace {

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"mae", "mse", "rmse", "mape", "r2"};
  return names;
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error("'" + path.string() + "' is empty");

  std::vector<MetricRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_cells(line);
    if (cells.size() != 9)
      throw Error("'" + path.string() + "': expected 9 columns, got " +
                  std::to_string(cells.size()));
    MetricRow row;
    row.run_id = cells[0];
    row.round = std::stoll(cells[1]);
    row.scope = cells[2];
    const char* names[] = {"mae", "mse", "rmse", "mape", "r2"};
    for (std::size_t m = 0; m < 5; ++m) {
      const std::string& cell = cells[3 + m];
      row.values[names[m]] = cell.empty() ? std::nullopt : parse_real(cell);
    }
    row.n = static_cast<std::size_t>(std::stoll(cells[8]));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

// series[scope][round] = mean over seeds (absent when no seed had a value)
struct MetricSeries {
  std::vector<std::string> scopes;                       // display order
  std::vector<std::int64_t> rounds;                      // ascending
  std::map<std::string, std::map<std::int64_t, double>> points;
  std::optional<double> baseline;
};

std::string format_value(double v) { return real_to_string(v); }

std::string svg_chart(const std::string& metric, const MetricSeries& series) {
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  const double width = 760, height = 480;
  const double left = 80, right = width - 190, top = 48, bottom = height - 56;

  double ymin = series.baseline ? *series.baseline : std::numeric_limits<double>::infinity();
  double ymax = series.baseline ? *series.baseline : -std::numeric_limits<double>::infinity();
  for (const auto& [scope, pts] : series.points)
    for (const auto& [round, v] : pts) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  if (!std::isfinite(ymin)) {
    ymin = 0;
    ymax = 1;
  }
  if (ymin == ymax) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double pad = (ymax - ymin) * 0.06;
  ymin -= pad;
  ymax += pad;

  const double xmin = static_cast<double>(series.rounds.front());
  const double xmax = static_cast<double>(series.rounds.back());
  const double xspan = xmax > xmin ? xmax - xmin : 1.0;

  auto sx = [&](double round) { return left + (round - xmin) / xspan * (right - left); };
  auto sy = [&](double v) { return bottom - (v - ymin) / (ymax - ymin) * (bottom - top); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << (left + right) / 2 << "\" y=\"26\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"17\" font-weight=\"bold\">"
      << metric << " by round</text>\n";

  // y gridlines and labels
  for (int i = 0; i <= 5; ++i) {
    const double v = ymin + (ymax - ymin) * i / 5.0;
    const double y = sy(v);
    svg << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << right << "\" y2=\"" << y
        << "\" stroke=\"#dddddd\"/>\n";
    char label[40];
    std::snprintf(label, sizeof(label), "%.4g", v);
    svg << "<text x=\"" << left - 8 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << label
        << "</text>\n";
  }
  // x ticks at integer rounds (thinned when many)
  const std::size_t stride = series.rounds.size() > 14 ? series.rounds.size() / 10 : 1;
  for (std::size_t i = 0; i < series.rounds.size(); i += stride) {
    const double x = sx(static_cast<double>(series.rounds[i]));
    svg << "<line x1=\"" << x << "\" y1=\"" << bottom << "\" x2=\"" << x << "\" y2=\""
        << bottom + 5 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << x << "\" y=\"" << bottom + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << series.rounds[i] << "</text>\n";
  }
  svg << "<text x=\"" << (left + right) / 2 << "\" y=\"" << height - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">round</text>\n";
  // axes
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\""
      << bottom << "\" stroke=\"black\"/>\n";

  double legend_y = top + 6;
  auto legend_entry = [&](const std::string& label, const std::string& color, bool dashed) {
    svg << "<line x1=\"" << right + 14 << "\" y1=\"" << legend_y << "\" x2=\"" << right + 38
        << "\" y2=\"" << legend_y << "\" stroke=\"" << color << "\" stroke-width=\"2\""
        << (dashed ? " stroke-dasharray=\"6 3\"" : "") << "/>\n";
    svg << "<text x=\"" << right + 44 << "\" y=\"" << legend_y + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << label << "</text>\n";
    legend_y += 20;
  };

  std::size_t color_index = 0;
  for (const std::string& scope : series.scopes) {
    const std::string color = palette[color_index++ % 8];
    const auto& pts = series.points.at(scope);
    // polyline segments, broken at missing rounds
    std::ostringstream seg;
    bool open = false;
    auto flush = [&] {
      if (open)
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\""
            << seg.str() << "\"/>\n";
      seg.str("");
      open = false;
    };
    for (const std::int64_t round : series.rounds) {
      const auto it = pts.find(round);
      if (it == pts.end()) {
        flush();
        continue;
      }
      seg << sx(static_cast<double>(round)) << ',' << sy(it->second) << ' ';
      open = true;
    }
    flush();
    for (const auto& [round, v] : pts)
      svg << "<circle cx=\"" << sx(static_cast<double>(round)) << "\" cy=\"" << sy(v)
          << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    legend_entry(scope, color, false);
  }

  if (series.baseline) {
    const double y = sy(*series.baseline);
    svg << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << right << "\" y2=\"" << y
        << "\" stroke=\"#444444\" stroke-width=\"2\" stroke-dasharray=\"6 3\"/>\n";
    legend_entry("baseline", "#444444", true);
  }

  svg << "</svg>\n";
  return svg.str();
}

}  // namespace

std::vector<std::filesystem::path> plot_run(const std::filesystem::path& run_dir,
                                            const std::filesystem::path& figures_dir) {
  const std::filesystem::path manifest_path = run_dir / "manifest.json";
  std::ifstream manifest_in(manifest_path);
  if (!manifest_in) throw Error("not a run directory: missing " + manifest_path.string());
  nlohmann::ordered_json manifest =
      nlohmann::ordered_json::parse(manifest_in, nullptr, false);
  if (manifest.is_discarded() || !manifest.contains("seeds"))
    throw Error("malformed manifest " + manifest_path.string());

  std::vector<std::int64_t> seeds;
  for (const auto& s : manifest.at("seeds")) seeds.push_back(s.get<std::int64_t>());

  // Gather expected inputs first so the error can list everything at once.
  std::vector<std::filesystem::path> round_files;
  std::vector<std::string> missing;
  for (const std::int64_t seed : seeds) {
    const auto path = run_dir / ("seed-" + std::to_string(seed)) / "rounds.csv";
    if (!std::filesystem::exists(path)) missing.push_back(path.string());
    round_files.push_back(path);
  }
  const auto baseline_path = run_dir / "baseline" / "metrics.csv";
  const bool has_baseline = std::filesystem::exists(baseline_path);
  if (!missing.empty()) {
    std::string detail = "missing round CSVs:";
    for (const auto& m : missing) detail += "\n  " + m;
    throw Error(detail);
  }

  std::vector<std::vector<MetricRow>> per_seed;
  per_seed.reserve(round_files.size());
  for (const auto& path : round_files) per_seed.push_back(read_metrics_csv(path));

  std::optional<std::vector<MetricRow>> baseline_rows;
  if (has_baseline) baseline_rows = read_metrics_csv(baseline_path);

  // Scope and round axes from the first seed's file order.
  std::vector<std::string> scopes;
  std::set<std::int64_t> round_set;
  for (const MetricRow& row : per_seed.front()) {
    if (std::find(scopes.begin(), scopes.end(), row.scope) == scopes.end())
      scopes.push_back(row.scope);
    round_set.insert(row.round);
  }
  const std::vector<std::int64_t> rounds(round_set.begin(), round_set.end());

  std::filesystem::create_directories(figures_dir);
  std::vector<std::filesystem::path> written;

  for (const std::string& metric : metric_names()) {
    MetricSeries series;
    series.scopes = scopes;
    series.rounds = rounds;
    for (const std::string& scope : scopes) {
      for (const std::int64_t round : rounds) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& rows : per_seed)
          for (const MetricRow& row : rows)
            if (row.scope == scope && row.round == round) {
              const auto v = row.values.at(metric);
              if (v) {
                sum += *v;
                ++count;
              }
            }
        if (count > 0) series.points[scope][round] = sum / static_cast<double>(count);
      }
      series.points.try_emplace(scope);
    }
    if (baseline_rows && !baseline_rows->empty()) {
      const auto v = baseline_rows->front().values.at(metric);
      if (v) series.baseline = *v;
    }

    // Averaged CSV behind the figure.
    std::string csv = "round";
    for (const std::string& scope : scopes) csv += "," + scope;
    if (has_baseline) csv += ",baseline";
    csv += "\n";
    for (const std::int64_t round : rounds) {
      csv += std::to_string(round);
      for (const std::string& scope : scopes) {
        csv += ",";
        const auto& pts = series.points.at(scope);
        const auto it = pts.find(round);
        if (it != pts.end()) csv += format_value(it->second);
      }
      if (has_baseline) {
        csv += ",";
        if (series.baseline) csv += format_value(*series.baseline);
      }
      csv += "\n";
    }

    const auto csv_path = figures_dir / (metric + "_mean.csv");
    const auto svg_path = figures_dir / (metric + ".svg");
    std::ofstream csv_out(csv_path, std::ios::binary);
    csv_out << csv;
    if (!csv_out) throw Error("cannot write " + csv_path.string());
    std::ofstream svg_out(svg_path, std::ios::binary);
    svg_out << svg_chart(metric, series);
    if (!svg_out) throw Error("cannot write " + svg_path.string());
    written.push_back(csv_path);
    written.push_back(svg_path);
  }
  return written;
}

}  // namespace fedboost::cli
