#include "maner/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace maner {

namespace {

constexpr const char* kReferenceTable1 =
    "# reference (XLM-RoBERTa-large on WikiANN, 100-sample languages): baseline1 0.649, "
    "baseline2 0.643 (-0.5%), maner-mask 0.715 (+12%). Desk-scale numbers are not comparable; "
    "shown for direction only.";
constexpr const char* kReferenceTable2 =
    "# reference (XLM-RoBERTa-large on WikiANN): baseline1 0.649, maner-mask 0.715 (+12%), "
    "maner-rand 0.679 (+6%). Desk-scale numbers are not comparable; shown for direction only.";
constexpr const char* kReferenceTable3 =
    "# reference (XLM-RoBERTa-large on WikiANN, languages with >= 0.5GB pretraining text): "
    "baseline1 0.603, maner-mask 0.705 (+18%), vs +12% over all languages. Desk-scale numbers "
    "are not comparable; shown for direction only.";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') {
    fields.emplace_back();
  }
  return fields;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  return out;
}

double parse_double(const std::string& s, const std::string& path) {
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw IoError(path + ": bad numeric field '" + s + "'");
  }
}

uint64_t parse_u64(const std::string& s, const std::string& path) {
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw IoError(path + ": bad integer field '" + s + "'");
  }
}

struct StrategyAggregate {
  std::string strategy;
  double mean = 0.0;
  size_t languages = 0;
};

std::vector<StrategyAggregate> aggregate(const std::vector<RunResult>& rows,
                                         std::optional<bool> covered = std::nullopt) {
  // preserve first-appearance strategy order
  std::vector<std::string> order;
  std::map<std::string, std::pair<double, size_t>> sums;
  for (const auto& row : rows) {
    if (covered.has_value() && row.covered != *covered) {
      continue;
    }
    if (sums.count(row.strategy) == 0) {
      order.push_back(row.strategy);
    }
    auto& [total, count] = sums[row.strategy];
    total += row.eval.f1;
    ++count;
  }
  std::vector<StrategyAggregate> out;
  for (const auto& name : order) {
    const auto& [total, count] = sums[name];
    out.push_back({name, count == 0 ? 0.0 : total / static_cast<double>(count), count});
  }
  return out;
}

std::optional<double> baseline1_mean(const std::vector<StrategyAggregate>& aggs) {
  for (const auto& a : aggs) {
    if (a.strategy == "baseline1") {
      return a.mean;
    }
  }
  return std::nullopt;  // deltas are omitted without a baseline1 column
}

std::string svg_escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

constexpr const char* kStrategyColors[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52",
                                           "#8172b3", "#937860"};

}  // namespace

std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void write_report_csv(const std::string& path, const std::vector<RunResult>& rows,
                      const std::string& config_digest) {
  std::ofstream out = open_out(path);
  out << "# config_digest=" << config_digest << "\n";
  out << "language,language_seed,strategy,run_seed,covered,precision,recall,f1,"
         "tp_PER,pred_PER,gold_PER,tp_LOC,pred_LOC,gold_LOC,tp_ORG,pred_ORG,gold_ORG,"
         "sentences\n";
  for (const auto& r : rows) {
    out << r.language << ',' << r.language_seed << ',' << r.strategy << ',' << r.run_seed << ','
        << (r.covered ? 1 : 0) << ',' << csv_number(r.eval.precision) << ','
        << csv_number(r.eval.recall) << ',' << csv_number(r.eval.f1);
    for (const auto& c : r.eval.per_type) {
      out << ',' << c.true_positive << ',' << c.predicted << ',' << c.gold;
    }
    out << ',' << r.eval.sentences << "\n";
  }
  if (!out) {
    throw IoError("failed writing '" + path + "'");
  }
}

std::vector<RunResult> read_report_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path + "'");
  }
  std::vector<RunResult> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') {
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 18) {
      throw IoError(path + ": expected 18 fields, got " + std::to_string(f.size()));
    }
    RunResult r;
    r.language = f[0];
    r.language_seed = parse_u64(f[1], path);
    r.strategy = f[2];
    r.run_seed = parse_u64(f[3], path);
    r.covered = f[4] == "1";
    r.eval.precision = parse_double(f[5], path);
    r.eval.recall = parse_double(f[6], path);
    r.eval.f1 = parse_double(f[7], path);
    for (int t = 0; t < kNumEntityTypes; ++t) {
      auto& c = r.eval.per_type[static_cast<size_t>(t)];
      c.true_positive = parse_u64(f[static_cast<size_t>(8 + t * 3)], path);
      c.predicted = parse_u64(f[static_cast<size_t>(9 + t * 3)], path);
      c.gold = parse_u64(f[static_cast<size_t>(10 + t * 3)], path);
    }
    r.eval.sentences = parse_u64(f[17], path);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepResult>& rows,
                     const std::string& config_digest) {
  std::ofstream out = open_out(path);
  out << "# config_digest=" << config_digest << "\n";
  out << "language,language_seed,strategy,run_seed,train_size,f1\n";
  for (const auto& r : rows) {
    out << r.language << ',' << r.language_seed << ',' << r.strategy << ',' << r.run_seed << ','
        << r.train_size << ',' << csv_number(r.f1) << "\n";
  }
  if (!out) {
    throw IoError("failed writing '" + path + "'");
  }
}

std::vector<SweepResult> read_sweep_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path + "'");
  }
  std::vector<SweepResult> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') {
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 6) {
      throw IoError(path + ": expected 6 fields, got " + std::to_string(f.size()));
    }
    SweepResult r;
    r.language = f[0];
    r.language_seed = parse_u64(f[1], path);
    r.strategy = f[2];
    r.run_seed = parse_u64(f[3], path);
    r.train_size = static_cast<int>(parse_u64(f[4], path));
    r.f1 = parse_double(f[5], path);
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

void emit_rows(std::ofstream& out, const std::vector<StrategyAggregate>& aggs,
               const std::string& group_prefix) {
  const std::optional<double> base = baseline1_mean(aggs);
  for (const auto& a : aggs) {
    out << group_prefix << a.strategy << ',' << a.languages << ',' << csv_number(a.mean);
    if (base.has_value()) {
      const double delta = a.mean - *base;
      const double rel = *base == 0.0 ? 0.0 : delta / *base;
      out << ',' << csv_number(delta) << ',' << csv_number(rel);
    } else {
      out << ",,";
    }
    out << "\n";
  }
}

void write_strategy_table(const std::string& path, const std::vector<RunResult>& rows,
                          const char* footer) {
  const auto aggs = aggregate(rows);
  std::ofstream out = open_out(path);
  out << "strategy,languages,mean_f1,delta_vs_baseline1,relative_delta\n";
  emit_rows(out, aggs, "");
  out << footer << "\n";
  if (!out) {
    throw IoError("failed writing '" + path + "'");
  }
}

}  // namespace

void write_table1_csv(const std::string& path, const std::vector<RunResult>& rows) {
  write_strategy_table(path, rows, kReferenceTable1);
}

void write_table2_csv(const std::string& path, const std::vector<RunResult>& rows) {
  write_strategy_table(path, rows, kReferenceTable2);
}

void write_table3_csv(const std::string& path, const std::vector<RunResult>& rows) {
  std::ofstream out = open_out(path);
  out << "group,strategy,languages,mean_f1,delta_vs_baseline1,relative_delta\n";
  emit_rows(out, aggregate(rows, true), "covered,");
  emit_rows(out, aggregate(rows, false), "uncovered,");
  out << kReferenceTable3 << "\n";
  if (!out) {
    throw IoError("failed writing '" + path + "'");
  }
}

void write_fig2_svg(const std::string& svg_path, const std::string& report_csv_path) {
  const std::vector<RunResult> rows = read_report_csv(report_csv_path);
  if (rows.empty()) {
    throw Error("fig2: report has no rows");
  }
  std::vector<std::string> languages, strategies;
  std::map<std::pair<std::string, std::string>, double> f1;
  for (const auto& r : rows) {
    if (std::find(languages.begin(), languages.end(), r.language) == languages.end()) {
      languages.push_back(r.language);
    }
    if (std::find(strategies.begin(), strategies.end(), r.strategy) == strategies.end()) {
      strategies.push_back(r.strategy);
    }
    f1[{r.language, r.strategy}] = r.eval.f1;
  }

  const double bar_w = 10.0;
  const double group_gap = 8.0;
  const double group_w = bar_w * static_cast<double>(strategies.size()) + group_gap;
  const double plot_h = 240.0;
  const double left = 50.0, top = 30.0, bottom = 60.0;
  const double width = left + group_w * static_cast<double>(languages.size()) + 180.0;
  const double height = top + plot_h + bottom;

  std::ofstream out = open_out(svg_path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  out << "<text x=\"" << left << "\" y=\"16\" font-size=\"13\">Span F1 per language by "
         "strategy</text>\n";
  // y axis: 0..1 with gridlines
  for (int tick = 0; tick <= 10; tick += 2) {
    const double y = top + plot_h - plot_h * tick / 10.0;
    out << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\""
        << left + group_w * static_cast<double>(languages.size()) << "\" y2=\"" << y
        << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << left - 28.0 << "\" y=\"" << y + 3.0 << "\">0." << tick
        << "</text>\n";
  }
  for (size_t li = 0; li < languages.size(); ++li) {
    const double gx = left + group_w * static_cast<double>(li);
    for (size_t si = 0; si < strategies.size(); ++si) {
      const auto it = f1.find({languages[li], strategies[si]});
      if (it == f1.end()) {
        continue;
      }
      const double value = it->second;
      const double h = plot_h * value;
      const double x = gx + bar_w * static_cast<double>(si);
      out << "<rect x=\"" << x << "\" y=\"" << top + plot_h - h << "\" width=\"" << bar_w - 1.0
          << "\" height=\"" << h << "\" fill=\""
          << kStrategyColors[si % (sizeof(kStrategyColors) / sizeof(kStrategyColors[0]))]
          << "\"><title>" << svg_escape(languages[li]) << " " << svg_escape(strategies[si])
          << " f1=" << csv_number(value) << "</title></rect>\n";
    }
    out << "<text x=\"" << gx + group_w / 2.0 - group_gap / 2.0 << "\" y=\""
        << top + plot_h + 12.0 << "\" text-anchor=\"middle\" transform=\"rotate(45 "
        << gx + group_w / 2.0 - group_gap / 2.0 << " " << top + plot_h + 12.0 << ")\">"
        << svg_escape(languages[li]) << "</text>\n";
  }
  // legend
  const double lx = left + group_w * static_cast<double>(languages.size()) + 16.0;
  for (size_t si = 0; si < strategies.size(); ++si) {
    const double y = top + 16.0 * static_cast<double>(si);
    out << "<rect x=\"" << lx << "\" y=\"" << y << "\" width=\"10\" height=\"10\" fill=\""
        << kStrategyColors[si % (sizeof(kStrategyColors) / sizeof(kStrategyColors[0]))]
        << "\"/>\n";
    out << "<text x=\"" << lx + 14.0 << "\" y=\"" << y + 9.0 << "\">"
        << svg_escape(strategies[si]) << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) {
    throw IoError("failed writing '" + svg_path + "'");
  }
}

void write_fig3_svg(const std::string& svg_path, const std::string& sweep_csv_path) {
  const std::vector<SweepResult> rows = read_sweep_csv(sweep_csv_path);
  if (rows.empty()) {
    throw Error("fig3: sweep has no rows");
  }
  std::vector<int> sizes;
  std::vector<std::string> strategies;
  std::map<std::pair<std::string, int>, std::pair<double, size_t>> sums;
  for (const auto& r : rows) {
    if (std::find(sizes.begin(), sizes.end(), r.train_size) == sizes.end()) {
      sizes.push_back(r.train_size);
    }
    if (std::find(strategies.begin(), strategies.end(), r.strategy) == strategies.end()) {
      strategies.push_back(r.strategy);
    }
    auto& [total, count] = sums[{r.strategy, r.train_size}];
    total += r.f1;
    ++count;
  }
  std::sort(sizes.begin(), sizes.end());

  const double left = 60.0, top = 30.0, plot_w = 420.0, plot_h = 240.0;
  const double width = left + plot_w + 160.0, height = top + plot_h + 50.0;
  const int max_size = sizes.back();

  std::ofstream out = open_out(svg_path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  out << "<text x=\"" << left << "\" y=\"16\" font-size=\"13\">Mean span F1 vs training "
         "samples</text>\n";
  for (int tick = 0; tick <= 10; tick += 2) {
    const double y = top + plot_h - plot_h * tick / 10.0;
    out << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << left + plot_w << "\" y2=\""
        << y << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << left - 28.0 << "\" y=\"" << y + 3.0 << "\">0." << tick
        << "</text>\n";
  }
  auto x_of = [&](int size) {
    return left + plot_w * static_cast<double>(size) / static_cast<double>(max_size);
  };
  for (const int size : sizes) {
    out << "<text x=\"" << x_of(size) << "\" y=\"" << top + plot_h + 16.0
        << "\" text-anchor=\"middle\">" << size << "</text>\n";
  }
  for (size_t si = 0; si < strategies.size(); ++si) {
    const char* color =
        kStrategyColors[si % (sizeof(kStrategyColors) / sizeof(kStrategyColors[0]))];
    std::ostringstream points;
    for (const int size : sizes) {
      const auto it = sums.find({strategies[si], size});
      if (it == sums.end()) {
        continue;
      }
      const double mean = it->second.first / static_cast<double>(it->second.second);
      const double x = x_of(size);
      const double y = top + plot_h - plot_h * mean;
      points << x << "," << y << " ";
      out << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"3\" fill=\"" << color
          << "\"><title>" << svg_escape(strategies[si]) << " n=" << size
          << " mean_f1=" << csv_number(mean) << "</title></circle>\n";
    }
    out << "<polyline points=\"" << points.str() << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    const double ly = top + 16.0 * static_cast<double>(si);
    out << "<rect x=\"" << left + plot_w + 16.0 << "\" y=\"" << ly
        << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n";
    out << "<text x=\"" << left + plot_w + 30.0 << "\" y=\"" << ly + 9.0 << "\">"
        << svg_escape(strategies[si]) << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) {
    throw IoError("failed writing '" + svg_path + "'");
  }
}

void write_curve_csv(const std::string& path, const MlmTrainStats& stats) {
  std::ofstream out = open_out(path);
  out << "epoch,mean_loss\n";
  out << "initial," << csv_number(stats.initial_loss) << "\n";
  for (size_t i = 0; i < stats.epoch_loss.size(); ++i) {
    out << i << ',' << csv_number(stats.epoch_loss[i]) << "\n";
  }
  out << "final," << csv_number(stats.final_loss) << "\n";
  if (!out) {
    throw IoError("failed writing '" + path + "'");
  }
}

}  // namespace maner
