#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "osrlab/expcli.hpp"

namespace osrlab {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text, std::vector<fs::path>& written) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open for writing: " + path.string());
  os << text;
  if (!os) throw Error("write failed: " + path.string());
  written.push_back(path);
}

// Unit square mapped onto a 400x400 plot area with a 60px margin.
std::string coord(double x, double y) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f,%.2f", 60.0 + 400.0 * x, 460.0 - 400.0 * y);
  return buf;
}

const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  return colors[i % 8];
}

std::string svg_frame(const std::string& title, const std::string& xlabel, const std::string& ylabel) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"520\" viewBox=\"0 0 640 520\">\n"
     << "<rect x=\"0\" y=\"0\" width=\"640\" height=\"520\" fill=\"white\"/>\n"
     << "<text x=\"260\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n"
     << "<polyline fill=\"none\" stroke=\"black\" points=\"" << coord(0, 1) << " " << coord(0, 0) << " " << coord(1, 0)
     << "\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = t / 4.0;
    os << "<text x=\"" << coord(v, 0).substr(0, coord(v, 0).find(',')) << "\" y=\"478\" text-anchor=\"middle\" "
       << "font-family=\"sans-serif\" font-size=\"10\">" << format_number(v) << "</text>\n";
    const std::string c = coord(0, v);
    os << "<text x=\"52\" y=\"" << c.substr(c.find(',') + 1) << "\" text-anchor=\"end\" "
       << "font-family=\"sans-serif\" font-size=\"10\">" << format_number(v) << "</text>\n";
  }
  os << "<text x=\"260\" y=\"505\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xlabel
     << "</text>\n"
     << "<text x=\"18\" y=\"260\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
     << "transform=\"rotate(-90 18 260)\">" << ylabel << "</text>\n";
  return os.str();
}

std::string legend(const std::vector<std::string>& names) {
  std::ostringstream os;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = 70.0 + 18.0 * static_cast<double>(i);
    os << "<rect x=\"480\" y=\"" << format_number(y - 9) << "\" width=\"10\" height=\"10\" fill=\"" << palette(i) << "\"/>\n"
       << "<text x=\"496\" y=\"" << format_number(y) << "\" font-family=\"sans-serif\" font-size=\"11\">" << names[i]
       << "</text>\n";
  }
  return os.str();
}

std::vector<std::string> stack_order(const ReportDocument& doc) {
  std::vector<std::string> names;
  for (const auto& s : doc.summaries) names.push_back(s.stack);
  if (names.empty()) {
    for (const auto& c : doc.cells) {
      if (std::find(names.begin(), names.end(), c.stack) == names.end()) names.push_back(c.stack);
    }
  }
  return names;
}

std::string safe_file_part(std::string s) {
  for (char& c : s) {
    if (c == '+') c = '_';
  }
  return s;
}

std::string optional_cell(std::optional<double> v) { return v ? format_number(*v) : ""; }

}  // namespace

std::vector<fs::path> write_report(const ReportDocument& doc, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  const auto names = stack_order(doc);
  const auto& metrics = summary_metric_names();

  write_text(dir / "report.json", report_to_json(doc).dump(2) + "\n", written);

  {
    std::ostringstream os;
    os << "stack,metric,mean,stddev,count\n";
    for (const auto& s : doc.summaries) {
      for (const auto& m : metrics) {
        auto it = s.metrics.find(m);
        if (it == s.metrics.end()) continue;
        os << s.stack << ',' << m << ',' << format_number(it->second.mean) << ',' << format_number(it->second.stddev)
           << ',' << it->second.count << '\n';
      }
    }
    write_text(dir / "summary.csv", os.str(), written);
  }

  for (const auto& m : metrics) {
    std::ostringstream os;
    os << "statistic";
    for (const auto& n : names) os << ',' << n;
    os << '\n';
    for (const char* stat : {"mean", "std"}) {
      os << stat;
      for (const auto& s : doc.summaries) {
        auto it = s.metrics.find(m);
        os << ',';
        if (it != s.metrics.end()) os << format_number(stat[0] == 'm' ? it->second.mean : it->second.stddev);
      }
      os << '\n';
    }
    write_text(dir / ("table_" + m + ".csv"), os.str(), written);
  }

  {
    std::ostringstream os;
    os << "stack,seed,status";
    for (const auto& m : metrics) os << ',' << m;
    os << ",error\n";
    for (const auto& c : doc.cells) {
      os << c.stack << ',' << c.seed << ',' << (c.report ? "ok" : "failed");
      for (const auto& m : metrics) os << ',' << (c.report ? optional_cell(metric_value(*c.report, m)) : "");
      std::string err = c.error;
      for (char& ch : err) {
        if (ch == ',' || ch == '\n') ch = ' ';
      }
      os << ',' << err << '\n';
    }
    write_text(dir / "cells.csv", os.str(), written);
  }

  {
    std::ostringstream os;
    os << svg_frame("Closed-set accuracy vs AUROC", "closed-set accuracy", "AUROC");
    for (const auto& c : doc.cells) {
      if (!c.report || !c.report->closed_accuracy) continue;
      const auto idx = static_cast<std::size_t>(std::find(names.begin(), names.end(), c.stack) - names.begin());
      const std::string p = coord(*c.report->closed_accuracy, c.report->auroc);
      os << "<circle cx=\"" << p.substr(0, p.find(',')) << "\" cy=\"" << p.substr(p.find(',') + 1)
         << "\" r=\"4\" fill=\"" << palette(idx) << "\"/>\n";
    }
    os << legend(names) << "</svg>\n";
    write_text(dir / "scatter_accuracy_auroc.svg", os.str(), written);
  }

  for (std::size_t i = 0; i < names.size(); ++i) {
    std::ostringstream os;
    os << svg_frame("ROC: " + names[i], "false-positive rate", "true-positive rate");
    os << "<polyline fill=\"none\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 4\" points=\"" << coord(0, 0) << " "
       << coord(1, 1) << "\"/>\n";
    std::vector<std::string> seeds;
    std::size_t k = 0;
    for (const auto& c : doc.cells) {
      if (c.stack != names[i] || !c.report) continue;
      os << "<polyline fill=\"none\" stroke=\"" << palette(k) << "\" points=\"";
      for (std::size_t p = 0; p < c.report->roc.points.size(); ++p) {
        if (p) os << ' ';
        os << coord(c.report->roc.points[p].x, c.report->roc.points[p].y);
      }
      os << "\"/>\n";
      seeds.push_back("seed " + std::to_string(c.seed));
      ++k;
    }
    os << legend(seeds) << "</svg>\n";
    write_text(dir / ("roc_" + safe_file_part(names[i]) + ".svg"), os.str(), written);
  }
  return written;
}

}  // namespace osrlab
