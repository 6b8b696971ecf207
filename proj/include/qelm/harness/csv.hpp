#pragma once

#include "qelm/harness/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace qelm {

inline constexpr const char* kCsvHeader =
    "task,fixed_param,fixed_value,step,extension,nmse_mean,nmse_std,n_realizations";

/// Ten significant digits, locale independent.
inline std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// Rows in canonical order (task, fixed value, step, extension name).
inline std::string format_csv(std::vector<NmseResult> results) {
  std::sort(results.begin(), results.end(), result_order);
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& r : results) {
    out += to_string(r.task);
    out += ',' + r.fixed_param;
    out += ',' + format_real(r.fixed_value);
    out += ',' + std::to_string(r.step);
    out += ',' + r.extension;
    out += ',' + format_real(r.nmse_mean);
    out += ',' + format_real(r.nmse_std);
    out += ',' + std::to_string(r.n_realizations);
    out += '\n';
  }
  return out;
}

inline void write_csv(const std::vector<NmseResult>& results, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("write_csv: cannot open '" + path + "' for writing");
  f << format_csv(results);
  f.flush();
  if (!f) throw std::runtime_error("write_csv: write to '" + path + "' failed");
}

inline std::vector<NmseResult> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw std::invalid_argument("parse_csv: missing or unexpected header");
  std::vector<NmseResult> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8)
      throw std::invalid_argument("parse_csv: line " + std::to_string(line_no) +
                                  " does not have 8 columns");
    try {
      NmseResult r;
      r.task = parse_task(cells[0]);
      r.fixed_param = cells[1];
      r.fixed_value = std::stod(cells[2]);
      r.step = std::stoul(cells[3]);
      r.extension = cells[4];
      r.nmse_mean = std::stod(cells[5]);
      r.nmse_std = std::stod(cells[6]);
      r.n_realizations = std::stoul(cells[7]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error& e) {
      throw std::invalid_argument("parse_csv: line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

inline std::vector<NmseResult> read_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_csv: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_csv(ss.str());
}

/// Gnuplot script plotting mean NMSE against step, one curve per
/// (task, fixed value, extension), log-scale y axis.
inline std::string gnuplot_script(const std::vector<NmseResult>& results, const std::string& csv_path) {
  std::vector<std::tuple<std::string, double, std::string, std::string>> curves;
  for (const auto& r : results) {
    auto key = std::make_tuple(to_string(r.task), r.fixed_value, r.extension, r.fixed_param);
    if (std::find(curves.begin(), curves.end(), key) == curves.end()) curves.push_back(key);
  }
  std::ostringstream gp;
  gp << "# plots " << csv_path << "\n"
     << "set datafile separator ','\n"
     << "set key outside right\n"
     << "set logscale y\n"
     << "set xlabel 'collision step k'\n"
     << "set ylabel 'NMSE'\n"
     << "set terminal pngcairo size 1200,800\n"
     << "set output '" << csv_path << ".png'\n"
     << "plot \\\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& [task, value, ext, param] = curves[i];
    gp << "  '" << csv_path << "' using ((strcol(1) eq '" << task << "' && $3 == "
       << format_real(value) << " && strcol(5) eq '" << ext << "') ? $4 : 1/0):6 "
       << "with linespoints title '" << task << " " << param << "=" << format_real(value) << " "
       << ext << "'" << (i + 1 < curves.size() ? ", \\\n" : "\n");
  }
  return gp.str();
}

}  // namespace qelm
