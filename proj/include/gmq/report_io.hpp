#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace gmq {

using ordered_json = nlohmann::ordered_json;

// All numeric text output goes through this: 12 significant digits, C locale,
// so reruns produce byte-identical files.
std::string format_sig(double v);

// Write-to-temp then rename, so readers never observe a half-written file.
void write_file_atomic(const std::string& path, const std::string& content);
void write_json_atomic(const std::string& path, const ordered_json& doc);

void ensure_dir(const std::string& path);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& cell(double v);
  CsvTable& cell(int v);
  CsvTable& cell(long long v);
  CsvTable& cell(const std::string& v);
  void end_row();

  std::string str() const;
  void write(const std::string& path) const;

 private:
  size_t columns_;
  std::vector<std::string> lines_;
  std::vector<std::string> row_;
};

// One named series for the plot helper below.
struct PlotSeries {
  std::string label;
  std::vector<double> y;
};

// Minimal static SVG: polylines over a shared x vector (log scale when
// log_x), no external assets, no timestamps.
std::string svg_plot(const std::string& title, const std::vector<double>& x,
                     const std::vector<PlotSeries>& series, bool log_x);

}  // namespace gmq
