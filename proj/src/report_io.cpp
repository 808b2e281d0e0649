#include "gmq/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gmq {

std::string format_sig(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw std::runtime_error("cannot create directory " + path + ": " + ec.message());
}

void write_file_atomic(const std::string& path, const std::string& content) {
  std::filesystem::path target(path);
  if (target.has_parent_path()) ensure_dir(target.parent_path().string());
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw std::runtime_error("rename to " + path + " failed: " + ec.message());
}

void write_json_atomic(const std::string& path, const ordered_json& doc) {
  write_file_atomic(path, doc.dump(2) + "\n");
}

CsvTable::CsvTable(std::vector<std::string> header) : columns_(header.size()) {
  std::string line;
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) line += ',';
    line += header[i];
  }
  lines_.push_back(std::move(line));
}

CsvTable& CsvTable::cell(double v) {
  row_.push_back(format_sig(v));
  return *this;
}

CsvTable& CsvTable::cell(int v) {
  row_.push_back(std::to_string(v));
  return *this;
}

CsvTable& CsvTable::cell(long long v) {
  row_.push_back(std::to_string(v));
  return *this;
}

CsvTable& CsvTable::cell(const std::string& v) {
  row_.push_back(v);
  return *this;
}

void CsvTable::end_row() {
  if (row_.size() != columns_)
    throw std::logic_error("csv row has " + std::to_string(row_.size()) + " cells, header has " +
                           std::to_string(columns_));
  std::string line;
  for (size_t i = 0; i < row_.size(); ++i) {
    if (i) line += ',';
    line += row_[i];
  }
  lines_.push_back(std::move(line));
  row_.clear();
}

std::string CsvTable::str() const {
  std::string out;
  for (const auto& line : lines_) {
    out += line;
    out += '\n';
  }
  return out;
}

void CsvTable::write(const std::string& path) const { write_file_atomic(path, str()); }

namespace {

constexpr double kWidth = 760.0;
constexpr double kHeight = 460.0;
constexpr double kMarginL = 70.0;
constexpr double kMarginR = 24.0;
constexpr double kMarginT = 44.0;
constexpr double kMarginB = 52.0;

const char* kPalette[] = {"#1f6fb2", "#c2452d", "#3a8a3f", "#7a4fa3", "#b08506", "#3b3b3b"};

std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string svg_plot(const std::string& title, const std::vector<double>& x,
                     const std::vector<PlotSeries>& series, bool log_x) {
  double xmin = 0.0, xmax = 1.0;
  double ymin = 0.0, ymax = 1.0;
  bool have = false;
  auto tx = [&](double v) { return log_x ? std::log(v) : v; };
  for (double v : x) {
    double t = tx(v);
    if (!std::isfinite(t)) continue;
    if (!have) {
      xmin = xmax = t;
      have = true;
    } else {
      xmin = std::min(xmin, t);
      xmax = std::max(xmax, t);
    }
  }
  bool havey = false;
  for (const auto& s : series)
    for (double v : s.y) {
      if (!std::isfinite(v)) continue;
      if (!havey) {
        ymin = ymax = v;
        havey = true;
      } else {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
      }
    }
  if (xmax - xmin < 1e-300) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax - ymin < 1e-300) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  double plot_w = kWidth - kMarginL - kMarginR;
  double plot_h = kHeight - kMarginT - kMarginB;
  auto px = [&](double v) { return kMarginL + (tx(v) - xmin) / (xmax - xmin) * plot_w; };
  auto py = [&](double v) { return kMarginT + (ymax - v) / (ymax - ymin) * plot_h; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << (int)kWidth << "\" height=\""
      << (int)kHeight << "\" viewBox=\"0 0 " << (int)kWidth << ' ' << (int)kHeight << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << coord(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"monospace\" font-size=\"15\">" << title << "</text>\n";
  // frame
  svg << "<rect x=\"" << coord(kMarginL) << "\" y=\"" << coord(kMarginT) << "\" width=\""
      << coord(plot_w) << "\" height=\"" << coord(plot_h)
      << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";

  // x ticks at the data points themselves when few, else 6 even ticks
  std::vector<double> xticks;
  if (x.size() <= 10) {
    xticks = x;
  } else {
    for (int i = 0; i <= 5; ++i) {
      double t = xmin + (xmax - xmin) * i / 5.0;
      xticks.push_back(log_x ? std::exp(t) : t);
    }
  }
  for (double v : xticks) {
    double X = px(v);
    svg << "<line x1=\"" << coord(X) << "\" y1=\"" << coord(kMarginT + plot_h) << "\" x2=\""
        << coord(X) << "\" y2=\"" << coord(kMarginT + plot_h + 5) << "\" stroke=\"#444\"/>\n";
    svg << "<text x=\"" << coord(X) << "\" y=\"" << coord(kMarginT + plot_h + 20)
        << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"11\">"
        << format_sig(v) << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    double v = ymin + (ymax - ymin) * i / 4.0;
    double Y = py(v);
    svg << "<line x1=\"" << coord(kMarginL - 5) << "\" y1=\"" << coord(Y) << "\" x2=\""
        << coord(kMarginL) << "\" y2=\"" << coord(Y) << "\" stroke=\"#444\"/>\n";
    svg << "<text x=\"" << coord(kMarginL - 9) << "\" y=\"" << coord(Y + 4)
        << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">" << format_sig(v)
        << "</text>\n";
  }

  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    size_t count = std::min(x.size(), s.y.size());
    for (size_t i = 0; i < count; ++i) {
      if (!std::isfinite(s.y[i])) continue;
      svg << coord(px(x[i])) << ',' << coord(py(s.y[i])) << ' ';
    }
    svg << "\"/>\n";
    double ly = kMarginT + 16.0 + 16.0 * (double)si;
    svg << "<line x1=\"" << coord(kMarginL + plot_w - 150) << "\" y1=\"" << coord(ly - 4)
        << "\" x2=\"" << coord(kMarginL + plot_w - 130) << "\" y2=\"" << coord(ly - 4)
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << coord(kMarginL + plot_w - 124) << "\" y=\"" << coord(ly)
        << "\" font-family=\"monospace\" font-size=\"11\">" << s.label << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace gmq
