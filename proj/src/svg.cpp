#include "cgp/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace cgp {

namespace {

constexpr int kWidth = 800;
constexpr int kHeight = 600;
constexpr double kLeft = 70, kRight = 770, kTop = 50, kBottom = 540;

std::string short_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", value);
  return buf;
}

double nice_step(double range) {
  const double raw = range / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  double step = 10.0;
  if (norm <= 1.5)
    step = 1.0;
  else if (norm <= 3.0)
    step = 2.0;
  else if (norm <= 7.0)
    step = 5.0;
  return step * mag;
}

}  // namespace

void write_line_chart(const std::filesystem::path& path,
                      const std::vector<SvgSeries>& series,
                      const std::vector<SvgMarker>& markers,
                      const std::string& title, const std::string& x_label,
                      const std::string& y_label) {
  if (series.empty()) throw std::invalid_argument("chart needs >= 1 series");
  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  for (const SvgSeries& s : series) {
    if (s.x.size() != s.y.size() || s.x.size() < 2)
      throw std::invalid_argument("series needs >= 2 points");
    for (double v : s.x) {
      x_min = std::min(x_min, v);
      x_max = std::max(x_max, v);
    }
    for (double v : s.y) {
      y_min = std::min(y_min, v);
      y_max = std::max(y_max, v);
    }
  }
  for (const SvgMarker& m : markers) {
    x_min = std::min(x_min, m.x);
    x_max = std::max(x_max, m.x);
  }
  if (!(x_max > x_min)) x_max = x_min + 1.0;
  if (!(y_max > y_min)) y_max = y_min + 1.0;
  y_min = std::min(y_min, 0.0);  // densities sit on the axis

  const auto sx = [&](double x) {
    return kLeft + (x - x_min) / (x_max - x_min) * (kRight - kLeft);
  };
  const auto sy = [&](double y) {
    return kBottom - (y - y_min) / (y_max - y_min) * (kBottom - kTop);
  };

  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write file: " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
      << kHeight << "\">\n";
  out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"28\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"18\">"
      << title << "</text>\n";

  // Axes.
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\"" << kRight
      << "\" y2=\"" << kBottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
      << "\" y2=\"" << kBottom << "\" stroke=\"black\"/>\n";

  const double x_step = nice_step(x_max - x_min);
  for (double t = std::ceil(x_min / x_step) * x_step; t <= x_max + 1e-12 * x_step;
       t += x_step) {
    const double px = sx(t);
    out << "<line x1=\"" << px << "\" y1=\"" << kBottom << "\" x2=\"" << px
        << "\" y2=\"" << kBottom + 6 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << px << "\" y=\"" << kBottom + 22
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"12\">"
        << short_number(t) << "</text>\n";
  }
  const double y_step = nice_step(y_max - y_min);
  for (double t = std::ceil(y_min / y_step) * y_step; t <= y_max + 1e-12 * y_step;
       t += y_step) {
    const double py = sy(t);
    out << "<line x1=\"" << kLeft - 6 << "\" y1=\"" << py << "\" x2=\"" << kLeft
        << "\" y2=\"" << py << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << kLeft - 10 << "\" y=\"" << py + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
        << short_number(t) << "</text>\n";
  }
  out << "<text x=\"" << (kLeft + kRight) / 2 << "\" y=\"" << kHeight - 16
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">"
      << x_label << "</text>\n";
  out << "<text x=\"20\" y=\"" << (kTop + kBottom) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\" transform=\"rotate(-90 20 "
      << (kTop + kBottom) / 2 << ")\">" << y_label << "</text>\n";

  for (const SvgMarker& m : markers) {
    const double px = sx(m.x);
    out << "<line class=\"marker\" x1=\"" << px << "\" y1=\"" << kTop
        << "\" x2=\"" << px << "\" y2=\"" << kBottom << "\" stroke=\""
        << m.color << "\" stroke-width=\"1\" stroke-dasharray=\"2,3\"/>\n";
  }

  for (const SvgSeries& s : series) {
    out << "<polyline class=\"series\" fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"1.8\"";
    if (!s.dash.empty()) out << " stroke-dasharray=\"" << s.dash << "\"";
    out << " points=\"";
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (i) out << ' ';
      out << sx(s.x[i]) << ',' << sy(s.y[i]);
    }
    out << "\"/>\n";
  }

  // Legend, top right.
  const double lx = kRight - 190, ly = kTop + 10;
  double row = 0;
  for (const SvgSeries& s : series) {
    const double y = ly + row * 20;
    out << "<line x1=\"" << lx << "\" y1=\"" << y << "\" x2=\"" << lx + 30
        << "\" y2=\"" << y << "\" stroke=\"" << s.color << "\" stroke-width=\"1.8\"";
    if (!s.dash.empty()) out << " stroke-dasharray=\"" << s.dash << "\"";
    out << "/>\n";
    out << "<text x=\"" << lx + 38 << "\" y=\"" << y + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label
        << "</text>\n";
    row += 1;
  }
  for (const SvgMarker& m : markers) {
    if (m.label.empty()) continue;
    const double y = ly + row * 20;
    out << "<line x1=\"" << lx << "\" y1=\"" << y << "\" x2=\"" << lx + 30
        << "\" y2=\"" << y << "\" stroke=\"" << m.color
        << "\" stroke-width=\"1\" stroke-dasharray=\"2,3\"/>\n";
    out << "<text x=\"" << lx + 38 << "\" y=\"" << y + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << m.label
        << "</text>\n";
    row += 1;
  }
  out << "</svg>\n";
}

}  // namespace cgp
