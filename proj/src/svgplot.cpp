#include "deeposets/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "deeposets/common.hpp"

namespace deeposets::plot {

namespace {

constexpr double kWidth = 800, kHeight = 520;
constexpr double kLeft = 90, kRight = 40, kTop = 50, kBottom = 70;

const char* const kPalette[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#8c564b"};

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Tick label such as 1e-4 or 0.25 depending on magnitude.
std::string tick_label(double v) {
  if (v == 0.0) return "0";
  const double mag = std::abs(v);
  std::ostringstream os;
  if (mag >= 1e4 || mag < 1e-3) {
    os.precision(0);
    os << std::scientific << v;
  } else {
    os.precision(4);
    os << v;
  }
  std::string s = os.str();
  // trim trailing zeros of plain decimals
  if (s.find('e') == std::string::npos && s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  return s;
}

struct AxisScale {
  double lo = 0.0, hi = 1.0;
  bool log = false;

  double to_unit(double v) const {
    const double a = log ? std::log10(v) : v;
    const double l = log ? std::log10(lo) : lo;
    const double h = log ? std::log10(hi) : hi;
    return h > l ? (a - l) / (h - l) : 0.5;
  }

  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      const int klo = static_cast<int>(std::floor(std::log10(lo)));
      const int khi = static_cast<int>(std::ceil(std::log10(hi)));
      for (int k = klo; k <= khi; ++k) out.push_back(std::pow(10.0, k));
    } else {
      const double span = hi - lo;
      if (span <= 0) return {lo};
      const double raw = span / 5.0;
      const double mag = std::pow(10.0, std::floor(std::log10(raw)));
      double step = mag;
      for (double mult : {1.0, 2.0, 2.5, 5.0, 10.0}) {
        if (mag * mult >= raw) {
          step = mag * mult;
          break;
        }
      }
      const double first = std::ceil(lo / step) * step;
      for (double t = first; t <= hi + 1e-12 * span; t += step) {
        out.push_back(t);
      }
    }
    return out;
  }
};

AxisScale fit_scale(const std::vector<double>& values, bool log) {
  AxisScale scale;
  scale.log = log;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (log && v <= 0.0) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!std::isfinite(lo)) {
    lo = log ? 0.1 : 0.0;
    hi = 1.0;
  }
  if (lo == hi) {
    if (log) {
      lo /= 10.0;
      hi *= 10.0;
    } else {
      lo -= 0.5;
      hi += 0.5;
    }
  } else if (!log) {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  scale.lo = lo;
  scale.hi = hi;
  return scale;
}

}  // namespace

std::string LineChart::to_svg() const {
  std::vector<double> xs, ys;
  for (const Series& s : series) {
    for (const auto& [x, y] : s.points) {
      xs.push_back(x);
      ys.push_back(y);
    }
  }
  const AxisScale x_scale = fit_scale(xs, log_x);
  const AxisScale y_scale = fit_scale(ys, log_y);

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + x_scale.to_unit(v) * plot_w; };
  auto py = [&](double v) {
    return kTop + (1.0 - y_scale.to_unit(v)) * plot_h;
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
     << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
     << kHeight << "\">\n";
  if (!provenance.empty()) {
    os << "  <desc>" << escape_xml(provenance) << "</desc>\n";
  }
  os << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "  <text x=\"" << kWidth / 2 << "\" y=\"28\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\" font-size=\"17\">"
     << escape_xml(title) << "</text>\n";

  // gridlines and ticks
  for (double t : x_scale.ticks()) {
    if (t < x_scale.lo || t > x_scale.hi) continue;
    const double x = px(t);
    os << "  <line x1=\"" << num(x) << "\" y1=\"" << kTop << "\" x2=\""
       << num(x) << "\" y2=\"" << kTop + plot_h
       << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    os << "  <text x=\"" << num(x) << "\" y=\"" << kTop + plot_h + 22
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"12\">"
       << tick_label(t) << "</text>\n";
  }
  for (double t : y_scale.ticks()) {
    if (t < y_scale.lo || t > y_scale.hi) continue;
    const double y = py(t);
    os << "  <line x1=\"" << kLeft << "\" y1=\"" << num(y) << "\" x2=\""
       << kLeft + plot_w << "\" y2=\"" << num(y)
       << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    os << "  <text x=\"" << kLeft - 8 << "\" y=\"" << num(y + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
          "font-size=\"12\">"
       << tick_label(t) << "</text>\n";
  }

  // frame
  os << "  <rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w
     << "\" height=\"" << plot_h
     << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";

  // axis labels
  os << "  <text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 18
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"14\">"
     << escape_xml(x_label) << "</text>\n";
  os << "  <text x=\"24\" y=\"" << kTop + plot_h / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\""
        " transform=\"rotate(-90 24 "
     << kTop + plot_h / 2 << ")\">" << escape_xml(y_label) << "</text>\n";

  // series
  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(*kPalette))];
    std::ostringstream pts;
    for (const auto& [x, y] : series[si].points) {
      if ((log_x && x <= 0.0) || (log_y && y <= 0.0)) continue;
      pts << num(px(x)) << ',' << num(py(y)) << ' ';
    }
    os << "  <polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\""
       << color << "\" stroke-width=\"2\"/>\n";
    for (const auto& [x, y] : series[si].points) {
      if ((log_x && x <= 0.0) || (log_y && y <= 0.0)) continue;
      os << "  <circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y))
         << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = kTop + 16 + 20 * static_cast<double>(si);
    os << "  <line x1=\"" << kLeft + plot_w - 170 << "\" y1=\"" << ly - 4
       << "\" x2=\"" << kLeft + plot_w - 146 << "\" y2=\"" << ly - 4
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "  <text x=\"" << kLeft + plot_w - 140 << "\" y=\"" << ly
       << "\" font-family=\"sans-serif\" font-size=\"12\">"
       << escape_xml(series[si].label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_svg(const LineChart& chart, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(msg("cannot open '", path, "' for writing"));
  os << chart.to_svg();
  if (!os) throw IoError(msg("failed writing '", path, "'"));
}

}  // namespace deeposets::plot
