#include "sillopt/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "sillopt/io.hpp"

namespace sill::svg {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 400;
constexpr double kLeft = 70;
constexpr double kRight = 20;
constexpr double kTop = 40;
constexpr double kBottom = 60;

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  // Two decimals keep coordinates short and stable across runs.
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v;
  return os.str();
}

std::string tick(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

void widen(double& lo, double& hi) {
  if (!(hi > lo)) {
    const double pad = std::abs(lo) > 0 ? std::abs(lo) * 0.05 : 1.0;
    lo -= pad;
    hi += pad;
  }
}

void header(std::ostringstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
     << "</text>\n";
}

void axes(std::ostringstream& os, const Frame& f, const std::string& x_label, const std::string& y_label,
          bool x_ticks) {
  const double bx = kHeight - kBottom;
  os << "<line x1=\"" << kLeft << "\" y1=\"" << bx << "\" x2=\"" << kWidth - kRight << "\" y2=\"" << bx
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << bx
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = f.y0 + (f.y1 - f.y0) * i / 4.0;
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(f.py(y) + 4) << "\" text-anchor=\"end\">" << tick(y)
       << "</text>\n";
    if (x_ticks) {
      const double x = f.x0 + (f.x1 - f.x0) * i / 4.0;
      os << "<text x=\"" << num(f.px(x)) << "\" y=\"" << bx + 16 << "\" text-anchor=\"middle\">" << tick(x)
         << "</text>\n";
    }
  }
  os << "<text x=\"" << num((kLeft + kWidth - kRight) / 2) << "\" y=\"" << kHeight - 15
     << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
  os << "<text transform=\"translate(16," << num((kTop + bx) / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(y_label) << "</text>\n";
}

}  // namespace

std::string line_plot(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                      const std::string& y_label) {
  Frame f{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("series '" + s.label + "' has mismatched x and y");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      f.x0 = std::min(f.x0, s.x[i]);
      f.x1 = std::max(f.x1, s.x[i]);
      f.y0 = std::min(f.y0, s.y[i]);
      f.y1 = std::max(f.y1, s.y[i]);
    }
  }
  if (!std::isfinite(f.x0)) f = {0, 1, 0, 1};
  widen(f.x0, f.x1);
  widen(f.y0, f.y1);

  std::ostringstream os;
  header(os, title);
  axes(os, f, x_label, y_label, true);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) os << (i ? " " : "") << num(f.px(s.x[i])) << ',' << num(f.py(s.y[i]));
    os << "\"/>\n";
    os << "<text x=\"" << num(kWidth - kRight - 4) << "\" y=\"" << kTop + 14 * (k + 1)
       << "\" text-anchor=\"end\" fill=\"" << color << "\">" << escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values,
                      const std::string& title, const std::string& y_label) {
  if (labels.size() != values.size()) throw std::invalid_argument("bar chart needs one label per value");
  double hi = 0.0;
  double lo = 0.0;
  for (double v : values) {
    hi = std::max(hi, v);
    lo = std::min(lo, v);
  }
  Frame f{0, 1, lo, hi * 1.1};
  widen(f.y0, f.y1);

  std::ostringstream os;
  header(os, title);
  axes(os, f, "", y_label, false);
  const double slot = (kWidth - kLeft - kRight) / std::max<double>(1, static_cast<double>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = kLeft + slot * (static_cast<double>(i) + 0.15);
    const double top = f.py(std::max(values[i], 0.0));
    const double bottom = f.py(std::min(values[i], 0.0));
    os << "<rect x=\"" << num(x) << "\" y=\"" << num(top) << "\" width=\"" << num(slot * 0.7) << "\" height=\""
       << num(bottom - top) << "\" fill=\"" << kPalette[i % std::size(kPalette)] << "\"/>\n";
    os << "<text x=\"" << num(x + slot * 0.35) << "\" y=\"" << num(top - 4) << "\" text-anchor=\"middle\">"
       << io::format_double(std::round(values[i] * 100) / 100) << "</text>\n";
    os << "<text x=\"" << num(x + slot * 0.35) << "\" y=\"" << kHeight - kBottom + 16
       << "\" text-anchor=\"middle\">" << escape(labels[i]) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string histogram(const std::vector<double>& values, int bins, const std::string& title,
                      const std::string& x_label) {
  if (bins < 1) throw std::invalid_argument("histogram needs at least one bin");
  double lo = 0.0;
  double hi = 1.0;
  if (!values.empty()) {
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    lo = *mn;
    hi = *mx;
  }
  widen(lo, hi);
  std::vector<int> counts(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    auto b = static_cast<int>((v - lo) / (hi - lo) * bins);
    ++counts[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))];
  }
  const int peak = counts.empty() ? 1 : std::max(1, *std::max_element(counts.begin(), counts.end()));
  Frame f{lo, hi, 0, peak * 1.1};

  std::ostringstream os;
  header(os, title);
  axes(os, f, x_label, "count", true);
  const double width = (hi - lo) / bins;
  for (int b = 0; b < bins; ++b) {
    const double x0 = f.px(lo + b * width);
    const double x1 = f.px(lo + (b + 1) * width);
    const double top = f.py(counts[static_cast<std::size_t>(b)]);
    os << "<rect x=\"" << num(x0) << "\" y=\"" << num(top) << "\" width=\"" << num(x1 - x0) << "\" height=\""
       << num(f.py(0) - top) << "\" fill=\"#1f77b4\" stroke=\"white\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace sill::svg
