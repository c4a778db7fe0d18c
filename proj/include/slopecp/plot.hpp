#ifndef SLOPECP_PLOT_HPP
#define SLOPECP_PLOT_HPP

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "slopecp/csv.hpp"

namespace slopecp::plot {

/// Minimal static SVG canvas with a single pair of linear axes.
class Figure {
 public:
  Figure(double x0, double x1, double y0, double y1, std::string title, std::string xlabel, std::string ylabel)
      : x0_(x0), x1_(x1 > x0 ? x1 : x0 + 1.0), y0_(y0), y1_(y1 > y0 ? y1 : y0 + 1.0), title_(std::move(title)),
        xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

  void polyline(const std::vector<double>& xs, const std::vector<double>& ys, const std::string& color,
                double opacity = 1.0, double width = 1.0) {
    body_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-opacity=\"" << opacity
          << "\" stroke-width=\"" << width << "\" points=\"";
    for (std::size_t k = 0; k < xs.size() && k < ys.size(); ++k) body_ << px(xs[k]) << ',' << py(ys[k]) << ' ';
    body_ << "\"/>\n";
  }

  void rect(double xa, double xb, double ya, double yb, const std::string& color) {
    const double l = px(std::min(xa, xb)), r = px(std::max(xa, xb));
    const double t = py(std::max(ya, yb)), b = py(std::min(ya, yb));
    body_ << "<rect x=\"" << l << "\" y=\"" << t << "\" width=\"" << std::max(0.0, r - l) << "\" height=\""
          << std::max(0.0, b - t) << "\" fill=\"" << color << "\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
  }

  void vline(double x, const std::string& color) {
    body_ << "<line x1=\"" << px(x) << "\" x2=\"" << px(x) << "\" y1=\"" << top << "\" y2=\"" << height - bottom
          << "\" stroke=\"" << color << "\" stroke-dasharray=\"4 3\"/>\n";
  }

  std::string svg() const {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << escape(title_)
       << "</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << width - left - right << "\" height=\""
       << height - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double v : ticks(x0_, x1_))
      os << "<line x1=\"" << px(v) << "\" x2=\"" << px(v) << "\" y1=\"" << height - bottom << "\" y2=\""
         << height - bottom + 4 << "\" stroke=\"black\"/><text x=\"" << px(v) << "\" y=\"" << height - bottom + 16
         << "\" text-anchor=\"middle\">" << label(v) << "</text>\n";
    for (double v : ticks(y0_, y1_))
      os << "<line x1=\"" << left - 4 << "\" x2=\"" << left << "\" y1=\"" << py(v) << "\" y2=\"" << py(v)
         << "\" stroke=\"black\"/><text x=\"" << left - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">"
         << label(v) << "</text>\n";
    os << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 8 << "\" text-anchor=\"middle\">"
       << escape(xlabel_) << "</text>\n";
    os << "<text transform=\"translate(14," << (top + height - bottom) / 2
       << ") rotate(-90)\" text-anchor=\"middle\">" << escape(ylabel_) << "</text>\n";
    os << "<svg x=\"" << left << "\" y=\"" << top << "\" width=\"" << width - left - right << "\" height=\""
       << height - top - bottom << "\" viewBox=\"" << left << ' ' << top << ' ' << width - left - right << ' '
       << height - top - bottom << "\" overflow=\"hidden\">\n"
       << body_.str() << "</svg>\n</svg>\n";
    return os.str();
  }

  void save(const std::string& path) const {
    auto out = csv::open_out(path);
    out << svg();
  }

  static constexpr double width = 640, height = 400, left = 64, right = 16, top = 32, bottom = 48;

 private:
  double px(double x) const { return left + (x - x0_) / (x1_ - x0_) * (width - left - right); }
  double py(double y) const { return height - bottom - (y - y0_) / (y1_ - y0_) * (height - top - bottom); }

  static std::vector<double> ticks(double a, double b) {
    const double raw = (b - a) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
      if (m * mag >= raw) {
        step = m * mag;
        break;
      }
    std::vector<double> out;
    for (double v = std::ceil(a / step) * step; v <= b + 1e-9 * step; v += step) out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    return out;
  }

  static std::string label(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  }

  static std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '<') out += "&lt;";
      else if (c == '>') out += "&gt;";
      else if (c == '&') out += "&amp;";
      else out += c;
    }
    return out;
  }

  double x0_, x1_, y0_, y1_;
  std::string title_, xlabel_, ylabel_;
  std::ostringstream body_;
};

/// Histogram of `values` with `bins` equal-width bins.
inline Figure histogram(const std::vector<double>& values, int bins, const std::string& title,
                        const std::string& xlabel) {
  double lo = values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
  double hi = values.empty() ? 1.0 : *std::max_element(values.begin(), values.end());
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double v : values) {
    auto k = static_cast<std::size_t>((v - lo) / (hi - lo) * bins);
    counts[std::min(k, counts.size() - 1)] += 1.0;
  }
  const double top = counts.empty() ? 1.0 : *std::max_element(counts.begin(), counts.end());
  Figure f(lo, hi, 0.0, top * 1.05, title, xlabel, "draws");
  const double w = (hi - lo) / bins;
  for (int k = 0; k < bins; ++k) f.rect(lo + k * w, lo + (k + 1) * w, 0.0, counts[static_cast<std::size_t>(k)], "#4a78a8");
  return f;
}

/// Overlaid curves sharing one x axis.
inline Figure spaghetti(const std::vector<double>& x, const std::vector<std::vector<double>>& curves,
                        const std::string& title, const std::string& xlabel, const std::string& ylabel) {
  double lo = 0.0, hi = 1.0;
  bool first = true;
  for (const auto& c : curves)
    for (double v : c) {
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }
  const double pad = 0.05 * (hi - lo > 0 ? hi - lo : 1.0);
  Figure f(x.empty() ? 0.0 : x.front(), x.empty() ? 1.0 : x.back(), lo - pad, hi + pad, title, xlabel, ylabel);
  const double opacity = curves.size() > 1 ? std::max(0.1, 3.0 / static_cast<double>(curves.size())) : 1.0;
  for (const auto& c : curves) f.polyline(x, c, "#b03a2e", opacity);
  return f;
}

}  // namespace slopecp::plot

#endif
