#include "intent/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "intent/error.hpp"

namespace intent {

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

// Rounds a tick step to 1, 2 or 5 times a power of ten.
double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  return (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0) * mag;
}

}  // namespace

std::string line_chart_svg(const std::vector<PlotSeries>& series, const PlotLabels& labels, int width, int height) {
  if (series.empty()) throw InputError("plot needs at least one series");
  double x0 = std::numeric_limits<double>::infinity();
  double x1 = -x0;
  double y0 = x0;
  double y1 = -x0;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw InputError("plot series '" + s.name + "' has mismatched x and y");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) throw InputError("plot values must be finite");
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) throw InputError("plot series are empty");
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) y1 = y0 + 1.0;
  const double ystep = nice_step(y1 - y0, 5);
  y0 = std::floor(y0 / ystep) * ystep;
  y1 = std::ceil(y1 / ystep) * ystep;
  const double xstep = nice_step(x1 - x0, 6);

  const double left = 64;
  const double right = width - 150;
  const double top = 40;
  const double bottom = height - 50;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (right - left); };
  auto py = [&](double y) { return bottom - (y - y0) / (y1 - y0) * (bottom - top); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(labels.title)
    << "</text>\n";
  for (double y = y0; y <= y1 + ystep * 1e-6; y += ystep) {
    o << "<line x1=\"" << left << "\" y1=\"" << num(py(y)) << "\" x2=\"" << right << "\" y2=\"" << num(py(y))
      << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << left - 6 << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">" << num(y)
      << "</text>\n";
  }
  for (double x = std::ceil(x0 / xstep) * xstep; x <= x1 + xstep * 1e-6; x += xstep) {
    o << "<line x1=\"" << num(px(x)) << "\" y1=\"" << bottom << "\" x2=\"" << num(px(x)) << "\" y2=\"" << bottom + 5
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(px(x)) << "\" y=\"" << bottom + 18 << "\" text-anchor=\"middle\">" << num(x)
      << "</text>\n";
  }
  o << "<polyline points=\"" << left << "," << top << " " << left << "," << bottom << " " << right << "," << bottom
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << "<text x=\"" << num((left + right) / 2) << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">"
    << escape(labels.x_label) << "</text>\n";
  o << "<text transform=\"translate(16," << num((top + bottom) / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(labels.y_label) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* colour = kPalette[i % std::size(kPalette)];
    o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
    for (std::size_t j = 0; j < s.x.size(); ++j) o << (j ? " " : "") << num(px(s.x[j])) << "," << num(py(s.y[j]));
    o << "\"/>\n";
    for (std::size_t j = 0; j < s.x.size(); ++j) {
      o << "<circle cx=\"" << num(px(s.x[j])) << "\" cy=\"" << num(py(s.y[j])) << "\" r=\"3\" fill=\"" << colour
        << "\"/>\n";
    }
    const double ly = top + 10 + 18.0 * i;
    o << "<line x1=\"" << right + 14 << "\" y1=\"" << ly << "\" x2=\"" << right + 34 << "\" y2=\"" << ly
      << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << right + 40 << "\" y=\"" << ly + 4 << "\">" << escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace intent
