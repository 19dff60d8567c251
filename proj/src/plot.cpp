#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <sstream>

#include "proxfed/experiment.hpp"

namespace proxfed {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 500.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 180.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;
constexpr double kFloor = 1e-300;

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                  "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string fixed2(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
  return std::string(buf, res.ptr);
}

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

double nice_step(double raw) {
  if (!(raw > 0.0)) return 1.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double f : {1.0, 2.0, 5.0}) {
    if (f * mag >= raw) return f * mag;
  }
  return 10.0 * mag;
}

double last_value_at(const std::vector<std::pair<double, double>>& pts, double x) {
  auto it = std::upper_bound(pts.begin(), pts.end(), x,
                             [](double v, const std::pair<double, double>& p) { return v < p.first; });
  if (it == pts.begin()) return pts.front().second;
  return std::prev(it)->second;
}

std::vector<std::pair<double, double>> median_curve(const PlotSeries& s) {
  std::vector<double> grid;
  for (const auto& seed : s.seeds)
    for (const auto& p : seed) grid.push_back(p.first);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::vector<std::pair<double, double>> out;
  std::vector<double> vals;
  for (double g : grid) {
    vals.clear();
    for (const auto& seed : s.seeds) {
      if (seed.empty()) continue;
      // A seed that stopped early keeps contributing only up to its last sample.
      if (g > seed.back().first) continue;
      vals.push_back(last_value_at(seed, g));
    }
    if (!vals.empty()) out.emplace_back(g, quantile(vals, 0.5));
  }
  return out;
}

}  // namespace

std::string emit_plot(const std::vector<PlotSeries>& series, const std::string& title,
                      bool per_seed_lines) {
  std::vector<std::vector<std::pair<double, double>>> medians;
  double xmax = 0.0;
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();
  auto account = [&](const std::vector<std::pair<double, double>>& pts) {
    for (const auto& [x, y] : pts) {
      xmax = std::max(xmax, x);
      const double ly = std::log10(std::max(y, kFloor));
      ymin = std::min(ymin, ly);
      ymax = std::max(ymax, ly);
    }
  };
  for (const auto& s : series) {
    medians.push_back(median_curve(s));
    account(medians.back());
    if (per_seed_lines)
      for (const auto& seed : s.seeds) account(seed);
  }
  if (!(xmax > 0.0)) xmax = 1.0;
  if (!std::isfinite(ymin)) {
    ymin = 0.0;
    ymax = 1.0;
  }
  ymin = std::floor(ymin);
  ymax = std::ceil(ymax);
  if (ymax <= ymin) ymax = ymin + 1.0;

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + pw * x / xmax; };
  auto py = [&](double y) {
    const double ly = std::log10(std::max(y, kFloor));
    return kTop + ph * (ymax - ly) / (ymax - ymin);
  };
  auto polyline = [&](const std::vector<std::pair<double, double>>& pts) {
    std::string s;
    for (const auto& [x, y] : pts) {
      if (!s.empty()) s += ' ';
      s += fixed2(px(x)) + ',' + fixed2(py(y));
    }
    return s;
  };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << fixed2(kLeft + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" "
    << "font-family=\"sans-serif\" font-size=\"16\">" << escape(title) << "</text>\n";
  o << "<rect x=\"" << fixed2(kLeft) << "\" y=\"" << fixed2(kTop) << "\" width=\"" << fixed2(pw)
    << "\" height=\"" << fixed2(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

  const double xstep = nice_step(xmax / 5.0);
  for (double x = 0.0; x <= xmax * (1.0 + 1e-12); x += xstep) {
    o << "<line x1=\"" << fixed2(px(x)) << "\" y1=\"" << fixed2(kTop + ph) << "\" x2=\""
      << fixed2(px(x)) << "\" y2=\"" << fixed2(kTop + ph + 5) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << fixed2(px(x)) << "\" y=\"" << fixed2(kTop + ph + 20)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << format_double(x) << "</text>\n";
  }
  const double span = ymax - ymin;
  const double ystep = span <= 10.0 ? 1.0 : std::ceil(span / 10.0);
  for (double e = ymin; e <= ymax + 1e-9; e += ystep) {
    const double y = kTop + ph * (ymax - e) / span;
    o << "<line x1=\"" << fixed2(kLeft - 5) << "\" y1=\"" << fixed2(y) << "\" x2=\""
      << fixed2(kLeft + pw) << "\" y2=\"" << fixed2(y) << "\" stroke=\"#dddddd\"/>\n";
    o << "<text x=\"" << fixed2(kLeft - 8) << "\" y=\"" << fixed2(y + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">1e"
      << static_cast<long long>(e) << "</text>\n";
  }
  o << "<text x=\"" << fixed2(kLeft + pw / 2) << "\" y=\"" << fixed2(kHeight - 15)
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
    << "communication steps</text>\n";
  o << "<text x=\"18\" y=\"" << fixed2(kTop + ph / 2) << "\" text-anchor=\"middle\" "
    << "font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 "
    << fixed2(kTop + ph / 2) << ")\">squared distance to optimum</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % kPalette.size()];
    if (per_seed_lines) {
      for (const auto& seed : series[i].seeds) {
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-opacity=\"0.3\" "
          << "stroke-width=\"1\" points=\"" << polyline(seed) << "\"/>\n";
      }
    }
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\""
      << polyline(medians[i]) << "\"/>\n";
    const double ly = kTop + 10.0 + 20.0 * static_cast<double>(i);
    const double lx = kLeft + pw + 15.0;
    o << "<line x1=\"" << fixed2(lx) << "\" y1=\"" << fixed2(ly) << "\" x2=\"" << fixed2(lx + 25)
      << "\" y2=\"" << fixed2(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << fixed2(lx + 32) << "\" y=\"" << fixed2(ly + 4)
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(series[i].label)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace proxfed
