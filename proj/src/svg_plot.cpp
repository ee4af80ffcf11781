#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "onebit/bench.hpp"

namespace onebit {
namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += ch;
    }
  }
  return out;
}

struct Point {
  double x;
  double y;
};

}  // namespace

std::string render_svg_plot(const std::string& csv_text, const PlotSpec& spec) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("plot: empty CSV");
  const auto header = split_csv_line(line);
  auto column = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::runtime_error("plot: missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t method_col = column("method");
  const std::size_t x_col = column(spec.x_column);
  const auto status_it = std::find(header.begin(), header.end(), "status");
  const bool has_status = status_it != header.end();
  const std::size_t status_col = has_status ? static_cast<std::size_t>(status_it - header.begin()) : 0;

  enum class Source { Ber, Column, Extra };
  Source source = Source::Extra;
  std::size_t a_col = 0;
  std::size_t b_col = 0;
  if (spec.metric == "ber") {
    source = Source::Ber;
    a_col = column("bit_errors");
    b_col = column("bits");
  } else if (std::find(header.begin(), header.end(), spec.metric) != header.end()) {
    source = Source::Column;
    a_col = column(spec.metric);
  } else {
    a_col = column("extra_json");
  }

  // method -> x -> (numerator, denominator)
  std::map<std::string, std::map<double, std::pair<double, double>>> series;
  bool any_rows = false, metric_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) throw std::runtime_error("plot: ragged CSV row");
    if (has_status && (f[status_col] == "summary" || f[status_col].rfind("failed", 0) == 0)) continue;
    any_rows = true;
    const double x = std::stod(f[x_col]);
    auto& acc = series[f[method_col]][x];
    switch (source) {
      case Source::Ber:
        acc.first += std::stod(f[a_col]);
        acc.second += std::stod(f[b_col]);
        break;
      case Source::Column:
        acc.first += std::stod(f[a_col]);
        acc.second += 1.0;
        break;
      case Source::Extra: {
        const auto extra = nlohmann::json::parse(f[a_col]);
        if (!extra.contains(spec.metric)) continue;
        metric_seen = true;
        acc.first += extra.at(spec.metric).get<double>();
        acc.second += 1.0;
        break;
      }
    }
  }

  // an extra_json key nobody reports is as good as a missing column
  if (source == Source::Extra && any_rows && !metric_seen) throw std::runtime_error("plot: missing column " + spec.metric);

  std::map<std::string, std::vector<Point>> points;
  double xmin = 0, xmax = 1, ymin = spec.log_y ? spec.y_floor : 0.0, ymax = spec.log_y ? 1.0 : 1.0;
  bool first = true;
  for (const auto& [method, by_x] : series) {
    for (const auto& [x, acc] : by_x) {
      if (acc.second <= 0) continue;
      const double y = acc.first / acc.second;
      points[method].push_back({x, y});
      if (first) {
        xmin = xmax = x;
        ymax = spec.log_y ? std::max(y, spec.y_floor * 10) : y;
        ymin = spec.log_y ? spec.y_floor : std::min(0.0, y);
        first = false;
      }
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymax = std::max(ymax, y);
      if (!spec.log_y) ymin = std::min(ymin, y);
      else if (y > 0) ymin = std::min(ymin, std::max(y, spec.y_floor));
    }
  }
  if (xmax == xmin) {
    xmin -= 1;
    xmax += 1;
  }
  if (!spec.log_y && ymax == ymin) ymax = ymin + 1;

  const double left = 70, right = 150, top = 40, bottom = 50;
  const double pw = spec.width - left - right;
  const double ph = spec.height - top - bottom;
  const double ly0 = spec.log_y ? std::floor(std::log10(ymin)) : ymin;
  double ly1 = spec.log_y ? std::ceil(std::log10(ymax)) : ymax;
  if (spec.log_y && ly1 <= ly0) ly1 = ly0 + 1;
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) {
    const double v = spec.log_y ? std::log10(std::max(y, spec.y_floor)) : y;
    return top + (1.0 - (v - ly0) / (ly1 - ly0)) * ph;
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!spec.title.empty()) {
    svg << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
        << escape(spec.title) << "</text>\n";
  }
  svg << "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n";
  svg << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(left + pw) << "\" y2=\""
      << num(top + ph) << "\"/>\n";
  svg << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left) << "\" y2=\""
      << num(top + ph) << "\"/>\n";
  svg << "</g>\n";

  svg << "<g class=\"ticks\" text-anchor=\"middle\">\n";
  for (int k = 0; k <= 5; ++k) {
    const double x = xmin + (xmax - xmin) * k / 5.0;
    svg << "<text x=\"" << num(sx(x)) << "\" y=\"" << num(top + ph + 18) << "\">" << tick_label(x) << "</text>\n";
  }
  if (spec.log_y) {
    for (int e = static_cast<int>(ly0); e <= static_cast<int>(ly1); ++e) {
      svg << "<text x=\"" << num(left - 8) << "\" y=\"" << num(sy(std::pow(10.0, e)) + 4)
          << "\" text-anchor=\"end\">1e" << e << "</text>\n";
    }
  } else {
    for (int k = 0; k <= 5; ++k) {
      const double y = ly0 + (ly1 - ly0) * k / 5.0;
      svg << "<text x=\"" << num(left - 8) << "\" y=\"" << num(sy(y) + 4) << "\" text-anchor=\"end\">"
          << tick_label(y) << "</text>\n";
    }
  }
  svg << "</g>\n";
  svg << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << spec.height - 10 << "\" text-anchor=\"middle\">"
      << escape(spec.x_column) << "</text>\n";
  svg << "<text x=\"16\" y=\"" << num(top + ph / 2) << "\" transform=\"rotate(-90 16 " << num(top + ph / 2)
      << ")\" text-anchor=\"middle\">" << escape(spec.metric) << "</text>\n";

  std::size_t color = 0;
  for (const auto& [method, pts] : points) {
    const char* stroke = kPalette[color % std::size(kPalette)];
    svg << "<g class=\"series\" data-method=\"" << escape(method) << "\">\n";
    svg << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < pts.size(); ++k) {
      svg << (k ? " " : "") << num(sx(pts[k].x)) << "," << num(sy(pts[k].y));
    }
    svg << "\"/>\n";
    for (const Point& p : pts) {
      const bool floored = spec.log_y && p.y < spec.y_floor;
      svg << "<circle cx=\"" << num(sx(p.x)) << "\" cy=\"" << num(sy(p.y)) << "\" r=\"3\" stroke=\"" << stroke
          << "\" fill=\"" << (floored ? "white" : stroke) << "\"/>\n";
      if (floored) {
        svg << "<text class=\"floor-marker\" x=\"" << num(sx(p.x)) << "\" y=\"" << num(sy(p.y) - 6)
            << "\" text-anchor=\"middle\" font-size=\"9\">&lt;" << tick_label(spec.y_floor) << "</text>\n";
      }
    }
    svg << "</g>\n";
    const double ly = top + 14 + 18 * static_cast<double>(color);
    svg << "<line x1=\"" << num(left + pw + 12) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(left + pw + 32)
        << "\" y2=\"" << num(ly) << "\" stroke=\"" << stroke << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << num(left + pw + 38) << "\" y=\"" << num(ly + 4) << "\">" << escape(method) << "</text>\n";
    ++color;
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_svg_plot(const std::string& csv_path, const PlotSpec& spec, const std::string& svg_path) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("plot: cannot open " + csv_path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string svg = render_svg_plot(buffer.str(), spec);
  std::ofstream out(svg_path);
  if (!out) throw std::runtime_error("plot: cannot write " + svg_path);
  out << svg;
}

}  // namespace onebit
