#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "eqstream/bench.hpp"

namespace eqstream {

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Fixed palette; groups are assigned colors in sorted order.
inline const char* svg_color(std::size_t index) {
  static const char* const palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                        "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
                                        "#bcbd22", "#e377c2"};
  return palette[index % 10];
}

}  // namespace detail

/// Writes a standalone line chart: one polyline per group (default grouping
/// (policy, M)), x = frame index, y = log10 of the squared distance to the
/// reference, floored at 1e-18. Multiple seeds in a group are averaged per
/// frame before taking the log. Output bytes are a pure function of the rows.
inline void render_svg_lines(const std::vector<MetricsRow>& rows,
                             const std::vector<std::string>& group_keys, std::ostream& out) {
  if (rows.empty()) throw std::invalid_argument("render_svg_lines: no rows");
  for (const auto& row : rows)
    if (row.experiment != rows.front().experiment)
      throw std::invalid_argument("render_svg_lines: rows span multiple experiments");
  for (const auto& key : group_keys)
    if (key != "policy" && key != "M" && key != "seed")
      throw std::invalid_argument("render_svg_lines: unsupported group key '" + key + "'");

  // (policy, M, seed) triple per group; unused keys collapse to one bucket.
  using GroupKey = std::tuple<std::string, std::size_t, std::uint64_t>;
  const auto key_of = [&](const MetricsRow& row) {
    GroupKey key{"", 0, 0};
    for (const auto& k : group_keys) {
      if (k == "policy") std::get<0>(key) = row.policy;
      if (k == "M") std::get<1>(key) = row.m;
      if (k == "seed") std::get<2>(key) = row.seed;
    }
    return key;
  };
  const auto label_of = [&](const GroupKey& key) {
    std::string label;
    for (const auto& k : group_keys) {
      if (!label.empty()) label += ' ';
      if (k == "policy") label += std::get<0>(key);
      if (k == "M") label += "M=" + std::to_string(std::get<1>(key));
      if (k == "seed") label += "seed=" + std::to_string(std::get<2>(key));
    }
    return label.empty() ? std::string("all rows") : label;
  };

  constexpr double kFloor = 1e-18;
  std::map<GroupKey, std::map<std::size_t, std::pair<double, std::size_t>>> groups;
  std::size_t t_max = 0;
  for (const auto& row : rows) {
    if (!row.sq_dist_to_reference) continue;
    auto& cell = groups[key_of(row)][row.t];
    cell.first += std::max(*row.sq_dist_to_reference, kFloor);
    cell.second += 1;
    t_max = std::max(t_max, row.t);
  }

  double y_min = 1e300, y_max = -1e300;
  for (const auto& [key, series] : groups)
    for (const auto& [t, acc] : series) {
      const double v = std::log10(acc.first / static_cast<double>(acc.second));
      y_min = std::min(y_min, v);
      y_max = std::max(y_max, v);
    }
  if (groups.empty()) {
    y_min = -18.0;
    y_max = 0.0;
  }
  y_min = std::floor(y_min);
  y_max = std::ceil(y_max);
  if (y_max <= y_min) y_max = y_min + 1.0;

  constexpr double width = 860.0, height = 540.0;
  constexpr double left = 70.0, right_margin = 230.0, top = 40.0, bottom = 60.0;
  const double plot_w = width - left - right_margin;
  const double plot_h = height - top - bottom;
  const double x_span = t_max > 0 ? static_cast<double>(t_max) : 1.0;
  const auto x_px = [&](double t) { return left + plot_w * (t / x_span); };
  const auto y_px = [&](double v) {
    return top + plot_h * (1.0 - (v - y_min) / (y_max - y_min));
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << detail::svg_num(left) << "\" y=\"24\" font-family=\"sans-serif\" "
         "font-size=\"15\">"
      << rows.front().experiment << "</text>\n";

  // Axes.
  out << "<line x1=\"" << detail::svg_num(left) << "\" y1=\"" << detail::svg_num(top)
      << "\" x2=\"" << detail::svg_num(left) << "\" y2=\"" << detail::svg_num(top + plot_h)
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << detail::svg_num(left) << "\" y1=\"" << detail::svg_num(top + plot_h)
      << "\" x2=\"" << detail::svg_num(left + plot_w) << "\" y2=\""
      << detail::svg_num(top + plot_h) << "\" stroke=\"black\"/>\n";

  const std::size_t x_step = std::max<std::size_t>(1, (t_max + 7) / 8);
  for (std::size_t t = 0; t <= t_max; t += x_step) {
    const double px = x_px(static_cast<double>(t));
    out << "<line x1=\"" << detail::svg_num(px) << "\" y1=\""
        << detail::svg_num(top + plot_h) << "\" x2=\"" << detail::svg_num(px) << "\" y2=\""
        << detail::svg_num(top + plot_h + 5) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << detail::svg_num(px) << "\" y=\""
        << detail::svg_num(top + plot_h + 20)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << t
        << "</text>\n";
  }
  const double y_range = y_max - y_min;
  const std::size_t y_step = std::max<std::size_t>(1, static_cast<std::size_t>(y_range / 8.0));
  for (double v = y_min; v <= y_max + 1e-9; v += static_cast<double>(y_step)) {
    const double py = y_px(v);
    out << "<line x1=\"" << detail::svg_num(left - 5) << "\" y1=\"" << detail::svg_num(py)
        << "\" x2=\"" << detail::svg_num(left) << "\" y2=\"" << detail::svg_num(py)
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << detail::svg_num(left - 9) << "\" y=\"" << detail::svg_num(py + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">1e"
        << static_cast<long long>(v) << "</text>\n";
  }
  out << "<text x=\"" << detail::svg_num(left + plot_w / 2) << "\" y=\""
      << detail::svg_num(height - 18)
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">frame"
      << "</text>\n";
  out << "<text x=\"18\" y=\"" << detail::svg_num(top + plot_h / 2)
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 18 "
      << detail::svg_num(top + plot_h / 2) << ")\">squared distance to reference</text>\n";

  // Polylines and legend, in sorted group order.
  std::size_t index = 0;
  for (const auto& [key, series] : groups) {
    std::string points;
    for (const auto& [t, acc] : series) {
      const double v = std::log10(acc.first / static_cast<double>(acc.second));
      if (!points.empty()) points += ' ';
      points += detail::svg_num(x_px(static_cast<double>(t))) + "," +
                detail::svg_num(y_px(v));
    }
    out << "<polyline fill=\"none\" stroke=\"" << detail::svg_color(index)
        << "\" stroke-width=\"1.5\" points=\"" << points << "\"/>\n";
    const double ly = top + 16.0 * static_cast<double>(index);
    out << "<line x1=\"" << detail::svg_num(left + plot_w + 14) << "\" y1=\""
        << detail::svg_num(ly) << "\" x2=\"" << detail::svg_num(left + plot_w + 38)
        << "\" y2=\"" << detail::svg_num(ly) << "\" stroke=\"" << detail::svg_color(index)
        << "\" stroke-width=\"1.5\"/>\n";
    out << "<text x=\"" << detail::svg_num(left + plot_w + 44) << "\" y=\""
        << detail::svg_num(ly + 4) << "\" font-family=\"sans-serif\" font-size=\"11\">"
        << label_of(key) << "</text>\n";
    ++index;
  }
  out << "</svg>\n";
}

inline void render_svg_lines_file(const std::vector<MetricsRow>& rows,
                                  const std::vector<std::string>& group_keys,
                                  const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("render_svg_lines: cannot open '" + path + "'");
  render_svg_lines(rows, group_keys, out);
  if (!out) throw std::runtime_error("render_svg_lines: I/O failure on '" + path + "'");
}

}  // namespace eqstream
