#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "npjive/sweep.hpp"

namespace npjive {

namespace {

constexpr int kPanelWidth = 320;
constexpr int kPanelHeight = 300;
constexpr int kMarginLeft = 52;
constexpr int kMarginBottom = 40;
constexpr int kMarginTop = 28;
constexpr int kMarginRight = 12;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#8c564b"};

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (K, value)
};

std::string svg_text(double x, double y, const std::string& text, int size,
                     const char* anchor) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<text x='%.1f' y='%.1f' font-size='%d' font-family='sans-serif' "
                "text-anchor='%s'>%s</text>\n",
                x, y, size, anchor, text.c_str());
  return buf;
}

std::string render_panel(const std::string& title,
                         const std::vector<Series>& series, int panel_index) {
  const double x0 = panel_index * kPanelWidth + kMarginLeft;
  const double x1 = (panel_index + 1) * kPanelWidth - kMarginRight;
  const double y0 = kPanelHeight - kMarginBottom;
  const double y1 = kMarginTop;

  double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
  for (const Series& s : series) {
    for (const auto& [k, v] : s.points) {
      if (!(v > 0.0)) continue;  // log scale drops nonpositive values
      min_x = std::min(min_x, k);
      max_x = std::max(max_x, k);
      min_y = std::min(min_y, v);
      max_y = std::max(max_y, v);
    }
  }
  std::string out;
  out += svg_text((x0 + x1) / 2, kMarginTop - 10, title, 13, "middle");
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "<rect x='%.1f' y='%.1f' width='%.1f' height='%.1f' fill='none' "
                "stroke='#444'/>\n",
                x0, y1, x1 - x0, y0 - y1);
  out += buf;
  if (min_x > max_x || min_y > max_y) return out;
  if (min_x == max_x) max_x = min_x * 2;
  if (min_y == max_y) max_y = min_y * 2;

  const auto map_x = [&](double k) {
    return x0 + (std::log(k) - std::log(min_x)) / (std::log(max_x) - std::log(min_x)) *
                    (x1 - x0);
  };
  const auto map_y = [&](double v) {
    return y0 - (std::log(v) - std::log(min_y)) / (std::log(max_y) - std::log(min_y)) *
                    (y0 - y1);
  };

  // axis tick labels at the extremes
  std::snprintf(buf, sizeof(buf), "%g", min_x);
  out += svg_text(map_x(min_x), y0 + 16, buf, 10, "middle");
  std::snprintf(buf, sizeof(buf), "%g", max_x);
  out += svg_text(map_x(max_x), y0 + 16, buf, 10, "middle");
  std::snprintf(buf, sizeof(buf), "%.1e", min_y);
  out += svg_text(x0 - 4, map_y(min_y), buf, 9, "end");
  std::snprintf(buf, sizeof(buf), "%.1e", max_y);
  out += svg_text(x0 - 4, map_y(max_y), buf, 9, "end");
  out += svg_text((x0 + x1) / 2, y0 + 30, "K (log)", 11, "middle");

  int color = 0;
  for (const Series& s : series) {
    std::string path;
    bool first = true;
    for (const auto& [k, v] : s.points) {
      if (!(v > 0.0)) continue;
      std::snprintf(buf, sizeof(buf), "%c%.2f,%.2f ", first ? 'M' : 'L', map_x(k),
                    map_y(v));
      path += buf;
      first = false;
    }
    std::snprintf(buf, sizeof(buf),
                  "<path d='%s' fill='none' stroke='%s' stroke-width='1.6'/>\n",
                  path.c_str(),
                  kPalette[color % (sizeof(kPalette) / sizeof(kPalette[0]))]);
    out += buf;
    ++color;
  }
  return out;
}

}  // namespace

std::string render_sweep_svg(const McSummary& summary) {
  // one series per estimator, points ordered by K (first n value wins)
  std::map<std::string, Series> mse, bias_sq, variance;
  for (const McRow& row : summary.rows) {
    auto& m = mse[row.estimator];
    m.name = row.estimator;
    m.points.emplace_back(row.num_arms, row.mse);
    auto& b = bias_sq[row.estimator];
    b.name = row.estimator;
    b.points.emplace_back(row.num_arms, row.bias_sq);
    auto& v = variance[row.estimator];
    v.name = row.estimator;
    v.points.emplace_back(row.num_arms, row.variance);
  }
  const auto collect = [](const std::map<std::string, Series>& by_name) {
    std::vector<Series> out;
    for (const auto& [name, series] : by_name) {
      Series sorted = series;
      std::sort(sorted.points.begin(), sorted.points.end());
      out.push_back(std::move(sorted));
    }
    return out;
  };

  const int width = 3 * kPanelWidth;
  const int height = kPanelHeight + 18 * static_cast<int>(mse.size());
  std::string svg;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns='http://www.w3.org/2000/svg' width='%d' height='%d' "
                "viewBox='0 0 %d %d'>\n<rect width='100%%' height='100%%' "
                "fill='white'/>\n",
                width, height, width, height);
  svg += buf;
  svg += render_panel("MSE", collect(mse), 0);
  svg += render_panel("squared bias", collect(bias_sq), 1);
  svg += render_panel("variance", collect(variance), 2);

  // legend
  int row = 0;
  for (const auto& [name, series] : mse) {
    const double y = kPanelHeight + 14 + 18 * row;
    std::snprintf(buf, sizeof(buf),
                  "<line x1='%d' y1='%.1f' x2='%d' y2='%.1f' stroke='%s' "
                  "stroke-width='2'/>\n",
                  kMarginLeft, y - 4, kMarginLeft + 24, y - 4,
                  kPalette[row % (sizeof(kPalette) / sizeof(kPalette[0]))]);
    svg += buf;
    svg += svg_text(kMarginLeft + 30, y, name, 11, "start");
    ++row;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace npjive
