#include "plan2vec/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "plan2vec/binio.hpp"

namespace plan2vec {

namespace {

constexpr double kWidth = 640, kHeight = 480, kMargin = 48;

struct Range {
  double lo = 0, hi = 1;
  double map(double v, double out_lo, double out_hi) const {
    double span = hi - lo;
    if (span <= 0) span = 1;
    return out_lo + (v - lo) / span * (out_hi - out_lo);
  }
};

Range fit(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) return {0, 1};
  if (lo == hi) return {lo - 0.5, hi + 0.5};
  double pad = (hi - lo) * 0.05;
  return {lo - pad, hi + pad};
}

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string header(const std::string& title) {
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
       num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
       "\" fill=\"white\"/>\n";
  s += "<rect x=\"" + num(kMargin) + "\" y=\"" + num(kMargin) + "\" width=\"" +
       num(kWidth - 2 * kMargin) + "\" height=\"" + num(kHeight - 2 * kMargin) +
       "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
  s += "<text x=\"" + num(kWidth / 2) + "\" y=\"" + num(kMargin / 2) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" + title +
       "</text>\n";
  return s;
}

}  // namespace

void write_scatter_svg(const std::filesystem::path& path, const std::vector<SvgPoint>& points,
                       const std::string& title) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  for (const auto& p : points) {
    xlo = std::min(xlo, p.x);
    xhi = std::max(xhi, p.x);
    ylo = std::min(ylo, p.y);
    yhi = std::max(yhi, p.y);
  }
  Range rx = fit(xlo, xhi), ry = fit(ylo, yhi);
  std::string s = header(title);
  for (const auto& p : points) {
    double cx = rx.map(p.x, kMargin, kWidth - kMargin);
    double cy = ry.map(p.y, kHeight - kMargin, kMargin);  // y up
    s += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"2\" fill=\"" + p.color +
         "\" fill-opacity=\"0.7\"/>\n";
  }
  s += "</svg>\n";
  write_file_atomic(path, s);
}

void write_lines_svg(const std::filesystem::path& path, const std::vector<SvgSeries>& series,
                     const std::string& title) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  for (const auto& ser : series)
    for (auto [x, y] : ser.points) {
      xlo = std::min(xlo, x);
      xhi = std::max(xhi, x);
      ylo = std::min(ylo, y);
      yhi = std::max(yhi, y);
    }
  Range rx = fit(xlo, xhi), ry = fit(ylo, yhi);
  std::string s = header(title);
  double label_y = kMargin + 16;
  for (const auto& ser : series) {
    std::string pts;
    for (auto [x, y] : ser.points) {
      pts += num(rx.map(x, kMargin, kWidth - kMargin)) + "," +
             num(ry.map(y, kHeight - kMargin, kMargin)) + " ";
    }
    s += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + ser.color +
         "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + num(kWidth - kMargin - 4) + "\" y=\"" + num(label_y) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" +
         ser.color + "\">" + ser.label + "</text>\n";
    label_y += 16;
  }
  s += "</svg>\n";
  write_file_atomic(path, s);
}

void write_bars_svg(const std::filesystem::path& path, const std::vector<SvgBar>& bars,
                    const std::string& title) {
  double hi = 0;
  for (const auto& b : bars) hi = std::max(hi, b.value);
  Range ry = fit(0, hi);
  std::string s = header(title);
  const double span = kWidth - 2 * kMargin;
  const double slot = bars.empty() ? span : span / double(bars.size());
  for (size_t i = 0; i < bars.size(); ++i) {
    double x = kMargin + slot * double(i) + slot * 0.15;
    double w = slot * 0.7;
    double top = ry.map(bars[i].value, kHeight - kMargin, kMargin);
    s += "<rect x=\"" + num(x) + "\" y=\"" + num(top) + "\" width=\"" + num(w) +
         "\" height=\"" + num(kHeight - kMargin - top) + "\" fill=\"" + bars[i].color +
         "\"/>\n";
    s += "<text x=\"" + num(x + w / 2) + "\" y=\"" + num(kHeight - kMargin + 16) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
         bars[i].label + "</text>\n";
    s += "<text x=\"" + num(x + w / 2) + "\" y=\"" + num(top - 4) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
         num(bars[i].value) + "</text>\n";
  }
  s += "</svg>\n";
  write_file_atomic(path, s);
}

}  // namespace plan2vec
