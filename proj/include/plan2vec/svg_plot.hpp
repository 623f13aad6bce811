#ifndef PLAN2VEC_SVG_PLOT_HPP
#define PLAN2VEC_SVG_PLOT_HPP

#include <filesystem>
#include <string>
#include <vector>

namespace plan2vec {

struct SvgPoint {
  double x = 0, y = 0;
  std::string color = "#3366cc";
};

struct SvgSeries {
  std::string label;
  std::string color = "#3366cc";
  std::vector<std::pair<double, double>> points;
};

struct SvgBar {
  std::string label;
  double value = 0;
  std::string color = "#3366cc";
};

// One <circle> per point; auto-scaled axes with a light frame.
void write_scatter_svg(const std::filesystem::path& path, const std::vector<SvgPoint>& points,
                       const std::string& title);

void write_lines_svg(const std::filesystem::path& path, const std::vector<SvgSeries>& series,
                     const std::string& title);

void write_bars_svg(const std::filesystem::path& path, const std::vector<SvgBar>& bars,
                    const std::string& title);

}  // namespace plan2vec

#endif
