#include "stag/plot.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace stag {

namespace {

constexpr double kWidth = 720, kHeight = 480, kMargin = 60;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

struct Box2 {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -std::numeric_limits<double>::infinity();
  double y0 = std::numeric_limits<double>::infinity(), y1 = -std::numeric_limits<double>::infinity();

  void add(double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) return;
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  void finish(bool equal_aspect) {
    if (x0 > x1) x0 = 0, x1 = 1;
    if (y0 > y1) y0 = 0, y1 = 1;
    if (x1 - x0 < 1e-9) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 < 1e-9) y0 -= 0.5, y1 += 0.5;
    if (equal_aspect) {
      const double sx = (x1 - x0) / (kWidth - 2 * kMargin), sy = (y1 - y0) / (kHeight - 2 * kMargin);
      const double s = std::max(sx, sy);
      const double cx = (x0 + x1) / 2, cy = (y0 + y1) / 2;
      x0 = cx - s * (kWidth - 2 * kMargin) / 2;
      x1 = cx + s * (kWidth - 2 * kMargin) / 2;
      y0 = cy - s * (kHeight - 2 * kMargin) / 2;
      y1 = cy + s * (kHeight - 2 * kMargin) / 2;
    }
  }
  [[nodiscard]] double px(double x) const { return kMargin + (x - x0) / (x1 - x0) * (kWidth - 2 * kMargin); }
  [[nodiscard]] double py(double y) const {
    return kHeight - kMargin - (y - y0) / (y1 - y0) * (kHeight - 2 * kMargin);
  }
};

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

void open_svg(std::ostream& os, const std::string& title) {
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
     << "</text>\n";
}

void axes(std::ostream& os, const Box2& b, const std::string& x_label, const std::string& y_label) {
  os << "<g stroke=\"#444\" fill=\"none\"><rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\""
     << kWidth - 2 * kMargin << "\" height=\"" << kHeight - 2 * kMargin << "\"/></g>\n";
  for (int i = 0; i <= 4; ++i) {
    const double x = b.x0 + (b.x1 - b.x0) * i / 4, y = b.y0 + (b.y1 - b.y0) * i / 4;
    os << "<text x=\"" << b.px(x) << "\" y=\"" << kHeight - kMargin + 16 << "\" text-anchor=\"middle\">"
       << std::setprecision(2) << x << "</text>\n";
    os << "<text x=\"" << kMargin - 6 << "\" y=\"" << b.py(y) + 4 << "\" text-anchor=\"end\">" << y
       << "</text>\n";
  }
  os << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 16 << "\" text-anchor=\"middle\">"
     << escape(x_label) << "</text>\n";
  os << "<text x=\"16\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << kHeight / 2 << ")\">" << escape(y_label) << "</text>\n";
}

void polyline(std::ostream& os, const Box2& b, const std::vector<std::pair<double, double>>& pts,
              const char* color, const char* dash = nullptr) {
  if (pts.empty()) return;
  os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"";
  if (dash) os << " stroke-dasharray=\"" << dash << '"';
  os << " points=\"";
  for (const auto& [x, y] : pts)
    if (std::isfinite(x) && std::isfinite(y)) os << b.px(x) << ',' << b.py(y) << ' ';
  os << "\"/>\n";
}

void legend(std::ostream& os, const std::vector<std::pair<std::string, const char*>>& items) {
  double y = kMargin + 14;
  for (const auto& [name, color] : items) {
    os << "<line x1=\"" << kWidth - kMargin - 150 << "\" y1=\"" << y - 4 << "\" x2=\""
       << kWidth - kMargin - 130 << "\" y2=\"" << y - 4 << "\" stroke=\"" << color
       << "\" stroke-width=\"3\"/>\n<text x=\"" << kWidth - kMargin - 124 << "\" y=\"" << y << "\">"
       << escape(name) << "</text>\n";
    y += 16;
  }
}

std::vector<std::pair<double, double>> xy(const RootTrajectory& r) {
  std::vector<std::pair<double, double>> out;
  for (Index t = 0; t < r.length(); ++t) out.emplace_back(r.positions(t, 0), r.positions(t, 1));
  return out;
}

}  // namespace

void write_curve_svg(std::ostream& os, const std::string& title, const std::vector<CurveSeries>& series,
                     double fps, const std::string& y_label) {
  Box2 b;
  for (const CurveSeries& s : series)
    for (std::size_t f = 0; f < s.values.size(); ++f) b.add((f + 1) / fps, s.values[f]);
  b.add(b.x0, 0.0);
  b.finish(false);
  open_svg(os, title);
  axes(os, b, "time (s)", y_label);
  std::vector<std::pair<std::string, const char*>> items;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    std::vector<std::pair<double, double>> pts;
    for (std::size_t f = 0; f < series[i].values.size(); ++f)
      pts.emplace_back((f + 1) / fps, series[i].values[f]);
    polyline(os, b, pts, color);
    items.emplace_back(series[i].name, color);
  }
  legend(os, items);
  os << "</svg>\n";
}

void write_birdseye_svg(std::ostream& os, const BirdseyeView& v) {
  Box2 b;
  for (const RootTrajectory* r : {v.observed, v.gt_future, v.predicted_future})
    if (r)
      for (Index t = 0; t < r->length(); ++t) b.add(r->positions(t, 0), r->positions(t, 1));
  // Frame the trajectories with a margin of scene around them.
  if (b.x0 <= b.x1) {
    const double pad = 1.5;
    b.x0 -= pad, b.x1 += pad, b.y0 -= pad, b.y1 += pad;
  } else if (v.scene) {
    for (Index n = 0; n < v.scene->size(); ++n) b.add(v.scene->points(n, 0), v.scene->points(n, 1));
  }
  b.finish(true);
  open_svg(os, v.title.empty() ? "top-down view" : v.title);
  axes(os, b, "x (m)", "y (m)");
  if (v.scene) {
    // Points above the lowest level are obstacles; the floor is drawn lighter.
    const double floor_z = v.scene->size() ? v.scene->points.col(2).minCoeff() : 0.0;
    os << "<g stroke=\"none\">\n";
    for (Index n = 0; n < v.scene->size(); ++n) {
      const double x = v.scene->points(n, 0), y = v.scene->points(n, 1);
      if (x < b.x0 || x > b.x1 || y < b.y0 || y > b.y1) continue;
      const bool raised = v.scene->points(n, 2) > floor_z + 0.05;
      os << "<circle cx=\"" << b.px(x) << "\" cy=\"" << b.py(y) << "\" r=\"" << (raised ? 1.6 : 0.8)
         << "\" fill=\"" << (raised ? "#777" : "#ddd") << "\"/>\n";
    }
    os << "</g>\n";
  }
  std::vector<std::pair<std::string, const char*>> items;
  if (v.observed) {
    polyline(os, b, xy(*v.observed), "#000");
    items.emplace_back("observed", "#000");
  }
  if (v.gt_future) {
    polyline(os, b, xy(*v.gt_future), "#2ca02c");
    items.emplace_back("ground truth", "#2ca02c");
  }
  if (v.predicted_future) {
    polyline(os, b, xy(*v.predicted_future), "#d62728", "6,3");
    items.emplace_back("predicted", "#d62728");
  }
  if (v.contacts) {
    os << "<g fill=\"#1f77b4\" stroke=\"none\">\n";
    for (Index t = 0; t < v.contacts->length(); ++t)
      for (int j = 0; j < v.contacts->joint_count(); ++j)
        if (v.contacts->flag(t, j) > 0.5) {
          const Vector3<double> p = v.contacts->point(t, j);
          os << "<circle cx=\"" << b.px(p.x()) << "\" cy=\"" << b.py(p.y()) << "\" r=\"2.5\"/>\n";
        }
    os << "</g>\n";
    items.emplace_back("contacts", "#1f77b4");
  }
  legend(os, items);
  os << "</svg>\n";
}

std::vector<CurveSeries> read_curve_csv(std::istream& is, const std::string& origin) {
  std::string line;
  if (!std::getline(is, line)) throw DataError(origin + ": empty curve file");
  std::vector<CurveSeries> series;
  {
    std::stringstream ss(line);
    std::string name;
    std::getline(ss, name, ',');  // frame column
    while (std::getline(ss, name, ',')) series.push_back({name, {}});
  }
  if (series.empty()) throw DataError(origin + ": no series columns");
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    for (CurveSeries& s : series) {
      if (!std::getline(ss, cell, ','))
        throw DataError(origin + ":" + std::to_string(line_no) + ": too few columns");
      try {
        s.values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw DataError(origin + ":" + std::to_string(line_no) + ": non-numeric value '" + cell + "'");
      }
    }
  }
  return series;
}

}  // namespace stag
