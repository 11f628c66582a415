#pragma once

#include "stag/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace stag {

struct CurveSeries {
  std::string name;
  std::vector<double> values;  // one entry per frame
};

/// Line chart of per-frame curves against time in seconds.
void write_curve_svg(std::ostream& os, const std::string& title, const std::vector<CurveSeries>& series,
                     double fps, const std::string& y_label = "error (m)");

/// Top-down (x, y) view: scene points, observed root, ground-truth and
/// predicted future roots, and flagged contact points.
struct BirdseyeView {
  const SceneCloud* scene = nullptr;
  const RootTrajectory* observed = nullptr;
  const RootTrajectory* gt_future = nullptr;
  const RootTrajectory* predicted_future = nullptr;
  const ContactMap* contacts = nullptr;
  std::string title;
};

void write_birdseye_svg(std::ostream& os, const BirdseyeView& view);

/// Reads a CSV whose first column is the frame index and whose remaining
/// columns are named series.
std::vector<CurveSeries> read_curve_csv(std::istream& is, const std::string& origin = "curves");

}  // namespace stag
