#pragma once

#include <string>
#include <vector>

#include "qsynth/train.hpp"

namespace qsynth {

struct SeriesPoint {
  long step = 0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int count = 0;
};

// Per-step mean and 95% CI of one metric across repetitions. Steps are the
// union over runs, ordered ascending.
std::vector<SeriesPoint> aggregate_series(const std::vector<std::vector<EvalPoint>>& runs,
                                          double EvalPoint::*field);

// Minimal self-contained SVG line chart: CI band plus mean polyline.
std::string render_series_svg(const std::string& title,
                              const std::vector<SeriesPoint>& points);

}  // namespace qsynth
