#pragma once

#include <string>
#include <vector>

#include "scanline/grid.hpp"
#include "scanline/io.hpp"

namespace scanline {

// Target vs estimate over frames with a +-1 std band and an MAE annotation.
// Exactly two polylines (target, estimate) and one band path.
std::string plot_timeseries(const std::vector<ParsedFrameRow>& rows);

// One box (min/q1/median/q3/max) per (policy, budget) in first-appearance
// order, completed runs only.
std::string plot_mae_box(const std::vector<ParsedMaeRow>& rows);

// Grayscale heat image with the selected columns marked.
std::string plot_saliency(const Grid& map, const std::vector<int>& selected_columns);

}  // namespace scanline
