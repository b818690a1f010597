// svg.hpp - minimal self-contained SVG line charts and dB heatmaps.

#pragma once

#include <string>
#include <vector>

#include "afdmisac/common.hpp"

namespace afdmisac::svg {

struct Series {
    std::string label;
    std::vector<double> x, y;
};

struct Panel {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    bool log_y = false;
    std::vector<Series> series;
};

/// Panels side by side in one document.
std::string render_panels(const std::vector<Panel>& panels, const std::string& title);

/// 20 log10(|a| / max|a|), clipped below at floor_db. All-zero input maps to floor_db.
RMatrix magnitude_db(const CMatrix& a, double floor_db = -40.0);

/// Heatmap of a dB matrix on [lo, hi]; rows = delay bins (top to bottom).
std::string render_heatmap(const RMatrix& db, const std::string& title, double lo = -40.0, double hi = 0.0);

}  // namespace afdmisac::svg
