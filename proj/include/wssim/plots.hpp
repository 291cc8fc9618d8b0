#pragma once

#include <string>
#include <vector>

#include "wssim/metrics.hpp"

namespace wssim {

// Figure families the plot command can emit. Each produces a tidy CSV
// (schema_version, figure, x, series, mean, stddev, n) aggregated over
// any number of per-seed reports.
enum class PlotFigure {
    PerVsMobility,
    ThroughputVsNodes,
    EnergyVsDistance,
    LatencyVsNodes,
    CdrVsDistance,
    CdrCfoComparison,
    AlignmentLatencyVsBw,
};

const char* plot_figure_name(PlotFigure f);
// Throws std::invalid_argument for unknown names.
PlotFigure plot_figure_from_name(const std::string& name);

// Throws std::invalid_argument naming the missing metric when the reports
// cannot feed the figure (e.g. no handoff records for alignment latency).
std::string emit_plot_data(const std::vector<MetricsReport>& reports, PlotFigure figure);

}  // namespace wssim
