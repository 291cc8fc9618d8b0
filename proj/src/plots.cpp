#include "wssim/plots.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace wssim {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

struct Welford {
    int n = 0;
    double mean = 0.0, m2 = 0.0;
    void add(double v) {
        ++n;
        const double d = v - mean;
        mean += d / n;
        m2 += d * (v - mean);
    }
    double stddev() const { return n > 1 ? std::sqrt(m2 / (n - 1)) : 0.0; }
};

struct Sample {
    double x;
    std::string series;
    double value;
};

}  // namespace

const char* plot_figure_name(PlotFigure f) {
    switch (f) {
        case PlotFigure::PerVsMobility: return "per_vs_mobility";
        case PlotFigure::ThroughputVsNodes: return "throughput_vs_nodes";
        case PlotFigure::EnergyVsDistance: return "energy_vs_distance";
        case PlotFigure::LatencyVsNodes: return "latency_vs_nodes";
        case PlotFigure::CdrVsDistance: return "cdr_vs_distance";
        case PlotFigure::CdrCfoComparison: return "cdr_cfo_comparison";
        case PlotFigure::AlignmentLatencyVsBw: return "alignment_latency_vs_bw";
    }
    return "unknown";
}

PlotFigure plot_figure_from_name(const std::string& name) {
    for (auto f : {PlotFigure::PerVsMobility, PlotFigure::ThroughputVsNodes,
                   PlotFigure::EnergyVsDistance, PlotFigure::LatencyVsNodes,
                   PlotFigure::CdrVsDistance, PlotFigure::CdrCfoComparison,
                   PlotFigure::AlignmentLatencyVsBw}) {
        if (name == plot_figure_name(f)) return f;
    }
    throw std::invalid_argument("unknown figure '" + name + "'");
}

std::string emit_plot_data(const std::vector<MetricsReport>& reports, PlotFigure figure) {
    std::vector<Sample> samples;
    for (const auto& r : reports) {
        switch (figure) {
            case PlotFigure::PerVsMobility:
                for (const auto& n : r.nodes) {
                    if (n.attempts == 0) continue;
                    samples.push_back({n.mobility_rate > 0.0 ? 1.0 : 0.0,
                                       r.scenario_name + "/" +
                                           (n.mobility_rate > 0.0 ? "mobile" : "stationary"),
                                       n.per});
                }
                break;
            case PlotFigure::ThroughputVsNodes:
                samples.push_back({static_cast<double>(r.nodes.size()), r.scenario_name,
                                   r.aggregate_throughput_bps});
                break;
            case PlotFigure::EnergyVsDistance: {
                Welford w;
                for (const auto& n : r.nodes) w.add(n.energy_total_j);
                if (w.n == 0)
                    throw std::invalid_argument("energy_vs_distance: reports carry no node energy");
                samples.push_back({r.plot_x, r.scenario_name, w.mean});
                break;
            }
            case PlotFigure::LatencyVsNodes: {
                double worst = 0.0;
                for (const auto& n : r.nodes) worst = std::max(worst, n.collection_time_s);
                samples.push_back({static_cast<double>(r.nodes.size()), r.scenario_name, worst});
                break;
            }
            case PlotFigure::CdrVsDistance:
                samples.push_back({r.plot_x, r.scenario_name, r.mean_cdr});
                break;
            case PlotFigure::CdrCfoComparison:
                samples.push_back({r.plot_x, r.scenario_name, r.mean_cdr});
                break;
            case PlotFigure::AlignmentLatencyVsBw: {
                bool any = false;
                for (const auto& h : r.handoffs) {
                    if (!h.success) continue;
                    samples.push_back({h.detected_bandwidth_hz / 1e3, r.scenario_name,
                                       h.alignment_s});
                    any = true;
                }
                if (!any)
                    throw std::invalid_argument(
                        "alignment_latency_vs_bw: reports carry no successful handoff records");
                break;
            }
        }
    }

    std::map<std::pair<std::string, double>, Welford> groups;
    for (const auto& s : samples) groups[{s.series, s.x}].add(s.value);

    std::string out = "schema_version,figure,x,series,mean,stddev,n\n";
    for (const auto& [key, w] : groups) {
        out += std::to_string(kReportSchemaVersion) + "," + plot_figure_name(figure) + "," +
               num(key.second) + "," + key.first + "," + num(w.mean) + "," + num(w.stddev()) +
               "," + std::to_string(w.n) + "\n";
    }
    return out;
}

}  // namespace wssim
