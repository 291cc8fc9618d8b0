#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wssim {

inline constexpr int kReportSchemaVersion = 1;

struct NodeMetrics {
    std::string id;
    double mobility_rate = 0.0;
    int offered = 0;            // unique packets handed to the MAC
    int delivered = 0;          // decoded at a BS
    int dropped = 0;            // retry budget exhausted
    int attempts = 0;           // transmissions put on the air
    int attempt_failures = 0;   // transmissions the BS could not decode
    long long bits_delivered = 0;
    double per = 0.0;           // attempt_failures / attempts
    double cdr = 0.0;           // delivered / offered
    double throughput_bps = 0.0;
    double collection_time_s = 0.0;  // first attempt to last delivery
    double mean_latency_s = 0.0;     // packet arrival to decode
    double tx_time_s = 0.0;
    double rx_time_s = 0.0;
    double idle_time_s = 0.0;
    double energy_tx_j = 0.0;
    double energy_rx_j = 0.0;
    double energy_idle_j = 0.0;
    double energy_total_j = 0.0;
    int handoffs = 0;
    int join_rejections = 0;
};

struct HandoffRecord {
    std::string node_id;
    std::string from_bs;
    std::string to_bs;
    double start_s = 0.0;
    bool success = false;
    double discovery_s = 0.0;
    double discovery_j = 0.0;
    int channels_visited = 0;
    int dwells = 0;
    double alignment_s = 0.0;
    double alignment_j = 0.0;
    double join_s = 0.0;
    double join_j = 0.0;
    double total_s = 0.0;
    double total_j = 0.0;
    double detected_bandwidth_hz = 0.0;
};

struct BsMetrics {
    std::string id;
    int packets_decoded = 0;
    long long bits_decoded = 0;
};

struct MetricsReport {
    std::string scenario_name;
    double plot_x = 0.0;
    uint64_t seed = 0;
    std::string fidelity;
    double horizon_s = 0.0;
    std::vector<NodeMetrics> nodes;
    std::vector<BsMetrics> base_stations;
    std::vector<HandoffRecord> handoffs;

    // Aggregates over all nodes.
    double mean_per = 0.0;
    double mean_cdr = 0.0;
    double aggregate_throughput_bps = 0.0;
    double total_energy_j = 0.0;
    double mean_latency_s = 0.0;
};

// Fill the derived per-node and aggregate fields from the raw counters.
void finalize_report(MetricsReport& report);

// One row per node; stable column set, schema_version first.
std::string report_csv(const MetricsReport& report);
// One row per handoff record.
std::string handoffs_csv(const MetricsReport& report);
// Full report as JSON (used by the plot command and the aggregator).
std::string report_json(const MetricsReport& report);
MetricsReport report_from_json(const std::string& text);

// Mean/stddev summary across seeds of the same scenario.
std::string aggregate_json(const std::vector<MetricsReport>& reports);
std::string aggregate_csv(const std::vector<MetricsReport>& reports);

}  // namespace wssim
