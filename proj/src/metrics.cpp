#include "wssim/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace wssim {

namespace {

using nlohmann::json;

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

json node_to_json(const NodeMetrics& m) {
    return json{{"id", m.id},
                {"mobility_rate", m.mobility_rate},
                {"offered", m.offered},
                {"delivered", m.delivered},
                {"dropped", m.dropped},
                {"attempts", m.attempts},
                {"attempt_failures", m.attempt_failures},
                {"bits_delivered", m.bits_delivered},
                {"per", m.per},
                {"cdr", m.cdr},
                {"throughput_bps", m.throughput_bps},
                {"collection_time_s", m.collection_time_s},
                {"mean_latency_s", m.mean_latency_s},
                {"tx_time_s", m.tx_time_s},
                {"rx_time_s", m.rx_time_s},
                {"idle_time_s", m.idle_time_s},
                {"energy_tx_j", m.energy_tx_j},
                {"energy_rx_j", m.energy_rx_j},
                {"energy_idle_j", m.energy_idle_j},
                {"energy_total_j", m.energy_total_j},
                {"handoffs", m.handoffs},
                {"join_rejections", m.join_rejections}};
}

NodeMetrics node_from_json(const json& j) {
    NodeMetrics m;
    m.id = j.at("id").get<std::string>();
    m.mobility_rate = j.at("mobility_rate").get<double>();
    m.offered = j.at("offered").get<int>();
    m.delivered = j.at("delivered").get<int>();
    m.dropped = j.at("dropped").get<int>();
    m.attempts = j.at("attempts").get<int>();
    m.attempt_failures = j.at("attempt_failures").get<int>();
    m.bits_delivered = j.at("bits_delivered").get<long long>();
    m.per = j.at("per").get<double>();
    m.cdr = j.at("cdr").get<double>();
    m.throughput_bps = j.at("throughput_bps").get<double>();
    m.collection_time_s = j.at("collection_time_s").get<double>();
    m.mean_latency_s = j.at("mean_latency_s").get<double>();
    m.tx_time_s = j.at("tx_time_s").get<double>();
    m.rx_time_s = j.at("rx_time_s").get<double>();
    m.idle_time_s = j.at("idle_time_s").get<double>();
    m.energy_tx_j = j.at("energy_tx_j").get<double>();
    m.energy_rx_j = j.at("energy_rx_j").get<double>();
    m.energy_idle_j = j.at("energy_idle_j").get<double>();
    m.energy_total_j = j.at("energy_total_j").get<double>();
    m.handoffs = j.at("handoffs").get<int>();
    m.join_rejections = j.at("join_rejections").get<int>();
    return m;
}

json handoff_to_json(const HandoffRecord& h) {
    return json{{"node_id", h.node_id},
                {"from_bs", h.from_bs},
                {"to_bs", h.to_bs},
                {"start_s", h.start_s},
                {"success", h.success},
                {"discovery_s", h.discovery_s},
                {"discovery_j", h.discovery_j},
                {"channels_visited", h.channels_visited},
                {"dwells", h.dwells},
                {"alignment_s", h.alignment_s},
                {"alignment_j", h.alignment_j},
                {"join_s", h.join_s},
                {"join_j", h.join_j},
                {"total_s", h.total_s},
                {"total_j", h.total_j},
                {"detected_bandwidth_hz", h.detected_bandwidth_hz}};
}

HandoffRecord handoff_from_json(const json& j) {
    HandoffRecord h;
    h.node_id = j.at("node_id").get<std::string>();
    h.from_bs = j.at("from_bs").get<std::string>();
    h.to_bs = j.at("to_bs").get<std::string>();
    h.start_s = j.at("start_s").get<double>();
    h.success = j.at("success").get<bool>();
    h.discovery_s = j.at("discovery_s").get<double>();
    h.discovery_j = j.at("discovery_j").get<double>();
    h.channels_visited = j.at("channels_visited").get<int>();
    h.dwells = j.at("dwells").get<int>();
    h.alignment_s = j.at("alignment_s").get<double>();
    h.alignment_j = j.at("alignment_j").get<double>();
    h.join_s = j.at("join_s").get<double>();
    h.join_j = j.at("join_j").get<double>();
    h.total_s = j.at("total_s").get<double>();
    h.total_j = j.at("total_j").get<double>();
    h.detected_bandwidth_hz = j.at("detected_bandwidth_hz").get<double>();
    return h;
}

}  // namespace

void finalize_report(MetricsReport& report) {
    double per_sum = 0.0, cdr_sum = 0.0, lat_sum = 0.0;
    int per_n = 0, cdr_n = 0, lat_n = 0;
    long long bits = 0;
    double energy = 0.0;
    for (auto& m : report.nodes) {
        m.per = m.attempts > 0 ? static_cast<double>(m.attempt_failures) / m.attempts : 0.0;
        m.cdr = m.offered > 0 ? static_cast<double>(m.delivered) / m.offered : 0.0;
        m.throughput_bps =
            report.horizon_s > 0.0 ? static_cast<double>(m.bits_delivered) / report.horizon_s : 0.0;
        if (m.attempts > 0) {
            per_sum += m.per;
            ++per_n;
        }
        if (m.offered > 0) {
            cdr_sum += m.cdr;
            ++cdr_n;
        }
        if (m.delivered > 0) {
            lat_sum += m.mean_latency_s;
            ++lat_n;
        }
        bits += m.bits_delivered;
        energy += m.energy_total_j;
    }
    report.mean_per = per_n > 0 ? per_sum / per_n : 0.0;
    report.mean_cdr = cdr_n > 0 ? cdr_sum / cdr_n : 0.0;
    report.mean_latency_s = lat_n > 0 ? lat_sum / lat_n : 0.0;
    report.aggregate_throughput_bps =
        report.horizon_s > 0.0 ? static_cast<double>(bits) / report.horizon_s : 0.0;
    report.total_energy_j = energy;
}

std::string report_csv(const MetricsReport& report) {
    std::string out =
        "schema_version,scenario,seed,fidelity,node,mobility_rate,offered,delivered,dropped,"
        "attempts,attempt_failures,bits_delivered,per,cdr,throughput_bps,collection_time_s,"
        "mean_latency_s,tx_time_s,rx_time_s,idle_time_s,energy_tx_j,energy_rx_j,energy_idle_j,"
        "energy_total_j,handoffs,join_rejections\n";
    for (const auto& m : report.nodes) {
        out += std::to_string(kReportSchemaVersion) + "," + report.scenario_name + "," +
               std::to_string(report.seed) + "," + report.fidelity + "," + m.id + "," +
               num(m.mobility_rate) + "," + std::to_string(m.offered) + "," +
               std::to_string(m.delivered) + "," + std::to_string(m.dropped) + "," +
               std::to_string(m.attempts) + "," + std::to_string(m.attempt_failures) + "," +
               std::to_string(m.bits_delivered) + "," + num(m.per) + "," + num(m.cdr) + "," +
               num(m.throughput_bps) + "," + num(m.collection_time_s) + "," +
               num(m.mean_latency_s) + "," + num(m.tx_time_s) + "," + num(m.rx_time_s) + "," +
               num(m.idle_time_s) + "," + num(m.energy_tx_j) + "," + num(m.energy_rx_j) + "," +
               num(m.energy_idle_j) + "," + num(m.energy_total_j) + "," +
               std::to_string(m.handoffs) + "," + std::to_string(m.join_rejections) + "\n";
    }
    return out;
}

std::string handoffs_csv(const MetricsReport& report) {
    std::string out =
        "schema_version,scenario,seed,node,from_bs,to_bs,start_s,success,discovery_s,discovery_j,"
        "channels_visited,dwells,alignment_s,alignment_j,join_s,join_j,total_s,total_j,"
        "detected_bandwidth_hz\n";
    for (const auto& h : report.handoffs) {
        out += std::to_string(kReportSchemaVersion) + "," + report.scenario_name + "," +
               std::to_string(report.seed) + "," + h.node_id + "," + h.from_bs + "," + h.to_bs +
               "," + num(h.start_s) + "," + (h.success ? "1" : "0") + "," + num(h.discovery_s) +
               "," + num(h.discovery_j) + "," + std::to_string(h.channels_visited) + "," +
               std::to_string(h.dwells) + "," + num(h.alignment_s) + "," + num(h.alignment_j) +
               "," + num(h.join_s) + "," + num(h.join_j) + "," + num(h.total_s) + "," +
               num(h.total_j) + "," + num(h.detected_bandwidth_hz) + "\n";
    }
    return out;
}

std::string report_json(const MetricsReport& report) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["scenario"] = report.scenario_name;
    j["plot_x"] = report.plot_x;
    j["seed"] = report.seed;
    j["fidelity"] = report.fidelity;
    j["horizon_s"] = report.horizon_s;
    j["mean_per"] = report.mean_per;
    j["mean_cdr"] = report.mean_cdr;
    j["aggregate_throughput_bps"] = report.aggregate_throughput_bps;
    j["total_energy_j"] = report.total_energy_j;
    j["mean_latency_s"] = report.mean_latency_s;
    j["nodes"] = json::array();
    for (const auto& m : report.nodes) j["nodes"].push_back(node_to_json(m));
    j["base_stations"] = json::array();
    for (const auto& b : report.base_stations)
        j["base_stations"].push_back(
            json{{"id", b.id}, {"packets_decoded", b.packets_decoded}, {"bits_decoded", b.bits_decoded}});
    j["handoffs"] = json::array();
    for (const auto& h : report.handoffs) j["handoffs"].push_back(handoff_to_json(h));
    return j.dump(2) + "\n";
}

MetricsReport report_from_json(const std::string& text) {
    const json j = json::parse(text);
    MetricsReport r;
    r.scenario_name = j.at("scenario").get<std::string>();
    r.plot_x = j.at("plot_x").get<double>();
    r.seed = j.at("seed").get<uint64_t>();
    r.fidelity = j.at("fidelity").get<std::string>();
    r.horizon_s = j.at("horizon_s").get<double>();
    r.mean_per = j.at("mean_per").get<double>();
    r.mean_cdr = j.at("mean_cdr").get<double>();
    r.aggregate_throughput_bps = j.at("aggregate_throughput_bps").get<double>();
    r.total_energy_j = j.at("total_energy_j").get<double>();
    r.mean_latency_s = j.at("mean_latency_s").get<double>();
    for (const auto& n : j.at("nodes")) r.nodes.push_back(node_from_json(n));
    for (const auto& b : j.at("base_stations"))
        r.base_stations.push_back({b.at("id").get<std::string>(),
                                   b.at("packets_decoded").get<int>(),
                                   b.at("bits_decoded").get<long long>()});
    for (const auto& h : j.at("handoffs")) r.handoffs.push_back(handoff_from_json(h));
    return r;
}

std::string aggregate_json(const std::vector<MetricsReport>& reports) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["runs"] = reports.size();
    if (!reports.empty()) j["scenario"] = reports.front().scenario_name;
    auto agg = [&](const char* key, auto getter) {
        Welford w;
        for (const auto& r : reports) w.add(getter(r));
        j[key] = json{{"mean", w.mean}, {"stddev", w.stddev()}, {"n", w.n}};
    };
    agg("mean_per", [](const MetricsReport& r) { return r.mean_per; });
    agg("mean_cdr", [](const MetricsReport& r) { return r.mean_cdr; });
    agg("aggregate_throughput_bps",
        [](const MetricsReport& r) { return r.aggregate_throughput_bps; });
    agg("total_energy_j", [](const MetricsReport& r) { return r.total_energy_j; });
    agg("mean_latency_s", [](const MetricsReport& r) { return r.mean_latency_s; });
    json seeds = json::array();
    for (const auto& r : reports) seeds.push_back(r.seed);
    j["seeds"] = seeds;
    return j.dump(2) + "\n";
}

std::string aggregate_csv(const std::vector<MetricsReport>& reports) {
    std::string out = "schema_version,scenario,metric,mean,stddev,n\n";
    if (reports.empty()) return out;
    auto row = [&](const char* metric, auto getter) {
        Welford w;
        for (const auto& r : reports) w.add(getter(r));
        out += std::to_string(kReportSchemaVersion) + "," + reports.front().scenario_name + "," +
               metric + "," + num(w.mean) + "," + num(w.stddev()) + "," + std::to_string(w.n) +
               "\n";
    };
    row("mean_per", [](const MetricsReport& r) { return r.mean_per; });
    row("mean_cdr", [](const MetricsReport& r) { return r.mean_cdr; });
    row("aggregate_throughput_bps",
        [](const MetricsReport& r) { return r.aggregate_throughput_bps; });
    row("total_energy_j", [](const MetricsReport& r) { return r.total_energy_j; });
    row("mean_latency_s", [](const MetricsReport& r) { return r.mean_latency_s; });
    return out;
}

}  // namespace wssim
