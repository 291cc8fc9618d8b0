#include "wssim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace wssim {

namespace {

struct Line {
    int number = 0;
    std::string key;
    std::string value;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Parser {
    std::vector<ValidationIssue> issues;
    bool strict = false;

    void issue(int line, const std::string& field, const std::string& message) {
        issues.push_back({line, field, message});
    }

    double num(const Line& l) {
        try {
            size_t pos = 0;
            const double v = std::stod(l.value, &pos);
            if (pos != l.value.size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            issue(l.number, l.key, "expected a number, got '" + l.value + "'");
            return 0.0;
        }
    }

    int integer(const Line& l) {
        const double v = num(l);
        if (v != std::floor(v)) issue(l.number, l.key, "expected an integer");
        return static_cast<int>(v);
    }

    bool onoff(const Line& l) {
        if (l.value == "on" || l.value == "true" || l.value == "1") return true;
        if (l.value == "off" || l.value == "false" || l.value == "0") return false;
        issue(l.number, l.key, "expected on|off");
        return false;
    }

    std::vector<double> numbers(const Line& l, size_t expect) {
        std::istringstream ss(l.value);
        std::vector<double> out;
        double v;
        while (ss >> v) out.push_back(v);
        if (out.size() != expect) {
            issue(l.number, l.key,
                  "expected " + std::to_string(expect) + " numbers, got " + std::to_string(out.size()));
            out.resize(expect, 0.0);
        }
        return out;
    }
};

const char* fidelity_name(Fidelity f) {
    switch (f) {
        case Fidelity::Analytic: return "analytic";
        case Fidelity::Sample: return "sample";
        case Fidelity::Mixed: return "mixed";
    }
    return "mixed";
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

Scenario parse_scenario(const std::string& text, bool strict) {
    Parser p;
    p.strict = strict;
    Scenario s;
    s.base_stations.clear();
    s.nodes.clear();

    std::istringstream stream(text);
    std::string raw;
    int line_no = 0;
    std::string section = "";
    BsSpec* bs = nullptr;
    NodeSpec* node = nullptr;
    TvStation* station = nullptr;

    while (std::getline(stream, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') {
                p.issue(line_no, line, "malformed section header");
                continue;
            }
            section = line.substr(1, line.size() - 2);
            if (section == "bs") {
                s.base_stations.emplace_back();
                bs = &s.base_stations.back();
            } else if (section == "node") {
                s.nodes.emplace_back();
                node = &s.nodes.back();
            } else if (section == "station") {
                s.world.stations.emplace_back();
                station = &s.world.stations.back();
            } else if (section != "world" && section != "policy" && section != "meta") {
                p.issue(line_no, section, "unknown section");
                section = "";
            }
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            p.issue(line_no, line, "expected key = value");
            continue;
        }
        Line l{line_no, trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
        const std::string& k = l.key;

        if (section == "meta") {
            if (k == "name") s.name = l.value;
            else if (k == "plot_x") s.plot_x = p.num(l);
            else if (strict) p.issue(line_no, k, "unknown key in [meta]");
        } else if (section == "world") {
            auto& w = s.world;
            if (k == "extent_m") {
                const auto v = p.numbers(l, 2);
                w.extent_x_m = v[0];
                w.extent_y_m = v[1];
            } else if (k == "cell_m") w.cell_m = p.num(l);
            else if (k == "propagation") {
                if (l.value == "log_distance") w.propagation.kind = PropagationModel::Kind::LogDistance;
                else if (l.value == "free_space") w.propagation.kind = PropagationModel::Kind::FreeSpace;
                else p.issue(line_no, k, "expected log_distance|free_space");
            } else if (k == "path_loss_exponent") w.propagation.exponent = p.num(l);
            else if (k == "reference_distance_m") w.propagation.reference_distance_m = p.num(l);
            else if (k == "reference_loss_db") w.propagation.reference_loss_db = p.num(l);
            else if (k == "correction_db") w.correction_db = p.num(l);
            else if (k == "noise_floor_dbm") w.noise_floor_dbm = p.num(l);
            else if (k == "sensitivity_dbm") w.sensitivity_dbm = p.num(l);
            else if (k == "horizon_s") w.horizon_s = p.num(l);
            else if (k == "seed") w.seed = static_cast<uint64_t>(p.num(l));
            else if (k == "stations_file") w.stations_file = l.value;
            else if (k == "voltage_v") w.energy.voltage_v = p.num(l);
            else if (k == "rx_current_a") w.energy.rx_current_a = p.num(l);
            else if (k == "tx_current_a") w.energy.tx_current_a = p.num(l);
            else if (k == "idle_current_a") w.energy.idle_current_a = p.num(l);
            else if (strict) p.issue(line_no, k, "unknown key in [world]");
        } else if (section == "policy") {
            auto& pol = s.policy;
            if (k == "reestimation_period_s") pol.reestimation_period_s = p.num(l);
            else if (k == "cfo_compensation") pol.cfo_compensation = p.onoff(l);
            else if (k == "cfo_feedback_on_ack") pol.cfo_feedback_on_ack = p.onoff(l);
            else if (k == "scan_strategy") {
                if (l.value == "narrow") pol.scan_strategy = ScanStrategy::Narrow;
                else if (l.value == "wide") pol.scan_strategy = ScanStrategy::Wide;
                else p.issue(line_no, k, "expected narrow|wide");
            } else if (k == "fidelity") {
                if (l.value == "analytic") pol.fidelity = Fidelity::Analytic;
                else if (l.value == "sample") pol.fidelity = Fidelity::Sample;
                else if (l.value == "mixed") pol.fidelity = Fidelity::Mixed;
                else p.issue(line_no, k, "expected analytic|sample|mixed");
            } else if (k == "hint") pol.hint_enabled = p.onoff(l);
            else if (k == "channel_cache") pol.channel_cache = p.onoff(l);
            else if (k == "max_retries") pol.max_retries = p.integer(l);
            else if (k == "ack") pol.ack_enabled = p.onoff(l);
            else if (k == "cca_s") pol.cca_s = p.num(l);
            else if (k == "modulation") {
                if (l.value == "ook") pol.modulation = Modulation::Ook;
                else if (l.value == "bpsk") pol.modulation = Modulation::Bpsk;
                else p.issue(line_no, k, "expected ook|bpsk");
            } else if (k == "overlap_fraction") pol.overlap_fraction = p.num(l);
            else if (k == "snr_jitter_db") pol.snr_jitter_db = p.num(l);
            else if (k == "est_sigma_hz_at_30db") pol.est_sigma_hz_at_30db = p.num(l);
            else if (k == "preamble_word") {
                try {
                    pol.preamble_word = static_cast<uint32_t>(std::stoul(l.value, nullptr, 0));
                } catch (const std::exception&) {
                    p.issue(line_no, k, "expected a 32-bit word (decimal or 0x hex)");
                }
            } else if (k == "discovery_backoff_base_s") pol.discovery_backoff_base_s = p.num(l);
            else if (k == "discovery_backoff_cap_s") pol.discovery_backoff_cap_s = p.num(l);
            else if (k == "duty_threshold") pol.discovery.duty_threshold = p.num(l);
            else if (k == "variance_threshold_db2") pol.discovery.variance_threshold_db2 = p.num(l);
            else if (k == "similarity_threshold_db") pol.discovery.similarity_threshold_db = p.num(l);
            else if (k == "min_observation_window_s") pol.discovery.min_window_s = p.num(l);
            else if (k == "retune_time_s") pol.discovery.retune_s = p.num(l);
            else if (k == "dwell_s") pol.discovery.dwell_s = p.num(l);
            else if (k == "alignment_timeout_s") pol.alignment.timeout_s = p.num(l);
            else if (k == "alignment_psd_size") pol.alignment.psd_size = static_cast<size_t>(p.integer(l));
            else if (k == "alignment_sense_bandwidth_hz") pol.alignment.sense_bandwidth_hz = p.num(l);
            else if (k == "alignment_window") {
                if (l.value == "rectangular") pol.alignment.window = PsdWindow::Rectangular;
                else if (l.value == "hann") pol.alignment.window = PsdWindow::Hann;
                else p.issue(line_no, k, "expected rectangular|hann");
            } else if (strict) p.issue(line_no, k, "unknown key in [policy]");
        } else if (section == "bs") {
            if (k == "id") bs->id = l.value;
            else if (k == "location_m") {
                const auto v = p.numbers(l, 2);
                bs->location = {v[0], v[1]};
            } else if (k == "channel") bs->channel = p.integer(l);
            else if (k == "subcarrier_bandwidth_hz") bs->subcarrier_bandwidth_hz = p.num(l);
            else if (k == "tx_power_dbm") bs->tx_power_dbm = p.num(l);
            else if (k == "beacon_period_s") bs->beacon_period_s = p.num(l);
            else if (k == "beacon_burst_s") bs->beacon_burst_s = p.num(l);
            else if (strict) p.issue(line_no, k, "unknown key in [bs]");
        } else if (section == "node") {
            if (k == "id") node->id = l.value;
            else if (k == "location_m") {
                const auto v = p.numbers(l, 2);
                node->location = {v[0], v[1]};
            } else if (k == "ppm") node->ppm = p.num(l);
            else if (k == "mobility") {
                std::istringstream ms(l.value);
                std::string kind;
                ms >> kind;
                if (kind == "stationary") {
                    node->mobility.kind = MobilitySpec::Kind::Stationary;
                } else if (kind == "waypoint") {
                    node->mobility.kind = MobilitySpec::Kind::Waypoint;
                    if (!(ms >> node->mobility.from.x_m >> node->mobility.from.y_m >>
                          node->mobility.to.x_m >> node->mobility.to.y_m >>
                          node->mobility.speed_mps))
                        p.issue(line_no, k, "expected: waypoint x1 y1 x2 y2 speed_mps");
                } else {
                    p.issue(line_no, k, "expected stationary|waypoint ...");
                }
            } else if (k == "packet_count") node->traffic.packet_count = p.integer(l);
            else if (k == "packet_bytes") node->traffic.packet_bytes = p.integer(l);
            else if (k == "packet_rate_pps") node->traffic.packet_rate_pps = p.num(l);
            else if (k == "traffic_start_s") node->traffic.start_s = p.num(l);
            else if (k == "tx_power_dbm") node->tx_power_dbm = p.num(l);
            else if (strict) p.issue(line_no, k, "unknown key in [node]");
        } else if (section == "station") {
            if (k == "channel") station->channel = p.integer(l);
            else if (k == "location_m") {
                const auto v = p.numbers(l, 2);
                station->location = {v[0], v[1]};
            } else if (k == "tx_power_dbm") station->tx_power_dbm = p.num(l);
            else if (k == "height_m") station->antenna_height_m = p.num(l);
            else if (strict) p.issue(line_no, k, "unknown key in [station]");
        } else {
            p.issue(line_no, k, "key outside any section");
        }
    }

    auto semantic = validate_scenario(s);
    p.issues.insert(p.issues.end(), semantic.begin(), semantic.end());
    if (!p.issues.empty()) {
        std::string msg = "scenario invalid:";
        for (const auto& i : p.issues) {
            msg += "\n  ";
            if (i.line > 0) msg += "line " + std::to_string(i.line) + ", ";
            msg += i.field + ": " + i.message;
        }
        throw std::invalid_argument(msg);
    }
    return s;
}

std::vector<ValidationIssue> validate_scenario(const Scenario& s) {
    std::vector<ValidationIssue> out;
    auto bad = [&](const std::string& field, const std::string& message) {
        out.push_back({0, field, message});
    };

    if (s.world.horizon_s <= 0.0) bad("world.horizon_s", "horizon must be > 0");
    if (s.world.extent_x_m <= 0.0 || s.world.extent_y_m <= 0.0)
        bad("world.extent_m", "extent must be positive");
    if (s.world.cell_m <= 0.0) bad("world.cell_m", "cell size must be > 0");
    if (s.world.noise_floor_dbm > s.world.sensitivity_dbm)
        bad("world.noise_floor_dbm", "noise floor above receiver sensitivity");

    std::set<std::string> ids;
    for (const auto& bs : s.base_stations) {
        const std::string where = "bs '" + bs.id + "'";
        if (bs.id.empty()) bad("bs.id", "base station id required");
        if (!ids.insert("bs:" + bs.id).second) bad("bs.id", "duplicate id '" + bs.id + "'");
        if (!is_tv_channel(bs.channel))
            bad(where + ".channel", "channel " + std::to_string(bs.channel) + " outside 14..51");
        if (!is_allowed_bandwidth(bs.subcarrier_bandwidth_hz))
            bad(where + ".subcarrier_bandwidth_hz",
                "bandwidth must be one of 100 kHz, 200 kHz, 400 kHz, 600 kHz");
    }
    for (const auto& n : s.nodes) {
        const std::string where = "node '" + n.id + "'";
        if (n.id.empty()) bad("node.id", "node id required");
        if (!ids.insert("node:" + n.id).second) bad("node.id", "duplicate id '" + n.id + "'");
        if (n.traffic.packet_bytes <= 0) bad(where + ".packet_bytes", "packet size must be > 0");
        if (n.traffic.packet_count < 0) bad(where + ".packet_count", "packet count must be >= 0");
        if (n.mobility.kind == MobilitySpec::Kind::Waypoint && n.mobility.speed_mps < 0.0)
            bad(where + ".mobility", "waypoint speed must be >= 0");
        if (!std::isfinite(n.ppm)) bad(where + ".ppm", "ppm must be finite");
    }
    for (const auto& st : s.world.stations) {
        if (!is_tv_channel(st.channel))
            bad("station.channel", "channel " + std::to_string(st.channel) + " outside 14..51");
    }
    if (s.policy.overlap_fraction < 0.0 || s.policy.overlap_fraction >= 1.0)
        bad("policy.overlap_fraction", "overlap must be in [0, 1)");
    if (s.policy.max_retries < 0) bad("policy.max_retries", "retries must be >= 0");
    if (s.policy.reestimation_period_s <= 0.0)
        bad("policy.reestimation_period_s", "period must be > 0");
    if (s.policy.cca_s <= 0.0) bad("policy.cca_s", "carrier-sense duration must be > 0");
    return out;
}

Scenario load_scenario(const std::string& path, bool strict) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open scenario: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_scenario(ss.str(), strict);
}

std::string format_scenario(const Scenario& s) {
    std::string o;
    o += "[meta]\n";
    o += "name = " + s.name + "\n";
    o += "plot_x = " + fmt(s.plot_x) + "\n";

    const auto& w = s.world;
    o += "\n[world]\n";
    o += "extent_m = " + fmt(w.extent_x_m) + " " + fmt(w.extent_y_m) + "\n";
    o += "cell_m = " + fmt(w.cell_m) + "\n";
    o += std::string("propagation = ") +
         (w.propagation.kind == PropagationModel::Kind::FreeSpace ? "free_space" : "log_distance") +
         "\n";
    o += "path_loss_exponent = " + fmt(w.propagation.exponent) + "\n";
    o += "reference_distance_m = " + fmt(w.propagation.reference_distance_m) + "\n";
    o += "reference_loss_db = " + fmt(w.propagation.reference_loss_db) + "\n";
    o += "correction_db = " + fmt(w.correction_db) + "\n";
    o += "noise_floor_dbm = " + fmt(w.noise_floor_dbm) + "\n";
    o += "sensitivity_dbm = " + fmt(w.sensitivity_dbm) + "\n";
    o += "horizon_s = " + fmt(w.horizon_s) + "\n";
    o += "seed = " + std::to_string(w.seed) + "\n";
    if (!w.stations_file.empty()) o += "stations_file = " + w.stations_file + "\n";
    o += "voltage_v = " + fmt(w.energy.voltage_v) + "\n";
    o += "rx_current_a = " + fmt(w.energy.rx_current_a) + "\n";
    o += "tx_current_a = " + fmt(w.energy.tx_current_a) + "\n";
    o += "idle_current_a = " + fmt(w.energy.idle_current_a) + "\n";

    const auto& pol = s.policy;
    o += "\n[policy]\n";
    o += "reestimation_period_s = " + fmt(pol.reestimation_period_s) + "\n";
    o += std::string("cfo_compensation = ") + (pol.cfo_compensation ? "on" : "off") + "\n";
    o += std::string("cfo_feedback_on_ack = ") + (pol.cfo_feedback_on_ack ? "on" : "off") + "\n";
    o += std::string("scan_strategy = ") +
         (pol.scan_strategy == ScanStrategy::Wide ? "wide" : "narrow") + "\n";
    o += std::string("fidelity = ") + fidelity_name(pol.fidelity) + "\n";
    o += std::string("hint = ") + (pol.hint_enabled ? "on" : "off") + "\n";
    o += std::string("channel_cache = ") + (pol.channel_cache ? "on" : "off") + "\n";
    o += "max_retries = " + std::to_string(pol.max_retries) + "\n";
    o += std::string("ack = ") + (pol.ack_enabled ? "on" : "off") + "\n";
    o += "cca_s = " + fmt(pol.cca_s) + "\n";
    o += std::string("modulation = ") + (pol.modulation == Modulation::Bpsk ? "bpsk" : "ook") + "\n";
    o += "overlap_fraction = " + fmt(pol.overlap_fraction) + "\n";
    o += "snr_jitter_db = " + fmt(pol.snr_jitter_db) + "\n";
    o += "est_sigma_hz_at_30db = " + fmt(pol.est_sigma_hz_at_30db) + "\n";
    {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "0x%08X", pol.preamble_word);
        o += std::string("preamble_word = ") + buf + "\n";
    }
    o += "discovery_backoff_base_s = " + fmt(pol.discovery_backoff_base_s) + "\n";
    o += "discovery_backoff_cap_s = " + fmt(pol.discovery_backoff_cap_s) + "\n";
    o += "duty_threshold = " + fmt(pol.discovery.duty_threshold) + "\n";
    o += "variance_threshold_db2 = " + fmt(pol.discovery.variance_threshold_db2) + "\n";
    o += "similarity_threshold_db = " + fmt(pol.discovery.similarity_threshold_db) + "\n";
    o += "min_observation_window_s = " + fmt(pol.discovery.min_window_s) + "\n";
    o += "retune_time_s = " + fmt(pol.discovery.retune_s) + "\n";
    o += "dwell_s = " + fmt(pol.discovery.dwell_s) + "\n";
    o += "alignment_timeout_s = " + fmt(pol.alignment.timeout_s) + "\n";
    o += "alignment_psd_size = " + std::to_string(pol.alignment.psd_size) + "\n";
    o += "alignment_sense_bandwidth_hz = " + fmt(pol.alignment.sense_bandwidth_hz) + "\n";
    o += std::string("alignment_window = ") +
         (pol.alignment.window == PsdWindow::Hann ? "hann" : "rectangular") + "\n";

    for (const auto& st : s.world.stations) {
        o += "\n[station]\n";
        o += "channel = " + std::to_string(st.channel) + "\n";
        o += "location_m = " + fmt(st.location.x_m) + " " + fmt(st.location.y_m) + "\n";
        o += "tx_power_dbm = " + fmt(st.tx_power_dbm) + "\n";
        o += "height_m = " + fmt(st.antenna_height_m) + "\n";
    }
    for (const auto& bs : s.base_stations) {
        o += "\n[bs]\n";
        o += "id = " + bs.id + "\n";
        o += "location_m = " + fmt(bs.location.x_m) + " " + fmt(bs.location.y_m) + "\n";
        o += "channel = " + std::to_string(bs.channel) + "\n";
        o += "subcarrier_bandwidth_hz = " + fmt(bs.subcarrier_bandwidth_hz) + "\n";
        o += "tx_power_dbm = " + fmt(bs.tx_power_dbm) + "\n";
        o += "beacon_period_s = " + fmt(bs.beacon_period_s) + "\n";
        o += "beacon_burst_s = " + fmt(bs.beacon_burst_s) + "\n";
    }
    for (const auto& n : s.nodes) {
        o += "\n[node]\n";
        o += "id = " + n.id + "\n";
        o += "location_m = " + fmt(n.location.x_m) + " " + fmt(n.location.y_m) + "\n";
        o += "ppm = " + fmt(n.ppm) + "\n";
        if (n.mobility.kind == MobilitySpec::Kind::Waypoint) {
            o += "mobility = waypoint " + fmt(n.mobility.from.x_m) + " " + fmt(n.mobility.from.y_m) +
                 " " + fmt(n.mobility.to.x_m) + " " + fmt(n.mobility.to.y_m) + " " +
                 fmt(n.mobility.speed_mps) + "\n";
        } else {
            o += "mobility = stationary\n";
        }
        o += "packet_count = " + std::to_string(n.traffic.packet_count) + "\n";
        o += "packet_bytes = " + std::to_string(n.traffic.packet_bytes) + "\n";
        o += "packet_rate_pps = " + fmt(n.traffic.packet_rate_pps) + "\n";
        o += "traffic_start_s = " + fmt(n.traffic.start_s) + "\n";
        o += "tx_power_dbm = " + fmt(n.tx_power_dbm) + "\n";
    }
    return o;
}

void save_scenario(const Scenario& s, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << format_scenario(s);
}

bool operator==(const Scenario& a, const Scenario& b) {
    return format_scenario(a) == format_scenario(b);
}

SpectrumMap build_spectrum_map(const WorldSpec& world, const std::string& base_dir) {
    SpectrumMap map(world.extent_x_m, world.extent_y_m, world.cell_m, world.propagation,
                    world.correction_db);
    for (const auto& st : world.stations) map.add_station(st);
    if (!world.stations_file.empty()) {
        std::filesystem::path p(world.stations_file);
        if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
        for (const auto& st : load_station_registry(p.string())) map.add_station(st);
    }
    return map;
}

}  // namespace wssim
