#pragma once

#include <string>
#include <vector>

#include "wssim/alignment.hpp"
#include "wssim/baseband.hpp"
#include "wssim/discovery.hpp"
#include "wssim/spectrum_db.hpp"

namespace wssim {

enum class Fidelity { Analytic, Sample, Mixed };

struct EnergyParams {
    double voltage_v = 3.8;
    double rx_current_a = 5.4e-3;
    double tx_current_a = 13.4e-3;
    double idle_current_a = 0.0;

    double tx_power_w() const { return voltage_v * tx_current_a; }
    double rx_power_w() const { return voltage_v * rx_current_a; }
    double idle_power_w() const { return voltage_v * idle_current_a; }
};

struct WorldSpec {
    double extent_x_m = 20000.0;
    double extent_y_m = 20000.0;
    double cell_m = 100.0;
    PropagationModel propagation;
    double correction_db = 7.5;
    double noise_floor_dbm = -114.0;
    double sensitivity_dbm = -110.0;
    double horizon_s = 30.0;
    uint64_t seed = 1;
    std::string stations_file;           // optional external registry
    std::vector<TvStation> stations;     // inline [station] sections
    EnergyParams energy;
};

struct PolicySpec {
    double reestimation_period_s = 1.0;
    bool cfo_compensation = true;
    bool cfo_feedback_on_ack = true;
    ScanStrategy scan_strategy = ScanStrategy::Narrow;
    Fidelity fidelity = Fidelity::Mixed;
    bool hint_enabled = true;
    bool channel_cache = true;    // remember the last served channels
    int max_retries = 4;
    bool ack_enabled = true;
    double cca_s = 5e-4;
    Modulation modulation = Modulation::Ook;
    double overlap_fraction = 0.5;
    double snr_jitter_db = 0.0;          // per-packet link jitter, 0 = off
    double est_sigma_hz_at_30db = 8.0;   // analytic estimator error model
    uint32_t preamble_word = 0xD970D970u;
    double discovery_backoff_base_s = 1.0;
    double discovery_backoff_cap_s = 60.0;
    DiscoveryConfig discovery;
    AlignmentConfig alignment;
};

struct BsSpec {
    std::string id;
    Point location;
    int channel = 21;
    double subcarrier_bandwidth_hz = 200e3;
    double tx_power_dbm = 15.0;
    double beacon_period_s = 0.5;
    double beacon_burst_s = 0.05;
};

struct MobilitySpec {
    enum class Kind { Stationary, Waypoint } kind = Kind::Stationary;
    Point from;
    Point to;
    double speed_mps = 0.0;

    // Expected distance covered per hour; the mobility ordering input.
    double rate_m_per_h() const {
        return kind == Kind::Waypoint ? speed_mps * 3600.0 : 0.0;
    }
};

struct TrafficSpec {
    int packet_count = 1000;
    int packet_bytes = 40;
    double packet_rate_pps = 0.0;  // 0 = saturated back-to-back
    double start_s = 0.0;
};

struct NodeSpec {
    std::string id;
    Point location;
    MobilitySpec mobility;
    double ppm = 0.0;  // oscillator offset ground truth
    TrafficSpec traffic;
    double tx_power_dbm = 15.0;
};

struct Scenario {
    std::string name = "scenario";
    double plot_x = 0.0;  // x coordinate this scenario contributes to plot families
    WorldSpec world;
    PolicySpec policy;
    std::vector<BsSpec> base_stations;
    std::vector<NodeSpec> nodes;
};

struct ValidationIssue {
    int line = 0;  // 0 when the issue is semantic rather than textual
    std::string field;
    std::string message;
};

// Collected problems; empty means the scenario is runnable.
std::vector<ValidationIssue> validate_scenario(const Scenario& s);

// Parse the sectioned key = value format. Unknown keys are issues only in
// strict mode. Throws std::invalid_argument listing every issue (with
// line/field) if parsing or validation fails.
Scenario parse_scenario(const std::string& text, bool strict = false);
Scenario load_scenario(const std::string& path, bool strict = false);

// Canonical serialization; load_scenario(save) == original.
std::string format_scenario(const Scenario& s);
void save_scenario(const Scenario& s, const std::string& path);

bool operator==(const Scenario& a, const Scenario& b);

// Spectrum map assembled from the world spec (inline stations plus the
// optional registry file, resolved relative to base_dir when given).
SpectrumMap build_spectrum_map(const WorldSpec& world, const std::string& base_dir = "");

}  // namespace wssim
