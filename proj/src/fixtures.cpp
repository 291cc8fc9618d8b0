#include "wssim/fixtures.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace wssim {

namespace {

// Shared [world]/[policy] block for the metropolitan vehicle fixtures:
// 11 dBm transmitters over an urban log-distance channel put the 600 m
// shuttle right at the OOK decoding cliff, where residual CFO bites.
const char* kMetroWorld = R"(
[world]
extent_m = 4000 2000
cell_m = 100
propagation = log_distance
path_loss_exponent = 3.1
reference_distance_m = 1
reference_loss_db = 26.4
noise_floor_dbm = -114
sensitivity_dbm = -110
horizon_s = 10

[policy]
modulation = ook
ack = off
max_retries = 0
cca_s = 0.0001
snr_jitter_db = 1.5
reestimation_period_s = 1.0
)";

std::string metro_mobile_nodes(bool with_stationary) {
    std::string o;
    if (with_stationary) {
        o += R"(
[node]
id = s1
location_m = 1450 995
ppm = 18
mobility = stationary
packet_count = 2000
packet_bytes = 40
tx_power_dbm = 11

[node]
id = s2
location_m = 1450 1005
ppm = -22
mobility = stationary
packet_count = 2000
packet_bytes = 40
tx_power_dbm = 11
)";
    }
    const double ppm[5] = {45, -50, 55, -60, 48};
    for (int i = 0; i < 5; ++i) {
        const double y = 990 + 5 * i;
        o += "\n[node]\nid = m" + std::to_string(i + 1) + "\n";
        o += "location_m = 1550 " + std::to_string(y) + "\n";
        o += "ppm = " + std::to_string(ppm[i]) + "\n";
        o += "mobility = waypoint 1550 " + std::to_string(y) + " 1650 " + std::to_string(y) +
             " 8.94\n";
        o += "packet_count = 2000\npacket_bytes = 40\ntx_power_dbm = 11\n";
    }
    return o;
}

std::string metro_bs() {
    return R"(
[bs]
id = bs1
location_m = 1000 1000
channel = 21
subcarrier_bandwidth_hz = 100000
tx_power_dbm = 30
beacon_period_s = 0.2
beacon_burst_s = 0.08
)";
}

std::string metropolitan(const std::string& name, bool compensation, bool with_stationary) {
    std::string o = "[meta]\nname = " + name + "\nplot_x = 600\n" + kMetroWorld;
    o += std::string("cfo_compensation = ") + (compensation ? "on" : "off") + "\n";
    o += metro_bs();
    o += metro_mobile_nodes(with_stationary);
    return o;
}

std::string metro_stationary_baseline() {
    std::string o = "[meta]\nname = metropolitan_stationary\nplot_x = 600\n";
    o += kMetroWorld;
    o += "cfo_compensation = on\n";
    o += metro_bs();
    const double ppm[5] = {45, -50, 55, -60, 48};
    for (int i = 0; i < 5; ++i) {
        o += "\n[node]\nid = m" + std::to_string(i + 1) + "\n";
        o += "location_m = 1600 " + std::to_string(990 + 5 * i) + "\n";
        o += "ppm = " + std::to_string(ppm[i]) + "\n";
        o += "mobility = stationary\n";
        o += "packet_count = 2000\npacket_bytes = 40\ntx_power_dbm = 11\n";
    }
    return o;
}

std::string distance_fixture(int distance_m) {
    std::string o = "[meta]\nname = distance_" + std::to_string(distance_m) + "\nplot_x = " +
                    std::to_string(distance_m) + "\n";
    o += kMetroWorld;
    o += "cfo_compensation = on\n";
    o += metro_bs();
    const int x0 = 1000 + distance_m;
    o += "\n[node]\nid = n1\nlocation_m = " + std::to_string(x0) + " 1000\nppm = 35\n";
    o += "mobility = waypoint " + std::to_string(x0 - 30) + " 1000 " + std::to_string(x0 + 30) +
         " 1000 8.94\n";
    o += "packet_count = 2000\npacket_bytes = 40\ntx_power_dbm = 11\n";
    return o;
}

std::string energy_baseline() {
    return R"([meta]
name = energy_baseline
plot_x = 10

[world]
extent_m = 2000 2000
cell_m = 100
propagation = log_distance
path_loss_exponent = 3.1
reference_distance_m = 1
reference_loss_db = 26.4
noise_floor_dbm = -114
sensitivity_dbm = -110
horizon_s = 5

[policy]
modulation = ook
ack = off
max_retries = 0
cca_s = 0.0001
cfo_compensation = off
snr_jitter_db = 0

[bs]
id = bs1
location_m = 1000 1000
channel = 21
subcarrier_bandwidth_hz = 200000
tx_power_dbm = 15

[node]
id = n1
location_m = 1010 1000
ppm = 0
mobility = stationary
packet_count = 1000
packet_bytes = 40
tx_power_dbm = 15
)";
}

std::string crossval() {
    return R"([meta]
name = crossval
plot_x = 840

[world]
extent_m = 4000 2000
cell_m = 100
propagation = log_distance
path_loss_exponent = 3.1
reference_distance_m = 1
reference_loss_db = 26.4
noise_floor_dbm = -114
sensitivity_dbm = -110
horizon_s = 5

[policy]
modulation = bpsk
ack = off
max_retries = 0
cca_s = 0.0001
cfo_compensation = on
snr_jitter_db = 0
fidelity = analytic

[bs]
id = bs1
location_m = 1000 1000
channel = 21
subcarrier_bandwidth_hz = 200000
tx_power_dbm = 30

[node]
id = n1
location_m = 1830 1000
ppm = 10
mobility = stationary
packet_count = 100
packet_bytes = 40
tx_power_dbm = 11

[node]
id = n2
location_m = 1850 1000
ppm = -10
mobility = stationary
packet_count = 100
packet_bytes = 40
tx_power_dbm = 11
)";
}

std::string indoor_hallway() {
    return R"([meta]
name = indoor_hallway
plot_x = 10

[world]
extent_m = 400 200
cell_m = 10
propagation = log_distance
path_loss_exponent = 4.5
reference_distance_m = 1
reference_loss_db = 40
noise_floor_dbm = -114
sensitivity_dbm = -110
horizon_s = 100

[policy]
modulation = ook
ack = on
max_retries = 4
cca_s = 0.0001
cfo_compensation = on
snr_jitter_db = 1
reestimation_period_s = 1.0

[bs]
id = bs1
location_m = 140 100
channel = 14
subcarrier_bandwidth_hz = 200000
tx_power_dbm = 15
beacon_period_s = 0.2
beacon_burst_s = 0.08

[bs]
id = bs2
location_m = 260 100
channel = 16
subcarrier_bandwidth_hz = 200000
tx_power_dbm = 15
beacon_period_s = 0.2
beacon_burst_s = 0.08

[node]
id = walker
location_m = 145 102
ppm = -18
mobility = waypoint 145 102 255 102 1.4
packet_count = 800
packet_bytes = 40
packet_rate_pps = 10
tx_power_dbm = 15

[node]
id = desk
location_m = 150 98
ppm = 12
mobility = stationary
packet_count = 800
packet_bytes = 40
packet_rate_pps = 10
tx_power_dbm = 15
)";
}

std::string detroit() {
    std::string o = R"([meta]
name = detroit
plot_x = 900

[world]
extent_m = 6000 2000
cell_m = 100
propagation = log_distance
path_loss_exponent = 3.1
reference_distance_m = 1
reference_loss_db = 26.4
noise_floor_dbm = -114
sensitivity_dbm = -110
horizon_s = 120

[policy]
modulation = ook
ack = off
max_retries = 0
cca_s = 0.0001
cfo_compensation = on
snr_jitter_db = 1.5
reestimation_period_s = 1.0

[station]
channel = 22
location_m = 5500 1800
tx_power_dbm = 80
height_m = 300

[station]
channel = 33
location_m = 300 200
tx_power_dbm = 80
height_m = 300

[bs]
id = bs1
location_m = 2000 1000
channel = 14
subcarrier_bandwidth_hz = 200000
tx_power_dbm = 11
beacon_period_s = 0.2
beacon_burst_s = 0.08

[bs]
id = bs2
location_m = 3800 1000
channel = 16
subcarrier_bandwidth_hz = 200000
tx_power_dbm = 11
beacon_period_s = 0.2
beacon_burst_s = 0.08
)";
    const double ppm[7] = {20, -30, 40, -45, 55, -60, 35};
    for (int i = 0; i < 7; ++i) {
        const int y = 985 + 5 * i;
        o += "\n[node]\nid = car" + std::to_string(i + 1) + "\n";
        o += "location_m = 2850 " + std::to_string(y) + "\n";
        o += "ppm = " + std::to_string(ppm[i]) + "\n";
        o += "mobility = waypoint 2850 " + std::to_string(y) + " 4750 " + std::to_string(y) +
             " 17.88\n";
        o += "packet_count = 2000\npacket_bytes = 40\npacket_rate_pps = 20\ntx_power_dbm = 11\n";
    }
    return o;
}

std::string align_bw(int khz) {
    std::string o = "[meta]\nname = align_bw_" + std::to_string(khz) + "\nplot_x = " +
                    std::to_string(khz) + "\n";
    o += R"(
[world]
extent_m = 6000 2000
cell_m = 100
propagation = log_distance
path_loss_exponent = 3.1
reference_distance_m = 1
reference_loss_db = 26.4
noise_floor_dbm = -114
sensitivity_dbm = -110
horizon_s = 120

[policy]
modulation = ook
ack = off
max_retries = 0
cca_s = 0.0001
cfo_compensation = on
snr_jitter_db = 1

[bs]
id = bs1
location_m = 2000 1000
channel = 14
subcarrier_bandwidth_hz = 200000
tx_power_dbm = 11
beacon_period_s = 0.2
beacon_burst_s = 0.08

[bs]
id = bs2
location_m = 3800 1000
channel = 16
)";
    o += "subcarrier_bandwidth_hz = " + std::to_string(khz * 1000) + "\n";
    o += R"(tx_power_dbm = 11
beacon_period_s = 0.2
beacon_burst_s = 0.08

[node]
id = rover
location_m = 2850 1000
ppm = 25
mobility = waypoint 2850 1000 4750 1000 17.88
packet_count = 1000
packet_bytes = 40
packet_rate_pps = 10
tx_power_dbm = 11
)";
    return o;
}

}  // namespace

std::map<std::string, std::string> bundled_fixtures() {
    std::map<std::string, std::string> out;
    out["metropolitan"] = metropolitan("metropolitan", true, true);
    out["metropolitan_cfo_on"] = metropolitan("metropolitan_cfo_on", true, false);
    out["metropolitan_cfo_off"] = metropolitan("metropolitan_cfo_off", false, false);
    out["metropolitan_stationary"] = metro_stationary_baseline();
    for (int d : {300, 500, 700, 900}) out["distance_" + std::to_string(d)] = distance_fixture(d);
    out["energy_baseline"] = energy_baseline();
    out["crossval"] = crossval();
    out["indoor_hallway"] = indoor_hallway();
    out["detroit"] = detroit();
    for (int khz : {100, 200, 400, 600}) out["align_bw_" + std::to_string(khz)] = align_bw(khz);
    return out;
}

Scenario fixture_scenario(const std::string& name) {
    const auto all = bundled_fixtures();
    const auto it = all.find(name);
    if (it == all.end()) throw std::invalid_argument("unknown fixture '" + name + "'");
    return parse_scenario(it->second);
}

void write_fixtures(const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, text] : bundled_fixtures()) {
        std::ofstream f(std::filesystem::path(dir) / (name + ".scn"));
        if (!f) throw std::runtime_error("cannot write fixture " + name);
        f << text;
    }
}

}  // namespace wssim
