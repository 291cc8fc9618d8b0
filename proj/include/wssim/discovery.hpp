#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wssim/spectrum_db.hpp"

namespace wssim {

// RSS observations from one dwell on one channel, plus the mean RSS of the
// two neighboring channels. source_id carries the ground-truth transmitter
// for bookkeeping once a verdict says base station; the classifier itself
// never looks at it.
struct SignalTrace {
    std::vector<double> rss_series_dbm;
    double window_s = 0.0;
    int channel = 0;
    double adjacent_rss_dbm = -300.0;
    std::string source_id;
};

enum class SignalClass { Tv, BaseStation, Noise };

struct SignalFeatures {
    double mean_rss_dbm = -300.0;
    double amplitude_variance_db2 = 0.0;
    double duty_cycle = 0.0;
    double adjacent_diff_db = 0.0;  // |mean_rss - neighbor mean|
};

struct Classification {
    SignalClass verdict = SignalClass::Noise;
    double confidence = 0.0;  // in [0, 1]
    SignalFeatures features;
};

enum class ScanStrategy { Narrow, Wide };

struct DiscoveryConfig {
    double duty_threshold = 0.9;
    double variance_threshold_db2 = 1.0;
    double similarity_threshold_db = 6.0;  // adjacent channels closer than this look like one BS
    double min_window_s = 0.1;
    double retune_s = 1e-3;
    double sensitivity_dbm = -110.0;
    double noise_floor_dbm = -114.0;
    double floor_margin_db = 6.0;
    double dwell_s = 0.1;
    double narrow_sense_bandwidth_hz = 200e3;
    double wide_rx_power_factor = 1.5;  // wide sensing draws more RX power
};

SignalFeatures extract_features(const SignalTrace& trace, const DiscoveryConfig& cfg = {});

// Decision order: below sensitivity is noise; a strong, steady, continuous
// carrier whose neighbors differ a lot is a TV station; anything audible
// that fluctuates, idles or blankets similar adjacent channels is a BS.
// A steady carrier too weak for the protection contour falls back to TV
// with low confidence.
Classification classify(const SignalFeatures& f, const DiscoveryConfig& cfg = {});

struct ScanVisit {
    int channel = 0;
    double center_hz = 0.0;
};

// Ordered sweep over candidate channels. Each channel is covered by
// ceil(channel_width / sense_bandwidth) dwell positions, so wide sensing
// shortens the plan proportionally.
struct ScanPlan {
    std::vector<int> channels;
    ScanStrategy strategy = ScanStrategy::Narrow;
    double sense_bandwidth_hz = 0.0;
    double dwell_s = 0.0;
    std::vector<ScanVisit> visits;
};

// With a hint (the eight-point channel lists handed over by the serving
// BS) only the union of hinted channels is scanned; otherwise the full
// band. preferred_channels (e.g. a node's recently served channels) are
// moved to the front of the order.
ScanPlan build_scan_plan(const std::optional<std::vector<SpectrumMap::ProbePoint>>& hint,
                         const std::vector<int>& full_band, ScanStrategy strategy,
                         const DiscoveryConfig& cfg = {},
                         const std::vector<int>& preferred_channels = {});

// What the node can do during discovery: listen. Implemented by the
// simulator world and by synthetic test fixtures.
class ChannelSensor {
public:
    virtual ~ChannelSensor() = default;
    virtual SignalTrace sense(int channel, double center_hz, double bandwidth_hz, double start_s,
                              double dwell_s) = 0;
};

struct DiscoveryResult {
    bool found = false;
    std::string bs_id;
    int channel = 0;
    double center_hz = 0.0;
    double elapsed_s = 0.0;
    double energy_j = 0.0;
    int channels_visited = 0;
    int dwells = 0;
};

// Visit the plan in order, classify every dwell, stop at the first BS
// verdict. A TV verdict abandons the rest of that channel. The node only
// receives: elapsed time is dwells plus retunes (none before the first)
// and energy is RX power over the whole elapsed span.
DiscoveryResult discover(const ScanPlan& plan, ChannelSensor& sensor, double start_s,
                         double rx_power_w, const DiscoveryConfig& cfg = {});

// Exponential backoff before the next scan round after an empty sweep.
double discovery_backoff_s(int failed_rounds, double base_s = 1.0, double cap_s = 60.0);

}  // namespace wssim
