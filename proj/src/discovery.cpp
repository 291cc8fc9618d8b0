#include "wssim/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wssim {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

SignalFeatures extract_features(const SignalTrace& trace, const DiscoveryConfig& cfg) {
    if (trace.rss_series_dbm.empty())
        throw std::invalid_argument("extract_features: empty RSS series");
    if (trace.window_s < cfg.min_window_s)
        throw std::invalid_argument("extract_features: observation window too short");

    const double floor_dbm = cfg.noise_floor_dbm + cfg.floor_margin_db;
    double sum_all = 0.0, sum_hi = 0.0, sum_hi_sq = 0.0;
    size_t n_hi = 0;
    for (double v : trace.rss_series_dbm) {
        sum_all += v;
        if (v > floor_dbm) {
            sum_hi += v;
            sum_hi_sq += v * v;
            ++n_hi;
        }
    }
    const auto n = static_cast<double>(trace.rss_series_dbm.size());

    SignalFeatures f;
    f.duty_cycle = static_cast<double>(n_hi) / n;
    if (n_hi > 0) {
        const double mean_hi = sum_hi / static_cast<double>(n_hi);
        f.mean_rss_dbm = mean_hi;
        f.amplitude_variance_db2 = sum_hi_sq / static_cast<double>(n_hi) - mean_hi * mean_hi;
        if (f.amplitude_variance_db2 < 0.0) f.amplitude_variance_db2 = 0.0;
    } else {
        f.mean_rss_dbm = sum_all / n;
        f.amplitude_variance_db2 = 0.0;
    }
    f.adjacent_diff_db = std::abs(f.mean_rss_dbm - trace.adjacent_rss_dbm);
    return f;
}

Classification classify(const SignalFeatures& f, const DiscoveryConfig& cfg) {
    Classification c;
    c.features = f;

    if (f.mean_rss_dbm < cfg.sensitivity_dbm) {
        c.verdict = SignalClass::Noise;
        c.confidence = clamp01((cfg.sensitivity_dbm - f.mean_rss_dbm) / 10.0);
        return c;
    }

    const double tv_margin =
        std::min({(f.mean_rss_dbm - kProtectionThresholdDbm) / 10.0,
                  (f.duty_cycle - cfg.duty_threshold) / (1.0 - cfg.duty_threshold),
                  (cfg.variance_threshold_db2 - f.amplitude_variance_db2) / cfg.variance_threshold_db2,
                  (f.adjacent_diff_db - cfg.similarity_threshold_db) / cfg.similarity_threshold_db});
    if (tv_margin > 0.0) {
        c.verdict = SignalClass::Tv;
        c.confidence = clamp01(tv_margin);
        return c;
    }

    const double bs_margin =
        std::max({(f.amplitude_variance_db2 - cfg.variance_threshold_db2) / cfg.variance_threshold_db2,
                  (cfg.duty_threshold - f.duty_cycle) / cfg.duty_threshold,
                  (cfg.similarity_threshold_db - f.adjacent_diff_db) / cfg.similarity_threshold_db});
    if (bs_margin > 0.0) {
        c.verdict = SignalClass::BaseStation;
        c.confidence = clamp01(std::min(bs_margin, (f.mean_rss_dbm - cfg.sensitivity_dbm) / 10.0));
        return c;
    }

    // Steady continuous carrier, distinct neighbors, but below the
    // protection contour: most plausibly a distant TV transmitter.
    c.verdict = SignalClass::Tv;
    c.confidence = 0.0;
    return c;
}

ScanPlan build_scan_plan(const std::optional<std::vector<SpectrumMap::ProbePoint>>& hint,
                         const std::vector<int>& full_band, ScanStrategy strategy,
                         const DiscoveryConfig& cfg, const std::vector<int>& preferred_channels) {
    std::set<int> candidates;
    if (hint.has_value()) {
        for (const auto& probe : *hint)
            candidates.insert(probe.channels.begin(), probe.channels.end());
    } else {
        candidates.insert(full_band.begin(), full_band.end());
    }
    if (candidates.empty()) throw std::invalid_argument("build_scan_plan: empty candidate set");

    ScanPlan plan;
    plan.strategy = strategy;
    plan.sense_bandwidth_hz = strategy == ScanStrategy::Wide ? 2.0 * cfg.narrow_sense_bandwidth_hz
                                                             : cfg.narrow_sense_bandwidth_hz;
    plan.dwell_s = std::max(cfg.dwell_s, cfg.min_window_s);

    for (int ch : preferred_channels) {
        if (candidates.count(ch) && std::find(plan.channels.begin(), plan.channels.end(), ch) ==
                                        plan.channels.end())
            plan.channels.push_back(ch);
    }
    for (int ch : candidates) {
        if (std::find(plan.channels.begin(), plan.channels.end(), ch) == plan.channels.end())
            plan.channels.push_back(ch);
    }

    for (int ch : plan.channels) {
        const double lo = channel_low_hz(ch);
        const auto positions =
            static_cast<size_t>(std::ceil(kTvChannelWidthHz / plan.sense_bandwidth_hz - 1e-9));
        for (size_t i = 0; i < positions; ++i) {
            double center = lo + plan.sense_bandwidth_hz * (0.5 + static_cast<double>(i));
            center = std::min(center, lo + kTvChannelWidthHz - plan.sense_bandwidth_hz / 2.0);
            plan.visits.push_back({ch, center});
        }
    }
    return plan;
}

DiscoveryResult discover(const ScanPlan& plan, ChannelSensor& sensor, double start_s,
                         double rx_power_w, const DiscoveryConfig& cfg) {
    DiscoveryResult res;
    const double power_w =
        rx_power_w * (plan.strategy == ScanStrategy::Wide ? cfg.wide_rx_power_factor : 1.0);
    int last_channel = INT32_MIN;
    int skip_channel = INT32_MIN;

    for (const auto& visit : plan.visits) {
        if (visit.channel == skip_channel) continue;
        if (res.dwells > 0) res.elapsed_s += cfg.retune_s;
        if (visit.channel != last_channel) {
            ++res.channels_visited;
            last_channel = visit.channel;
        }

        SignalTrace trace = sensor.sense(visit.channel, visit.center_hz, plan.sense_bandwidth_hz,
                                         start_s + res.elapsed_s, plan.dwell_s);
        res.elapsed_s += plan.dwell_s;
        ++res.dwells;

        const Classification verdict = classify(extract_features(trace, cfg), cfg);
        if (verdict.verdict == SignalClass::BaseStation) {
            res.found = true;
            res.bs_id = trace.source_id;
            res.channel = visit.channel;
            res.center_hz = visit.center_hz;
            break;
        }
        if (verdict.verdict == SignalClass::Tv) skip_channel = visit.channel;  // channel occupied
    }
    res.energy_j = power_w * res.elapsed_s;
    return res;
}

double discovery_backoff_s(int failed_rounds, double base_s, double cap_s) {
    if (failed_rounds < 1) return 0.0;
    const double raw = base_s * std::pow(2.0, static_cast<double>(failed_rounds - 1));
    return std::min(raw, cap_s);
}

}  // namespace wssim
