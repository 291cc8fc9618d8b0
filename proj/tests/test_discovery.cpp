#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "wssim/discovery.hpp"
#include "wssim/rng.hpp"

using namespace wssim;

namespace {

SignalTrace make_trace(std::vector<double> series, double window, int channel, double adjacent) {
    SignalTrace t;
    t.rss_series_dbm = std::move(series);
    t.window_s = window;
    t.channel = channel;
    t.adjacent_rss_dbm = adjacent;
    return t;
}

// Synthetic trace families mirroring the spectrum-analyzer observations:
// TV is strong, steady and continuous with distinct neighbors; a BS is
// bursty, fluctuating and blankets similar adjacent channels.
SignalTrace tv_trace(Rng& rng, double feature_noise_db = 0.0) {
    std::vector<double> series(200);
    for (auto& v : series) v = -60.0 + feature_noise_db * rng.gaussian();
    return make_trace(std::move(series), 0.2, 20, -95.0 + 5.0 * rng.gaussian() * 0.0);
}

SignalTrace bs_trace(Rng& rng, double feature_noise_db = 0.0) {
    std::vector<double> series(200);
    for (size_t i = 0; i < series.size(); ++i) {
        const bool burst = (i / 20) % 2 == 0 && rng.uniform() < 0.9;
        series[i] = burst ? -75.0 + 3.0 * rng.gaussian() + feature_noise_db * rng.gaussian()
                          : -114.0 + 1.0 * rng.gaussian();
    }
    return make_trace(std::move(series), 0.2, 20, -76.0 + 1.0 * rng.gaussian());
}

SignalTrace noise_trace(Rng& rng) {
    std::vector<double> series(200);
    for (auto& v : series) v = -120.0 + 2.0 * rng.gaussian();
    return make_trace(std::move(series), 0.2, 20, -119.0);
}

}  // namespace

TEST_CASE("feature extraction on constructed traces") {
    const DiscoveryConfig cfg;

    SUBCASE("constant carrier: zero variance, full duty") {
        const auto f = extract_features(make_trace(std::vector<double>(150, -60.0), 0.15, 20, -90.0));
        CHECK(f.mean_rss_dbm == doctest::Approx(-60.0));
        CHECK(f.amplitude_variance_db2 == doctest::Approx(0.0));
        CHECK(f.duty_cycle == doctest::Approx(1.0));
        CHECK(f.adjacent_diff_db == doctest::Approx(30.0));
    }

    SUBCASE("alternating halves give duty 0.5") {
        std::vector<double> series(200, -60.0);
        for (size_t i = 100; i < 200; ++i) series[i] = -114.0;
        const auto f = extract_features(make_trace(std::move(series), 0.2, 20, -90.0));
        CHECK(f.duty_cycle == doctest::Approx(0.5));
        CHECK(f.mean_rss_dbm == doctest::Approx(-60.0));  // above-floor mean
    }

    SUBCASE("synthetic bursty trace: fluctuating, idle stretches") {
        Rng rng(31);
        const auto f = extract_features(bs_trace(rng));
        CHECK(f.amplitude_variance_db2 > 3.0);
        CHECK(f.duty_cycle < 0.8);
    }

    SUBCASE("window shorter than the minimum observation is rejected") {
        CHECK_THROWS_AS(extract_features(make_trace({-60.0, -60.0}, 0.01, 20, -90.0)),
                        std::invalid_argument);
    }
}

TEST_CASE("classification rules") {
    const DiscoveryConfig cfg;

    SUBCASE("below sensitivity is noise") {
        SignalFeatures f{-120.0, 0.0, 0.0, 0.0};
        CHECK(classify(f, cfg).verdict == SignalClass::Noise);
    }

    SUBCASE("strong steady continuous distinct-neighbor carrier is TV") {
        SignalFeatures f{-60.0, 0.1, 1.0, 20.0};
        const auto c = classify(f, cfg);
        CHECK(c.verdict == SignalClass::Tv);
        CHECK(c.confidence > 0.0);
        CHECK(c.confidence <= 1.0);
    }

    SUBCASE("fluctuating bursty similar-neighbor signal is a BS") {
        SignalFeatures f{-75.0, 6.0, 0.4, 1.0};
        const auto c = classify(f, cfg);
        CHECK(c.verdict == SignalClass::BaseStation);
        CHECK(c.confidence > 0.0);
    }

    SUBCASE("each BS indicator alone is enough") {
        CHECK(classify({-75.0, 6.0, 1.0, 20.0}, cfg).verdict == SignalClass::BaseStation);
        CHECK(classify({-75.0, 0.1, 0.4, 20.0}, cfg).verdict == SignalClass::BaseStation);
        CHECK(classify({-75.0, 0.1, 1.0, 1.0}, cfg).verdict == SignalClass::BaseStation);
    }

    SUBCASE("weak steady carrier falls back to TV with zero confidence") {
        SignalFeatures f{-95.0, 0.1, 1.0, 20.0};
        const auto c = classify(f, cfg);
        CHECK(c.verdict == SignalClass::Tv);
        CHECK(c.confidence == 0.0);
    }
}

TEST_CASE("classifier separates the synthetic families") {
    const DiscoveryConfig cfg;

    SUBCASE("noiseless: 100% over 300 traces per family") {
        Rng rng(57);
        for (int i = 0; i < 300; ++i) {
            CHECK(classify(extract_features(tv_trace(rng)), cfg).verdict == SignalClass::Tv);
            CHECK(classify(extract_features(bs_trace(rng)), cfg).verdict ==
                  SignalClass::BaseStation);
            CHECK(classify(extract_features(noise_trace(rng)), cfg).verdict == SignalClass::Noise);
        }
    }

    SUBCASE("10 dB feature noise: at least 95% over 1000 trials") {
        Rng rng(58);
        int correct = 0, total = 0;
        const double noise_db = 0.5;  // RSS-sample jitter at 10 dB feature SNR
        for (int i = 0; i < 334; ++i) {
            correct += classify(extract_features(tv_trace(rng, noise_db)), cfg).verdict ==
                       SignalClass::Tv;
            correct += classify(extract_features(bs_trace(rng, noise_db)), cfg).verdict ==
                       SignalClass::BaseStation;
            correct += classify(extract_features(noise_trace(rng)), cfg).verdict ==
                       SignalClass::Noise;
            total += 3;
        }
        CHECK(static_cast<double>(correct) / total >= 0.95);
    }
}

TEST_CASE("scan plan construction") {
    const DiscoveryConfig cfg;
    std::vector<int> full_band;
    for (int ch = kFirstTvChannel; ch <= kLastTvChannel; ++ch) full_band.push_back(ch);

    SUBCASE("hint restricts the plan to the union of hinted sets") {
        std::vector<SpectrumMap::ProbePoint> hint(2);
        hint[0].channels = {21};
        hint[1].channels = {21, 22};
        const auto plan = build_scan_plan(hint, full_band, ScanStrategy::Narrow, cfg);
        CHECK(plan.channels == std::vector<int>{21, 22});
    }

    SUBCASE("no hint scans all 38 channels") {
        const auto plan = build_scan_plan(std::nullopt, full_band, ScanStrategy::Narrow, cfg);
        CHECK(plan.channels.size() == 38);
    }

    SUBCASE("wide sensing halves the dwell positions") {
        const auto narrow = build_scan_plan(std::nullopt, full_band, ScanStrategy::Narrow, cfg);
        const auto wide = build_scan_plan(std::nullopt, full_band, ScanStrategy::Wide, cfg);
        CHECK(wide.sense_bandwidth_hz == 2.0 * narrow.sense_bandwidth_hz);
        CHECK(narrow.visits.size() == 2 * wide.visits.size());
    }

    SUBCASE("preferred channels move to the front") {
        const auto plan =
            build_scan_plan(std::nullopt, full_band, ScanStrategy::Narrow, cfg, {40, 17});
        CHECK(plan.channels[0] == 40);
        CHECK(plan.channels[1] == 17);
        CHECK(plan.channels.size() == 38);
    }

    SUBCASE("empty candidates rejected") {
        std::vector<SpectrumMap::ProbePoint> hint(1);
        CHECK_THROWS_AS(build_scan_plan(hint, full_band, ScanStrategy::Narrow, cfg),
                        std::invalid_argument);
    }
}

namespace {

// Sensor fixture: a BS beacons on one channel at a given in-channel
// position; one channel carries a TV station; everything else is noise.
class FixtureSensor : public ChannelSensor {
public:
    int bs_channel = 22;
    double bs_center_hz = 0.0;  // set from channel low + offset
    int tv_channel = 18;
    int sense_count = 0;
    Rng rng{99};

    SignalTrace sense(int channel, double center_hz, double bandwidth_hz, double,
                      double dwell_s) override {
        ++sense_count;
        SignalTrace t;
        t.channel = channel;
        t.window_s = dwell_s;
        const bool bs_hit =
            channel == bs_channel && std::abs(center_hz - bs_center_hz) <= bandwidth_hz / 2.0;
        if (channel == tv_channel) {
            t.rss_series_dbm.assign(200, -60.0);
            t.adjacent_rss_dbm = -95.0;
        } else if (bs_hit) {
            for (int i = 0; i < 200; ++i) {
                const bool burst = (i / 25) % 2 == 0;
                t.rss_series_dbm.push_back(burst ? -70.0 + 2.0 * rng.gaussian() : -114.0);
            }
            t.adjacent_rss_dbm = -72.0;
            t.source_id = "bs2";
        } else {
            t.rss_series_dbm.assign(200, -120.0);
            t.adjacent_rss_dbm = -120.0;
        }
        return t;
    }
};

}  // namespace

TEST_CASE("discover walks the plan and stops at the first BS") {
    DiscoveryConfig cfg;
    std::vector<int> full_band;
    for (int ch = kFirstTvChannel; ch <= kLastTvChannel; ++ch) full_band.push_back(ch);
    const double rx_power_w = 3.8 * 5.4e-3;

    FixtureSensor sensor;
    sensor.bs_center_hz = channel_low_hz(22) + 100e3;  // first dwell position of channel 22

    SUBCASE("hit on the first dwell costs exactly one dwell") {
        std::vector<SpectrumMap::ProbePoint> hint(1);
        hint[0].channels = {22};
        const auto plan = build_scan_plan(hint, full_band, ScanStrategy::Narrow, cfg);
        const auto res = discover(plan, sensor, 0.0, rx_power_w, cfg);
        CHECK(res.found);
        CHECK(res.bs_id == "bs2");
        CHECK(res.channel == 22);
        CHECK(res.elapsed_s == doctest::Approx(plan.dwell_s));
        CHECK(res.energy_j == doctest::Approx(rx_power_w * plan.dwell_s));
        CHECK(res.dwells == 1);
    }

    SUBCASE("hit on the k-th dwell pays k dwells and k-1 retunes") {
        FixtureSensor far_sensor;
        far_sensor.bs_center_hz = channel_low_hz(22) + 900e3;  // 5th narrow position
        far_sensor.tv_channel = -1;
        std::vector<SpectrumMap::ProbePoint> hint(1);
        hint[0].channels = {22};
        const auto plan = build_scan_plan(hint, full_band, ScanStrategy::Narrow, cfg);
        const auto res = discover(plan, far_sensor, 0.0, rx_power_w, cfg);
        CHECK(res.found);
        const int k = 5;
        CHECK(res.dwells == k);
        CHECK(res.elapsed_s == doctest::Approx(k * plan.dwell_s + (k - 1) * cfg.retune_s));
        CHECK(res.energy_j == doctest::Approx(rx_power_w * res.elapsed_s));
    }

}

TEST_CASE("discover exhaustion, TV skip, and hint dominance") {
    DiscoveryConfig cfg;
    std::vector<int> full_band;
    for (int ch = kFirstTvChannel; ch <= kLastTvChannel; ++ch) full_band.push_back(ch);
    const double rx_power_w = 3.8 * 5.4e-3;

    SUBCASE("no BS in the world: none result, full plan cost") {
        FixtureSensor empty;
        empty.bs_channel = -1;
        empty.tv_channel = -1;
        std::vector<SpectrumMap::ProbePoint> hint(1);
        hint[0].channels = {20, 21};
        const auto plan = build_scan_plan(hint, full_band, ScanStrategy::Narrow, cfg);
        const auto res = discover(plan, empty, 0.0, rx_power_w, cfg);
        CHECK(!res.found);
        const auto dwells = static_cast<double>(plan.visits.size());
        CHECK(res.dwells == static_cast<int>(plan.visits.size()));
        CHECK(res.elapsed_s == doctest::Approx(dwells * plan.dwell_s + (dwells - 1) * cfg.retune_s));
        CHECK(res.channels_visited == 2);
    }

    SUBCASE("a TV verdict abandons the remaining positions of that channel") {
        FixtureSensor sensor;
        sensor.bs_channel = -1;
        sensor.tv_channel = 20;
        std::vector<SpectrumMap::ProbePoint> hint(1);
        hint[0].channels = {20};
        const auto plan = build_scan_plan(hint, full_band, ScanStrategy::Narrow, cfg);
        const auto res = discover(plan, sensor, 0.0, rx_power_w, cfg);
        CHECK(!res.found);
        CHECK(res.dwells == 1);  // one dwell, then the channel is written off
    }

    SUBCASE("hint dominance: channels visited never exceed the hinted set") {
        FixtureSensor sensor;
        sensor.bs_center_hz = channel_low_hz(22) + 100e3;
        std::vector<SpectrumMap::ProbePoint> hint(2);
        hint[0].channels = {21, 22};
        hint[1].channels = {22, 23};
        const auto plan = build_scan_plan(hint, full_band, ScanStrategy::Narrow, cfg);
        const auto res = discover(plan, sensor, 0.0, rx_power_w, cfg);
        CHECK(res.found);
        CHECK(res.channels_visited <= 3);
        CHECK(static_cast<size_t>(res.channels_visited) <= full_band.size());
    }

    SUBCASE("energy grows with dwells at fixed dwell length") {
        FixtureSensor empty;
        empty.bs_channel = -1;
        empty.tv_channel = -1;
        std::vector<SpectrumMap::ProbePoint> small(1), large(1);
        small[0].channels = {20};
        large[0].channels = {20, 21, 24};
        const auto res_small = discover(build_scan_plan(small, full_band, ScanStrategy::Narrow, cfg),
                                        empty, 0.0, rx_power_w, cfg);
        const auto res_large = discover(build_scan_plan(large, full_band, ScanStrategy::Narrow, cfg),
                                        empty, 0.0, rx_power_w, cfg);
        CHECK(res_large.dwells > res_small.dwells);
        CHECK(res_large.energy_j > res_small.energy_j);
    }

    SUBCASE("wide strategy draws more RX power") {
        FixtureSensor empty;
        empty.bs_channel = -1;
        empty.tv_channel = -1;
        std::vector<SpectrumMap::ProbePoint> hint(1);
        hint[0].channels = {20};
        const auto narrow = discover(build_scan_plan(hint, full_band, ScanStrategy::Narrow, cfg),
                                     empty, 0.0, rx_power_w, cfg);
        const auto wide = discover(build_scan_plan(hint, full_band, ScanStrategy::Wide, cfg), empty,
                                   0.0, rx_power_w, cfg);
        // Half the dwells at 1.5x the draw: wide costs 75% of narrow here.
        CHECK(wide.energy_j < narrow.energy_j);
        CHECK(wide.energy_j / wide.elapsed_s ==
              doctest::Approx(cfg.wide_rx_power_factor * rx_power_w));
    }
}

TEST_CASE("discovery backoff doubles up to the cap") {
    CHECK(discovery_backoff_s(1) == doctest::Approx(1.0));
    CHECK(discovery_backoff_s(2) == doctest::Approx(2.0));
    CHECK(discovery_backoff_s(5) == doctest::Approx(16.0));
    CHECK(discovery_backoff_s(12) == doctest::Approx(60.0));
}
