#include <doctest.h>

#include <cmath>
#include <numbers>

#include "wssim/cfo.hpp"
#include "wssim/rng.hpp"

using namespace wssim;

namespace {

SampleBuffer test_tone(size_t n, double rate, double start = 0.0) {
    SampleBuffer buf;
    buf.sample_rate_hz = rate;
    buf.start_time_s = start;
    buf.samples.assign(n, ComplexSample(1.0, 0.0));
    return buf;
}

SampleBuffer rx_preamble(double delta_f_hz, double symbol_rate, Modulation scheme, double snr_db,
                         Rng* rng, double start_time = 0.0) {
    const Preamble p = default_preamble();
    Subcarrier sc{500e6, symbol_rate};
    const double rate = 8.0 * symbol_rate;
    auto buf = modulate(preamble_bits(p), scheme, sc, rate, sc.center_freq_hz, 1.0, start_time);
    buf = apply_cfo(buf, delta_f_hz);
    if (rng) buf = add_awgn(buf, snr_db, 8, *rng);
    return buf;
}

}  // namespace

TEST_CASE("apply_cfo identity, inversion and phase slope") {
    auto x = test_tone(256, 1e6);

    SUBCASE("zero offset is the identity") {
        const auto y = apply_cfo(x, 0.0);
        for (size_t i = 0; i < x.samples.size(); ++i) CHECK(y.samples[i] == x.samples[i]);
    }

    SUBCASE("opposite rotations cancel") {
        const auto y = apply_cfo(apply_cfo(x, 1.5e3), -1.5e3);
        for (size_t i = 0; i < x.samples.size(); ++i)
            CHECK(std::abs(y.samples[i] - x.samples[i]) < 1e-12);
    }

    SUBCASE("per-sample phase advance matches 2 pi df / rate") {
        const auto y = apply_cfo(x, 1e3);
        const double expect = 2.0 * std::numbers::pi * 1e3 / 1e6;
        for (size_t i = 1; i < y.samples.size(); ++i) {
            const double step = std::arg(y.samples[i] * std::conj(y.samples[i - 1]));
            CHECK(step == doctest::Approx(expect).epsilon(1e-12));
        }
    }

    SUBCASE("power preserved to 1e-12 relative") {
        const auto y = apply_cfo(x, 3.7e3);
        CHECK(total_energy(y) == doctest::Approx(total_energy(x)).epsilon(1e-12));
    }

    SUBCASE("rotation honors absolute start time") {
        auto late = test_tone(16, 1e6, 0.25);
        const auto y = apply_cfo(late, 1e3);
        const double phase0 = 2.0 * std::numbers::pi * 1e3 * 0.25;
        CHECK(std::arg(y.samples[0]) ==
              doctest::Approx(std::remainder(phase0, 2.0 * std::numbers::pi)).epsilon(1e-9));
    }

    SUBCASE("offset beyond Nyquist rejected") {
        CHECK_THROWS_AS(apply_cfo(x, 0.6e6), std::invalid_argument);
    }
}

TEST_CASE("estimator is exact on clean input") {
    for (auto scheme : {Modulation::Ook, Modulation::Bpsk}) {
        const auto zero = rx_preamble(0.0, 200e3, scheme, 0.0, nullptr);
        const auto est0 = estimate_cfo(zero, default_preamble(), 200e3, {scheme});
        CHECK(std::abs(est0.delta_f_hz) < 1e-3);

        const auto shifted = rx_preamble(1.5e3, 200e3, scheme, 0.0, nullptr);
        const auto est = estimate_cfo(shifted, default_preamble(), 200e3, {scheme});
        CHECK(std::abs(est.delta_f_hz - 1.5e3) < 0.1);
    }
}

TEST_CASE("estimator consistency across the coarse range, noiseless") {
    // Anywhere within the one-symbol-lag unambiguous range the error stays
    // under 0.1 Hz with no noise.
    for (double f = -95e3; f <= 95e3; f += 13e3) {
        const auto rx = rx_preamble(f, 200e3, Modulation::Ook, 0.0, nullptr);
        const auto est = estimate_cfo(rx, default_preamble(), 200e3);
        CHECK(std::abs(est.delta_f_hz - f) < 0.1);
    }
}

TEST_CASE("estimator holds across the allowed symbol rates") {
    for (double rs : {100e3, 400e3, 600e3}) {
        const auto rx = rx_preamble(0.002 * rs, rs, Modulation::Ook, 0.0, nullptr);
        const auto est = estimate_cfo(rx, default_preamble(), rs);
        CHECK(std::abs(est.delta_f_hz - 0.002 * rs) < 0.1);
    }
}

TEST_CASE("estimator works from a nonzero start time") {
    const auto rx = rx_preamble(2.5e3, 200e3, Modulation::Ook, 0.0, nullptr, 1.75);
    const auto est = estimate_cfo(rx, default_preamble(), 200e3);
    CHECK(std::abs(est.delta_f_hz - 2.5e3) < 0.1);
}

TEST_CASE("estimator RMS error under 20 Hz at 30 dB") {
    Rng rng(101);
    double sq = 0.0;
    int n = 0;
    for (double f : {-4e3, -1e3, 0.0, 2.5e3, 5e3}) {
        for (int trial = 0; trial < 60; ++trial) {
            const auto rx = rx_preamble(f, 200e3, Modulation::Ook, 30.0, &rng);
            const auto est = estimate_cfo(rx, default_preamble(), 200e3);
            sq += (est.delta_f_hz - f) * (est.delta_f_hz - f);
            ++n;
        }
    }
    CHECK(std::sqrt(sq / n) < 20.0);
}

TEST_CASE("estimator rejects short buffers and dead air") {
    auto rx = rx_preamble(0.0, 200e3, Modulation::Ook, 0.0, nullptr);
    rx.samples.resize(rx.samples.size() / 2);
    CHECK_THROWS_AS(estimate_cfo(rx, default_preamble(), 200e3), std::invalid_argument);

    SampleBuffer silence;
    silence.sample_rate_hz = 1.6e6;
    silence.samples.assign(32 * 8, ComplexSample(0.0, 0.0));
    CHECK_THROWS_AS(estimate_cfo(silence, default_preamble(), 200e3), std::runtime_error);
}

TEST_CASE("oscillator and Doppler offsets add up in one estimate") {
    // The estimator sees the total offset; nodes never need their speed.
    const double osc = 1.2e3;
    const double dop = doppler_offset({17.88, 500e6});
    auto rx = rx_preamble(0.0, 200e3, Modulation::Ook, 0.0, nullptr);
    rx = apply_cfo(apply_cfo(rx, osc), dop);
    const auto est = estimate_cfo(rx, default_preamble(), 200e3);
    CHECK(std::abs(est.delta_f_hz - (osc + dop)) < 0.1);
}

TEST_CASE("ppm scaling") {
    CHECK(ppm_to_offset(2.0, 500e6) == doctest::Approx(1000.0));
    CHECK(ppm_to_offset(0.0, 777e6) == 0.0);
    // Offset measured at 500 MHz rescaled to 600 MHz.
    const double ppm = ppm_from_offset(1e3, 500e6);
    CHECK(ppm_to_offset(ppm, 600e6) == doctest::Approx(1200.0));
    // Round trip is exact up to float rounding.
    CHECK(ppm_to_offset(ppm_from_offset(337.5, 512e6), 512e6) == doctest::Approx(337.5).epsilon(1e-15));
    CHECK_THROWS_AS(ppm_from_offset(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("cfo estimate record keeps ppm consistent") {
    const auto est = make_cfo_estimate(1e3, 500e6, 12.5);
    CHECK(est.ppm == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(est.estimated_at_s == 12.5);
}

TEST_CASE("doppler offset values and monotonicity") {
    CHECK(doppler_offset({0.0, 500e6}) == 0.0);
    CHECK(doppler_offset({17.88, 500e6}) == doctest::Approx(29.8).epsilon(0.004));
    CHECK(doppler_offset({1.4, 500e6}) == doctest::Approx(2.33).epsilon(0.005));
    CHECK(doppler_offset({20.0, 500e6}) > doppler_offset({10.0, 500e6}));
    CHECK(doppler_offset({10.0, 600e6}) > doppler_offset({10.0, 500e6}));
    CHECK_THROWS_AS(doppler_offset({-1.0, 500e6}), std::invalid_argument);
    CHECK_THROWS_AS(doppler_offset({3e8, 500e6}), std::invalid_argument);
}

TEST_CASE("compensate inverts apply_cfo") {
    auto x = test_tone(128, 1.6e6);
    const auto est = make_cfo_estimate(2.2e3, 500e6, 0.0);
    const auto y = compensate(apply_cfo(x, 2.2e3), est);
    for (size_t i = 0; i < x.samples.size(); ++i)
        CHECK(std::abs(y.samples[i] - x.samples[i]) < 1e-12);

    const auto z = compensate(x, make_cfo_estimate(0.0, 500e6, 0.0));
    for (size_t i = 0; i < x.samples.size(); ++i) CHECK(z.samples[i] == x.samples[i]);
}

TEST_CASE("estimate then compensate leaves a small residual at 30 dB") {
    Rng rng(77);
    double worst = 0.0;
    for (int trial = 0; trial < 30; ++trial) {
        const double f = rng.uniform(-5e3, 5e3);
        const auto rx = rx_preamble(f, 200e3, Modulation::Ook, 30.0, &rng);
        const auto est = estimate_cfo(rx, default_preamble(), 200e3);
        worst = std::max(worst, std::abs(est.delta_f_hz - f));
    }
    CHECK(worst < 60.0);  // individual residuals; RMS is checked above
}

TEST_CASE("reestimation schedule") {
    CHECK(!reestimation_due(0.0, 0.5, 1.0));
    CHECK(reestimation_due(0.0, 1.0, 1.0));
    CHECK(reestimation_due(2.0, 3.5, 1.0));
    CHECK_THROWS_AS(reestimation_due(1.0, 0.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(reestimation_due(0.0, 1.0, 0.0), std::invalid_argument);
}
