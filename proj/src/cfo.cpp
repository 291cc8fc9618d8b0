#include "wssim/cfo.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace wssim {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

CfoEstimate make_cfo_estimate(double delta_f_hz, double reference_freq_hz, double estimated_at_s) {
    CfoEstimate est;
    est.delta_f_hz = delta_f_hz;
    est.reference_freq_hz = reference_freq_hz;
    est.ppm = reference_freq_hz != 0.0 ? 1e6 * delta_f_hz / reference_freq_hz : 0.0;
    est.estimated_at_s = estimated_at_s;
    return est;
}

SampleBuffer apply_cfo(const SampleBuffer& buf, double delta_f_hz) {
    if (std::abs(delta_f_hz) >= buf.sample_rate_hz / 2.0)
        throw std::invalid_argument("apply_cfo: offset beyond Nyquist");
    SampleBuffer out = buf;
    for (size_t n = 0; n < out.samples.size(); ++n) {
        const double phase = kTwoPi * delta_f_hz * out.sample_time_s(n);
        out.samples[n] *= ComplexSample(std::cos(phase), std::sin(phase));
    }
    return out;
}

CfoEstimate estimate_cfo(const SampleBuffer& preamble_rx, const Preamble& preamble,
                         double symbol_rate_hz, const CfoEstimatorOptions& opts) {
    const double sps_d = preamble_rx.sample_rate_hz / symbol_rate_hz;
    const auto sps = static_cast<size_t>(std::round(sps_d));
    if (sps < 1 || std::abs(sps_d - static_cast<double>(sps)) > 1e-6 * sps_d)
        throw std::invalid_argument("estimate_cfo: sample rate must be a multiple of symbol rate");
    const size_t need = Preamble::kLength * sps;
    if (preamble_rx.samples.size() < need)
        throw std::invalid_argument("estimate_cfo: buffer shorter than the preamble");
    if (mean_power_mw(preamble_rx) < opts.min_power_mw)
        throw std::runtime_error("estimate_cfo: no signal (power below detection threshold)");

    // Strip the known training modulation: z[n] = y[n] * conj(x_ref[n]).
    // What remains is the bare offset rotation, weighted by |x|^2, so OOK
    // spaces drop out of the sums on their own.
    Subcarrier ref_sc{symbol_rate_hz * 10.0, symbol_rate_hz};  // offset-zero reference
    SampleBuffer ref = modulate(preamble_bits(preamble), opts.scheme, ref_sc,
                                preamble_rx.sample_rate_hz, ref_sc.center_freq_hz, 1.0,
                                preamble_rx.start_time_s);
    std::vector<ComplexSample> z(need);
    for (size_t n = 0; n < need; ++n) z[n] = preamble_rx.samples[n] * std::conj(ref.samples[n]);

    const double dt = 1.0 / preamble_rx.sample_rate_hz;
    const size_t half = Preamble::kSplit * sps;

    // Coarse: one-symbol lag across the first preamble half.
    const size_t lag_short = sps;
    ComplexSample acc(0.0, 0.0);
    for (size_t n = 0; n + lag_short < half; ++n) acc += z[n + lag_short] * std::conj(z[n]);
    if (std::abs(acc) == 0.0)
        throw std::runtime_error("estimate_cfo: no signal (empty coarse correlation)");
    const double coarse_hz = std::arg(acc) / (kTwoPi * static_cast<double>(lag_short) * dt);

    // Fine: sixteen-symbol lag spanning the halves, after removing the
    // coarse estimate so the long lag cannot wrap.
    const size_t lag_long = Preamble::kSplit * sps;
    const double lag_long_s = static_cast<double>(lag_long) * dt;
    ComplexSample acc_fine(0.0, 0.0);
    for (size_t n = 0; n + lag_long < need; ++n) {
        ComplexSample prod = z[n + lag_long] * std::conj(z[n]);
        const double unwind = -kTwoPi * coarse_hz * lag_long_s;
        prod *= ComplexSample(std::cos(unwind), std::sin(unwind));
        acc_fine += prod;
    }
    const double fine_hz =
        std::abs(acc_fine) > 0.0 ? std::arg(acc_fine) / (kTwoPi * lag_long_s) : 0.0;

    CfoEstimate est = make_cfo_estimate(coarse_hz + fine_hz, 0.0, preamble_rx.start_time_s);
    return est;
}

double ppm_to_offset(double ppm, double freq_hz) { return freq_hz * ppm / 1e6; }

double ppm_from_offset(double delta_f_hz, double freq_hz) {
    if (freq_hz == 0.0) throw std::invalid_argument("ppm_from_offset: zero reference frequency");
    return 1e6 * delta_f_hz / freq_hz;
}

double doppler_offset(const DopplerParams& p) {
    if (p.speed_mps < 0.0) throw std::invalid_argument("doppler_offset: speed must be >= 0");
    if (p.speed_mps >= kLightSpeedMps)
        throw std::invalid_argument("doppler_offset: speed must be below light speed");
    return p.speed_mps / kLightSpeedMps * p.carrier_freq_hz;
}

SampleBuffer compensate(const SampleBuffer& buf, const CfoEstimate& est) {
    return apply_cfo(buf, -est.delta_f_hz);
}

bool reestimation_due(double last_s, double now_s, double period_s) {
    if (now_s < last_s) throw std::invalid_argument("reestimation_due: now precedes last");
    if (period_s <= 0.0) throw std::invalid_argument("reestimation_due: period must be > 0");
    return now_s - last_s >= period_s;
}

}  // namespace wssim
