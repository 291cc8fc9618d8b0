#include "wssim/baseband.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "wssim/dsp.hpp"
#include "wssim/rng.hpp"

namespace wssim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Samples per symbol; throws unless the rate is an integer multiple of the
// symbol rate (rectangular symbols need whole samples).
size_t samples_per_symbol(double sample_rate_hz, double symbol_rate_hz) {
    const double sps = sample_rate_hz / symbol_rate_hz;
    const double rounded = std::round(sps);
    if (rounded < 1.0 || std::abs(sps - rounded) > 1e-6 * sps)
        throw std::invalid_argument("sample rate must be an integer multiple of the symbol rate");
    return static_cast<size_t>(rounded);
}

void apply_shift(SampleBuffer& buf, double offset_hz) {
    if (offset_hz == 0.0) return;
    for (size_t n = 0; n < buf.samples.size(); ++n) {
        const double phase = kTwoPi * offset_hz * buf.sample_time_s(n);
        buf.samples[n] *= ComplexSample(std::cos(phase), std::sin(phase));
    }
}

}  // namespace

bool is_allowed_bandwidth(double bandwidth_hz) {
    for (double b : kAllowedSubcarrierBandwidthsHz) {
        if (std::abs(bandwidth_hz - b) < 1e-3) return true;
    }
    return false;
}

void validate_subcarrier(const Subcarrier& sc) {
    if (sc.bandwidth_hz <= 0.0) throw std::invalid_argument("subcarrier: bandwidth must be > 0");
    if (sc.center_freq_hz <= sc.bandwidth_hz / 2.0)
        throw std::invalid_argument("subcarrier: center must exceed half the bandwidth");
    if (!is_allowed_bandwidth(sc.bandwidth_hz))
        throw std::invalid_argument(
            "subcarrier: bandwidth must be one of 100 kHz, 200 kHz, 400 kHz, 600 kHz");
}

Preamble preamble_from_word(uint32_t word) {
    Preamble p;
    for (size_t i = 0; i < Preamble::kLength; ++i)
        p.bits[i] = static_cast<uint8_t>((word >> (31 - i)) & 1u);
    return p;
}

uint32_t preamble_word(const Preamble& p) {
    uint32_t w = 0;
    for (size_t i = 0; i < Preamble::kLength; ++i)
        w |= static_cast<uint32_t>(p.bits[i] & 1u) << (31 - i);
    return w;
}

Preamble default_preamble() { return preamble_from_word(0xD970D970u); }

std::vector<uint8_t> preamble_bits(const Preamble& p) {
    return std::vector<uint8_t>(p.bits.begin(), p.bits.end());
}

SampleBuffer modulate(const std::vector<uint8_t>& bits, Modulation scheme, const Subcarrier& sc,
                      double sample_rate_hz, std::optional<double> base_freq_hz, double amplitude,
                      double start_time_s) {
    if (bits.empty()) throw std::invalid_argument("modulate: empty bit sequence");
    if (sc.bandwidth_hz <= 0.0) throw std::invalid_argument("modulate: bandwidth must be > 0");
    const double offset_hz = sc.center_freq_hz - base_freq_hz.value_or(sc.center_freq_hz);
    if (sample_rate_hz < 2.0 * (std::abs(offset_hz) + sc.bandwidth_hz / 2.0))
        throw std::invalid_argument("modulate: sample rate too low for the requested offset");

    const size_t sps = samples_per_symbol(sample_rate_hz, sc.bandwidth_hz);
    SampleBuffer buf;
    buf.sample_rate_hz = sample_rate_hz;
    buf.start_time_s = start_time_s;
    buf.samples.reserve(bits.size() * sps);
    for (uint8_t bit : bits) {
        double level = 0.0;
        switch (scheme) {
            case Modulation::Bpsk:
                level = bit ? amplitude : -amplitude;
                break;
            case Modulation::Ook:
                level = bit ? amplitude : 0.0;
                break;
        }
        buf.samples.insert(buf.samples.end(), sps, ComplexSample(level, 0.0));
    }
    apply_shift(buf, offset_hz);
    return buf;
}

std::vector<uint8_t> demodulate(const SampleBuffer& buf, Modulation scheme, const Subcarrier& sc,
                                std::optional<double> base_freq_hz, bool track_phase) {
    const size_t sps = samples_per_symbol(buf.sample_rate_hz, sc.bandwidth_hz);
    if (buf.samples.size() % sps != 0)
        throw std::invalid_argument("demodulate: buffer does not hold a whole number of symbols");

    SampleBuffer work = buf;
    apply_shift(work, -(sc.center_freq_hz - base_freq_hz.value_or(sc.center_freq_hz)));

    const size_t n_sym = work.samples.size() / sps;
    std::vector<ComplexSample> sym(n_sym);
    for (size_t s = 0; s < n_sym; ++s) {
        ComplexSample acc(0.0, 0.0);
        for (size_t i = 0; i < sps; ++i) acc += work.samples[s * sps + i];
        sym[s] = acc;
    }

    std::vector<uint8_t> bits(n_sym);
    if (scheme == Modulation::Bpsk) {
        if (!track_phase) {
            for (size_t s = 0; s < n_sym; ++s) bits[s] = sym[s].real() > 0.0 ? 1 : 0;
            return bits;
        }
        // First-order decision-directed loop; the per-symbol drift of any
        // residual offset inside the estimator's tolerance is tiny against
        // the loop gain.
        double phase = 0.0;
        const double gain = 0.25;
        for (size_t s = 0; s < n_sym; ++s) {
            const ComplexSample z = sym[s] * ComplexSample(std::cos(-phase), std::sin(-phase));
            const bool one = z.real() > 0.0;
            bits[s] = one ? 1 : 0;
            phase += gain * std::arg(one ? z : -z);
        }
        return bits;
    }

    // OOK: threshold halfway between the two envelope clusters. An
    // all-silent buffer has no upper cluster, so require some separation
    // before calling anything a mark.
    std::vector<double> env(n_sym);
    for (size_t s = 0; s < n_sym; ++s) env[s] = std::abs(sym[s]);
    const double peak = *std::max_element(env.begin(), env.end());
    double lo_mean = 0.0, hi_mean = peak;
    for (int iter = 0; iter < 8; ++iter) {  // 1-D two-means on the envelopes
        const double thr = (lo_mean + hi_mean) / 2.0;
        double lo_sum = 0.0, hi_sum = 0.0;
        size_t lo_n = 0, hi_n = 0;
        for (double e : env) {
            if (e > thr) {
                hi_sum += e;
                ++hi_n;
            } else {
                lo_sum += e;
                ++lo_n;
            }
        }
        lo_mean = lo_n ? lo_sum / static_cast<double>(lo_n) : 0.0;
        hi_mean = hi_n ? hi_sum / static_cast<double>(hi_n) : peak;
    }
    const double threshold = (lo_mean + hi_mean) / 2.0;
    const bool separated = hi_mean > 2.0 * lo_mean + 1e-12;
    for (size_t s = 0; s < n_sym; ++s) bits[s] = (separated && env[s] > threshold) ? 1 : 0;
    return bits;
}

SampleBuffer add_awgn(const SampleBuffer& buf, double es_n0_db, size_t samples_per_symbol,
                      Rng& rng) {
    const double mean_p = mean_power_mw(buf);
    const double gamma = db_to_linear(es_n0_db);
    // Es = mean sample power * sps; noise variance per complex sample makes
    // the matched-filter output hit the requested Es/N0.
    const double sigma2 = mean_p * static_cast<double>(samples_per_symbol) / gamma;
    const double sigma = std::sqrt(sigma2 / 2.0);
    SampleBuffer out = buf;
    for (auto& s : out.samples) s += ComplexSample(rng.gaussian(0.0, sigma), rng.gaussian(0.0, sigma));
    return out;
}

SampleBuffer synthesize_composite(const std::vector<std::pair<Subcarrier, SampleBuffer>>& streams,
                                  double base_freq_hz) {
    SampleBuffer out;
    if (streams.empty()) return out;

    const double rate = streams.front().second.sample_rate_hz;
    for (const auto& [sc, buf] : streams) {
        if (buf.sample_rate_hz != rate)
            throw std::invalid_argument("synthesize_composite: sample rates differ");
    }
    // Pairwise orthogonality check through the closed form, over a window
    // of two symbols of the narrowest stream.
    double min_bw = streams.front().first.bandwidth_hz;
    for (const auto& [sc, buf] : streams) min_bw = std::min(min_bw, sc.bandwidth_hz);
    const double t_prime = 2.0 / min_bw;
    for (size_t i = 0; i < streams.size(); ++i) {
        for (size_t j = i + 1; j < streams.size(); ++j) {
            const double v = orthogonality(streams[i].first.center_freq_hz,
                                           streams[j].first.center_freq_hz, t_prime);
            if (std::abs(v) > 1e-9 * t_prime)
                throw std::invalid_argument("synthesize_composite: subcarriers not orthogonal");
        }
    }

    size_t max_len = 0;
    for (const auto& [sc, buf] : streams) max_len = std::max(max_len, buf.samples.size());
    out.sample_rate_hz = rate;
    out.start_time_s = streams.front().second.start_time_s;
    out.samples.assign(max_len, ComplexSample(0.0, 0.0));
    for (const auto& [sc, buf] : streams) {
        SampleBuffer shifted = buf;
        apply_shift(shifted, sc.center_freq_hz - base_freq_hz);
        for (size_t n = 0; n < shifted.samples.size(); ++n) out.samples[n] += shifted.samples[n];
    }
    return out;
}

SampleBuffer extract_subcarrier(const SampleBuffer& composite, const Subcarrier& sc,
                                double base_freq_hz, size_t target_sps) {
    const double offset_hz = sc.center_freq_hz - base_freq_hz;
    if (std::abs(offset_hz) + sc.bandwidth_hz / 2.0 > composite.sample_rate_hz / 2.0)
        throw std::invalid_argument("extract_subcarrier: subcarrier outside the composite band");

    SampleBuffer shifted = composite;
    apply_shift(shifted, -offset_hz);

    const double cutoff = (sc.bandwidth_hz / 2.0) / composite.sample_rate_hz;
    const double transition = (sc.bandwidth_hz / 2.0) / composite.sample_rate_hz;
    const auto taps = dsp::lowpass_taps(std::min(0.49, cutoff + transition / 2.0),
                                        dsp::lowpass_length(transition));
    auto filtered = dsp::convolve_valid(shifted.samples, taps);
    if (filtered.empty())
        throw std::invalid_argument("extract_subcarrier: buffer shorter than the extraction filter");

    auto decim = static_cast<size_t>(
        std::floor(composite.sample_rate_hz / (static_cast<double>(target_sps) * sc.bandwidth_hz)));
    if (decim < 1) decim = 1;

    SampleBuffer out;
    out.sample_rate_hz = composite.sample_rate_hz / static_cast<double>(decim);
    // Valid-region convolution starts (taps-1)/2 samples past the group
    // delay midpoint; keep sample times aligned with the input.
    out.start_time_s =
        composite.start_time_s + static_cast<double>(taps.size() - 1) / 2.0 / composite.sample_rate_hz;
    out.samples.reserve(filtered.size() / decim + 1);
    for (size_t n = 0; n < filtered.size(); n += decim) out.samples.push_back(filtered[n]);
    return out;
}

double orthogonality(double f_i_hz, double f_j_hz, double t_prime_s) {
    if (t_prime_s <= 0.0) throw std::invalid_argument("orthogonality: T' must be > 0");
    const double diff = f_i_hz - f_j_hz;
    const double sum = f_i_hz + f_j_hz;
    // sin(2 pi f T) / (4 pi f), with the f -> 0 limit T/2.
    const auto half_term = [t_prime_s](double f) {
        if (f == 0.0) return t_prime_s / 2.0;
        return std::sin(kTwoPi * f * t_prime_s) / (2.0 * kTwoPi * f);
    };
    return half_term(diff) + half_term(sum);
}

int count_orthogonal_subcarriers(double bs_bandwidth_hz, double sc_bandwidth_hz,
                                 double overlap_fraction) {
    if (sc_bandwidth_hz <= 0.0 || bs_bandwidth_hz < sc_bandwidth_hz)
        throw std::invalid_argument("count_orthogonal_subcarriers: need bs_bw >= sc_bw > 0");
    if (overlap_fraction < 0.0 || overlap_fraction >= 1.0)
        throw std::invalid_argument("count_orthogonal_subcarriers: overlap must be in [0, 1)");
    const double step = sc_bandwidth_hz * (1.0 - overlap_fraction);
    // Nudge past floating-point dust so exact fits count fully.
    return static_cast<int>(std::floor((bs_bandwidth_hz - sc_bandwidth_hz) / step + 1e-9)) + 1;
}

}  // namespace wssim
