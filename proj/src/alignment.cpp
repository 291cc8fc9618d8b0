#include "wssim/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wssim/dsp.hpp"

namespace wssim {

ChannelState time_domain_sense(const SampleBuffer& buf, size_t preamble_len_samples,
                               double threshold_dbm) {
    const size_t window = std::max<size_t>(1, preamble_len_samples / 2);
    if (buf.samples.size() < window)
        throw std::invalid_argument("time_domain_sense: buffer shorter than the sensing window");
    std::vector<double> power(buf.samples.size());
    for (size_t i = 0; i < buf.samples.size(); ++i) power[i] = std::norm(buf.samples[i]);
    const auto avg = dsp::moving_average(power, window);
    const double threshold_mw = dbm_to_mw(threshold_dbm);
    for (double v : avg) {
        if (v > threshold_mw) return ChannelState::Busy;
    }
    return ChannelState::Idle;
}

PsdVector compute_psd(const SampleBuffer& buf, size_t m, PsdWindow window) {
    if (!dsp::is_power_of_two(m)) throw std::invalid_argument("compute_psd: M must be a power of two");
    if (buf.samples.size() < m)
        throw std::invalid_argument("compute_psd: fewer samples than the FFT size");

    std::vector<std::complex<double>> x(buf.samples.end() - static_cast<ptrdiff_t>(m),
                                        buf.samples.end());
    if (window == PsdWindow::Hann) {
        for (size_t n = 0; n < m; ++n) {
            const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                                  static_cast<double>(m - 1));
            x[n] *= w;
        }
    }
    dsp::fft(x);

    PsdVector psd;
    psd.bin_width_hz = buf.sample_rate_hz / static_cast<double>(m);
    psd.bins.resize(m);
    for (size_t k = 0; k < m; ++k) {
        const size_t src = (k + m / 2) % m;  // order bins low to high frequency
        psd.bins[k] = std::norm(x[src]) / static_cast<double>(m);
        psd.total_power += psd.bins[k];
    }
    return psd;
}

PsdVector average_psd(const SampleBuffer& buf, size_t m, size_t segments, PsdWindow window) {
    if (segments == 0) throw std::invalid_argument("average_psd: need at least one segment");
    const size_t usable = buf.samples.size() / m;
    const size_t count = std::min(segments, usable);
    if (count == 0) throw std::invalid_argument("average_psd: fewer samples than the FFT size");

    PsdVector acc;
    for (size_t s = 0; s < count; ++s) {
        SampleBuffer seg;
        seg.sample_rate_hz = buf.sample_rate_hz;
        const size_t end = buf.samples.size() - s * m;
        seg.samples.assign(buf.samples.begin() + static_cast<ptrdiff_t>(end - m),
                           buf.samples.begin() + static_cast<ptrdiff_t>(end));
        PsdVector p = compute_psd(seg, m, window);
        if (acc.bins.empty()) {
            acc = std::move(p);
        } else {
            for (size_t k = 0; k < m; ++k) acc.bins[k] += p.bins[k];
        }
    }
    for (auto& b : acc.bins) b /= static_cast<double>(count);
    acc.total_power = 0.0;
    for (double b : acc.bins) acc.total_power += b;
    return acc;
}

namespace {

// Fraction of bin k covered by the band [lo, hi]; gives the template a
// natural one-bin rolloff at each edge.
double bin_coverage(double bin_lo, double bin_hi, double lo, double hi) {
    const double overlap = std::min(bin_hi, hi) - std::max(bin_lo, lo);
    if (overlap <= 0.0) return 0.0;
    return overlap / (bin_hi - bin_lo);
}

}  // namespace

OverlapPattern match_overlap_pattern(const PsdVector& psd, const std::vector<double>& candidates,
                                     const AlignmentConfig& cfg) {
    if (psd.bins.empty()) throw std::invalid_argument("match_overlap_pattern: empty PSD");
    const auto nbins = psd.bins.size();
    const double span = psd.bin_width_hz * static_cast<double>(nbins);

    double psd_norm = 0.0;
    for (double b : psd.bins) psd_norm += b * b;
    psd_norm = std::sqrt(psd_norm);

    const double min_power_mw = dbm_to_mw(cfg.min_pattern_power_dbm);
    OverlapPattern best;
    bool any = false;

    for (double bw : candidates) {
        if (bw > span + 1e-6) continue;
        const double max_off = (span - bw) / 2.0;
        const auto steps = static_cast<long>(std::floor(max_off / cfg.offset_lattice_hz + 1e-9));
        for (long s = -steps; s <= steps; ++s) {
            const double off = static_cast<double>(s) * cfg.offset_lattice_hz;
            const double lo = off - bw / 2.0;
            const double hi = off + bw / 2.0;

            double dot = 0.0, tpl_norm_sq = 0.0, in_band = 0.0;
            for (size_t k = 0; k < nbins; ++k) {
                const double bin_lo =
                    (static_cast<double>(k) - static_cast<double>(nbins) / 2.0) * psd.bin_width_hz;
                const double t = bin_coverage(bin_lo, bin_lo + psd.bin_width_hz, lo, hi);
                if (t <= 0.0) continue;
                dot += psd.bins[k] * t;
                tpl_norm_sq += t * t;
                in_band += psd.bins[k] * t;
            }
            if (tpl_norm_sq == 0.0 || psd_norm == 0.0) continue;
            // Mean in-template power per input sample; gates out matches
            // made of nothing but noise-floor bins.
            if (in_band / static_cast<double>(nbins) < min_power_mw) continue;

            const double score = dot / (psd_norm * std::sqrt(tpl_norm_sq));
            if (!any || score > best.match_score) {
                best.candidate_bandwidth_hz = bw;
                best.center_offset_hz = off;
                best.match_score = score;
                any = true;
            }
        }
    }
    if (!any || best.match_score < cfg.min_match_score)
        throw NoPatternError("match_overlap_pattern: no overlap pattern above the floor");
    return best;
}

AlignmentResult align(BandCapture& capture, double initial_center_hz, double start_s,
                      double rx_power_w, const AlignmentConfig& cfg) {
    AlignmentResult res;
    double center = initial_center_hz;
    const double rate = cfg.sense_bandwidth_hz;
    const size_t chunk = std::max(cfg.psd_size * cfg.psd_averages,
                                  cfg.nominal_preamble_samples * 2);
    const double chunk_s = static_cast<double>(chunk) / rate;
    const std::vector<double> candidates(kAlignmentCandidateBandwidthsHz.begin(),
                                         kAlignmentCandidateBandwidthsHz.end());

    while (res.elapsed_s + chunk_s <= cfg.timeout_s) {
        SampleBuffer buf = capture.capture(center, rate, start_s + res.elapsed_s, chunk);
        res.elapsed_s += chunk_s;
        ++res.sense_calls;

        if (time_domain_sense(buf, cfg.nominal_preamble_samples, cfg.busy_threshold_dbm) ==
            ChannelState::Idle)
            continue;
        ++res.busy_verdicts;

        // Frequency-domain step, reached only after a busy verdict.
        ++res.psd_calls;
        const PsdVector psd = average_psd(buf, cfg.psd_size, cfg.psd_averages, cfg.window);
        OverlapPattern pattern;
        try {
            pattern = match_overlap_pattern(psd, candidates, cfg);
        } catch (const NoPatternError&) {
            continue;  // burst ended mid-capture; keep listening
        }

        // A pattern hugging the window edge may be clipped; recenter on it
        // and take another look before committing.
        const double edge = cfg.sense_bandwidth_hz / 2.0 - pattern.candidate_bandwidth_hz / 2.0;
        if (std::abs(pattern.center_offset_hz) >= edge - psd.bin_width_hz &&
            pattern.center_offset_hz != 0.0) {
            center += pattern.center_offset_hz;
            continue;
        }

        res.aligned = true;
        res.subcarrier.center_freq_hz = center + pattern.center_offset_hz;
        res.subcarrier.bandwidth_hz = pattern.candidate_bandwidth_hz;
        break;
    }
    res.energy_j = rx_power_w * res.elapsed_s;
    return res;
}

}  // namespace wssim
