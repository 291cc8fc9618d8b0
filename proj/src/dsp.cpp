#include "wssim/dsp.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace wssim::dsp {

bool is_power_of_two(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft(std::vector<std::complex<double>>& x, bool inverse) {
    const size_t n = x.size();
    if (!is_power_of_two(n)) throw std::invalid_argument("fft: size must be a power of two");
    if (n <= 1) return;

    // Bit-reversal permutation.
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }

    const double sign = inverse ? 1.0 : -1.0;
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const auto u = x[i + k];
                const auto v = x[i + k + len / 2] * w;
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& v : x) v *= inv;
    }
}

double sinc(double x) {
    if (x == 0.0) return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

size_t lowpass_length(double transition_norm) {
    if (transition_norm <= 0.0) throw std::invalid_argument("lowpass_length: transition must be > 0");
    // Blackman window needs ~5.5 / transition taps.
    auto n = static_cast<size_t>(std::ceil(5.5 / transition_norm));
    if (n < 31) n = 31;
    if (n > 8191) n = 8191;
    if (n % 2 == 0) ++n;
    return n;
}

std::vector<double> lowpass_taps(double cutoff_norm, size_t length) {
    if (cutoff_norm <= 0.0 || cutoff_norm >= 0.5)
        throw std::invalid_argument("lowpass_taps: cutoff must be in (0, 0.5)");
    if (length % 2 == 0) throw std::invalid_argument("lowpass_taps: length must be odd");
    std::vector<double> taps(length);
    const double mid = static_cast<double>(length - 1) / 2.0;
    double sum = 0.0;
    for (size_t i = 0; i < length; ++i) {
        const double m = static_cast<double>(i) - mid;
        const double w = 0.42 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                               static_cast<double>(length - 1)) +
                         0.08 * std::cos(4.0 * std::numbers::pi * static_cast<double>(i) /
                                         static_cast<double>(length - 1));
        taps[i] = 2.0 * cutoff_norm * sinc(2.0 * cutoff_norm * m) * w;
        sum += taps[i];
    }
    for (auto& t : taps) t /= sum;  // unit DC gain
    return taps;
}

std::vector<std::complex<double>> convolve_valid(const std::vector<std::complex<double>>& x,
                                                 const std::vector<double>& taps) {
    if (x.size() < taps.size()) return {};
    const size_t out_len = x.size() - taps.size() + 1;
    std::vector<std::complex<double>> out(out_len);
    for (size_t k = 0; k < out_len; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (size_t i = 0; i < taps.size(); ++i) acc += x[k + i] * taps[i];
        out[k] = acc;
    }
    return out;
}

std::vector<double> moving_average(const std::vector<double>& x, size_t window) {
    if (window == 0) throw std::invalid_argument("moving_average: window must be > 0");
    if (x.size() < window) return {};
    std::vector<double> out(x.size() - window + 1);
    double acc = 0.0;
    for (size_t i = 0; i < window; ++i) acc += x[i];
    out[0] = acc / static_cast<double>(window);
    for (size_t k = 1; k < out.size(); ++k) {
        acc += x[k + window - 1] - x[k - 1];
        out[k] = acc / static_cast<double>(window);
    }
    return out;
}

}  // namespace wssim::dsp
