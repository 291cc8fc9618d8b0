#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace wssim::dsp {

// In-place radix-2 Cooley-Tukey FFT. Size must be a power of two.
void fft(std::vector<std::complex<double>>& x, bool inverse = false);

bool is_power_of_two(size_t n);

// Blackman-windowed sinc low-pass prototype, unit DC gain, odd length.
// cutoff is the -6 dB edge as a fraction of the sample rate (0 < c < 0.5).
std::vector<double> lowpass_taps(double cutoff_norm, size_t length);

// Pick an odd FIR length for a Blackman design with the given normalized
// transition width (stopband is roughly -74 dB).
size_t lowpass_length(double transition_norm);

// Convolve x with real taps, returning only the fully-overlapped (valid)
// region: out[k] = sum_i x[k + i] * taps[i], length = len(x) - len(taps) + 1.
std::vector<std::complex<double>> convolve_valid(const std::vector<std::complex<double>>& x,
                                                 const std::vector<double>& taps);

// Moving average of a real series with the given window; out[k] covers
// x[k .. k+window-1], length = len(x) - window + 1.
std::vector<double> moving_average(const std::vector<double>& x, size_t window);

// sin(pi x) / (pi x), 1 at x = 0.
double sinc(double x);

}  // namespace wssim::dsp
