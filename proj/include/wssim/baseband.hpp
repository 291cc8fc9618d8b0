#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "wssim/sample_buffer.hpp"

namespace wssim {

enum class Modulation { Bpsk, Ook };

// Narrowband slot inside a wide BS channel. center_freq is absolute Hz and
// is converted to a baseband offset against a reference frequency wherever
// buffers are synthesized or taken apart.
struct Subcarrier {
    double center_freq_hz = 0.0;
    double bandwidth_hz = 0.0;
};

// Bandwidths a deployment may pick from. Scenario validation and alignment
// templates both work off this set.
inline constexpr std::array<double, 4> kAllowedSubcarrierBandwidthsHz = {100e3, 200e3, 400e3,
                                                                         600e3};

bool is_allowed_bandwidth(double bandwidth_hz);

// Throws std::invalid_argument unless center > bw/2, bw > 0 and bw is in
// the allowed set.
void validate_subcarrier(const Subcarrier& sc);

// 32-bit sync word split into a coarse half and a fine half.
struct Preamble {
    static constexpr size_t kLength = 32;
    static constexpr size_t kSplit = 16;
    std::array<uint8_t, kLength> bits{};
};

// Balanced default pattern (16 ones / 16 zeros, identical halves so every
// set bit has a partner one half away — keeps OOK lag products alive).
Preamble default_preamble();
Preamble preamble_from_word(uint32_t word);
uint32_t preamble_word(const Preamble& p);
std::vector<uint8_t> preamble_bits(const Preamble& p);

// One rectangular symbol per bit at symbol rate = subcarrier bandwidth.
// The buffer sits at offset (sc.center - base_freq) in the baseband frame;
// base_freq defaults to the subcarrier's own center (offset zero).
// sample_rate must be an integer multiple of the bandwidth and satisfy
// Nyquist for the offset plus half the bandwidth.
SampleBuffer modulate(const std::vector<uint8_t>& bits, Modulation scheme, const Subcarrier& sc,
                      double sample_rate_hz, std::optional<double> base_freq_hz = std::nullopt,
                      double amplitude = 1.0, double start_time_s = 0.0);

// Per-symbol decisions; exact inverse of modulate on a clean buffer.
// BPSK decides on the sign of the derotated symbol sum, OOK on the symbol
// envelope against a data-driven threshold. track_phase enables a
// decision-directed phase loop on BPSK so slow carrier drift (residual
// CFO) does not walk the constellation away mid-packet; OOK envelopes
// never need it.
std::vector<uint8_t> demodulate(const SampleBuffer& buf, Modulation scheme, const Subcarrier& sc,
                                std::optional<double> base_freq_hz = std::nullopt,
                                bool track_phase = false);

// Adds complex white Gaussian noise so that the mean symbol energy over
// noise density equals the requested Es/N0. sps = samples per symbol.
class Rng;
SampleBuffer add_awgn(const SampleBuffer& buf, double es_n0_db, size_t samples_per_symbol,
                      Rng& rng);

// Pointwise sum of the streams shifted to their subcarrier offsets around
// base_freq. All streams must share a sample rate; subcarrier centers must
// be pairwise orthogonal (spacing on the half-bandwidth grid).
SampleBuffer synthesize_composite(const std::vector<std::pair<Subcarrier, SampleBuffer>>& streams,
                                  double base_freq_hz);

// Shift sc down to DC, low-pass at bandwidth/2 and decimate to roughly
// target_sps samples per symbol. start_time reflects the group delay of
// the extraction filter.
SampleBuffer extract_subcarrier(const SampleBuffer& composite, const Subcarrier& sc,
                                double base_freq_hz, size_t target_sps = 8);

// Closed-form integral of cos(2 pi f_i t) cos(2 pi f_j t) over [0, T'].
// Zero exactly when both the difference and the sum frequency complete an
// integer number of cycles in T'.
double orthogonality(double f_i_hz, double f_j_hz, double t_prime_s);

// How many subcarriers of sc_bw fit in bs_bw when adjacent slots may
// overlap by the given fraction.
int count_orthogonal_subcarriers(double bs_bandwidth_hz, double sc_bandwidth_hz,
                                 double overlap_fraction);

}  // namespace wssim
