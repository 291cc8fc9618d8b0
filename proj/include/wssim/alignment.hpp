#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "wssim/baseband.hpp"
#include "wssim/sample_buffer.hpp"

namespace wssim {

// Power spectrum over the sensed band, bins ordered low to high frequency
// around the sensing center (bin k sits at (k - nbins/2) * bin_width).
struct PsdVector {
    std::vector<double> bins;  // linear power, non-negative
    double bin_width_hz = 0.0;
    double total_power = 0.0;  // == sum of bins
};

enum class PsdWindow { Rectangular, Hann };

// Candidate subcarrier widths a neighboring BS may be using.
inline constexpr std::array<double, 4> kAlignmentCandidateBandwidthsHz = {100e3, 200e3, 400e3,
                                                                          600e3};

struct OverlapPattern {
    double candidate_bandwidth_hz = 0.0;
    double center_offset_hz = 0.0;  // relative to the sensing center
    double match_score = 0.0;       // in [0, 1]
};

struct AlignmentConfig {
    double sense_bandwidth_hz = 1.2e6;  // spans the widest candidate plus slack
    size_t psd_size = 256;
    size_t psd_averages = 8;
    double offset_lattice_hz = 50e3;
    PsdWindow window = PsdWindow::Rectangular;
    double busy_threshold_dbm = -104.0;
    double min_pattern_power_dbm = -104.0;  // mean in-template power gate
    double min_match_score = 0.2;
    double timeout_s = 10.0;
    size_t nominal_preamble_samples = 192;  // 32 symbols at 200 kHz, sensed at 1.2 MS/s
};

// Carrier sensing: moving average of sample power with a window of half
// the preamble length; busy when any window mean crosses the threshold.
enum class ChannelState { Busy, Idle };
ChannelState time_domain_sense(const SampleBuffer& buf, size_t preamble_len_samples,
                               double threshold_dbm);

// Magnitude-squared spectrum of the most recent M samples (M a power of
// two), optionally windowed. The bin sum equals the windowed time-domain
// energy.
PsdVector compute_psd(const SampleBuffer& buf, size_t m, PsdWindow window = PsdWindow::Rectangular);

// Mean of several most-recent-M segments walking back from the end of the
// buffer; smooths the modulation off the occupancy shape.
PsdVector average_psd(const SampleBuffer& buf, size_t m, size_t segments,
                      PsdWindow window = PsdWindow::Rectangular);

// Thrown when no overlap template passes the power and score gates.
struct NoPatternError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Correlate the PSD against rectangular occupancy templates for every
// candidate bandwidth on the offset lattice (edges soft over one bin) and
// return the best. Templates whose in-band power sits at the noise floor
// are skipped; if none survive, NoPatternError.
OverlapPattern match_overlap_pattern(const PsdVector& psd, const std::vector<double>& candidates,
                                     const AlignmentConfig& cfg = {});

// Sample supply for the alignment loop; the simulator world and synthetic
// test fixtures implement it.
class BandCapture {
public:
    virtual ~BandCapture() = default;
    virtual SampleBuffer capture(double center_hz, double rate_hz, double start_s,
                                 size_t n_samples) = 0;
};

struct AlignmentResult {
    bool aligned = false;
    Subcarrier subcarrier;       // detected BS subcarrier (absolute center)
    double elapsed_s = 0.0;
    double energy_j = 0.0;
    int sense_calls = 0;
    int busy_verdicts = 0;
    int psd_calls = 0;  // frequency sensing runs only after a busy verdict
};

// Repeatedly carrier-sense around initial_center_hz; on busy, PSD-match
// the overlap pattern and retune to the detected subcarrier. A match
// hugging the window edge recenters the window and tries again. Gives up
// after cfg.timeout_s of listening.
AlignmentResult align(BandCapture& capture, double initial_center_hz, double start_s,
                      double rx_power_w, const AlignmentConfig& cfg = {});

}  // namespace wssim
