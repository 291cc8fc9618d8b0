#pragma once

#include "wssim/baseband.hpp"
#include "wssim/sample_buffer.hpp"

namespace wssim {

// Frequency offset between a transmitter and a receiver, kept both as Hz at
// the frequency it was measured on and as crystal ppm so it can be scaled
// to any other subcarrier.
struct CfoEstimate {
    double delta_f_hz = 0.0;
    double ppm = 0.0;
    double reference_freq_hz = 0.0;
    double estimated_at_s = 0.0;
};

CfoEstimate make_cfo_estimate(double delta_f_hz, double reference_freq_hz, double estimated_at_s);

struct DopplerParams {
    double speed_mps = 0.0;
    double carrier_freq_hz = 0.0;
};

// Propagation speed used for the Doppler bound.
inline constexpr double kLightSpeedMps = 2.998e8;

// Multiply every sample by the unit rotation at delta_f, evaluated at the
// sample's absolute time. Power is preserved exactly.
SampleBuffer apply_cfo(const SampleBuffer& buf, double delta_f_hz);

struct CfoEstimatorOptions {
    Modulation scheme = Modulation::Ook;
    // Mean received power below this is treated as "no signal".
    double min_power_mw = 1e-12;
};

// Two-stage preamble estimator. The first half of the preamble feeds a
// one-symbol-lag coarse stage (unambiguous over +-symbol_rate/2); after
// removing the coarse value, pairs sixteen symbols apart spanning both
// halves refine it. Conjugate-product phasors are averaged before the
// single angle is taken.
CfoEstimate estimate_cfo(const SampleBuffer& preamble_rx, const Preamble& preamble,
                         double symbol_rate_hz, const CfoEstimatorOptions& opts = {});

// delta_f = f * ppm / 1e6 and its inverse.
double ppm_to_offset(double ppm, double freq_hz);
double ppm_from_offset(double delta_f_hz, double freq_hz);

// Upper bound (v / c) * f_c on the mobility-induced offset. The channel
// model picks the sign from the radial speed.
double doppler_offset(const DopplerParams& p);

// Inverse rotation by the estimated offset; the leftover equals the
// estimation error.
SampleBuffer compensate(const SampleBuffer& buf, const CfoEstimate& est);

// True once the re-estimation period has fully elapsed.
bool reestimation_due(double last_s, double now_s, double period_s);

}  // namespace wssim
