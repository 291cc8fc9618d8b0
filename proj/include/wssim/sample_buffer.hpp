#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace wssim {

using ComplexSample = std::complex<double>;

// Power convention used across the library: a complex sample of unit
// magnitude carries 1 mW (0 dBm). Link budgets, sensing thresholds and
// trace features all share this scale.
double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);
double db_to_linear(double db);
double linear_to_db(double lin);

// Time series of complex baseband samples. All PHY math runs on these.
// Buffers are complex baseband relative to a caller-chosen reference
// frequency (the BS channel center on composite paths); sample times are
// absolute: t_n = start_time_s + n / sample_rate_hz.
struct SampleBuffer {
    std::vector<ComplexSample> samples;
    double sample_rate_hz = 0.0;
    double start_time_s = 0.0;

    size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    double duration_s() const {
        return sample_rate_hz > 0.0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
    }
    double sample_time_s(size_t n) const {
        return start_time_s + static_cast<double>(n) / sample_rate_hz;
    }
};

// Sum of |s|^2 over the buffer.
double total_energy(const SampleBuffer& buf);

// Mean of |s|^2 (mW under the library power convention).
double mean_power_mw(const SampleBuffer& buf);

// True if every sample is finite.
bool all_finite(const SampleBuffer& buf);

// Fixture serialization: 16-byte header (u32 magic 'WSB1', f64 sample_rate,
// u32 count) followed by count interleaved little-endian float32 re/im
// pairs. start_time is not stored; loads come back at t = 0.
std::vector<uint8_t> serialize(const SampleBuffer& buf);
SampleBuffer deserialize(const std::vector<uint8_t>& bytes);

void save_buffer(const SampleBuffer& buf, const std::string& path);
SampleBuffer load_buffer(const std::string& path);

}  // namespace wssim
