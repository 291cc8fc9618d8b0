#include "wssim/sample_buffer.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace wssim {

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

double total_energy(const SampleBuffer& buf) {
    double e = 0.0;
    for (const auto& s : buf.samples) e += std::norm(s);
    return e;
}

double mean_power_mw(const SampleBuffer& buf) {
    if (buf.samples.empty()) return 0.0;
    return total_energy(buf) / static_cast<double>(buf.samples.size());
}

bool all_finite(const SampleBuffer& buf) {
    for (const auto& s : buf.samples) {
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) return false;
    }
    return true;
}

namespace {

constexpr uint32_t kMagic = 0x31425357;  // "WSB1" little-endian

template <typename T>
void append_le(std::vector<uint8_t>& out, T v) {
    uint8_t raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T read_le(const std::vector<uint8_t>& in, size_t offset) {
    if (offset + sizeof(T) > in.size()) throw std::invalid_argument("sample buffer: truncated data");
    T v;
    std::memcpy(&v, in.data() + offset, sizeof(T));
    return v;
}

}  // namespace

std::vector<uint8_t> serialize(const SampleBuffer& buf) {
    std::vector<uint8_t> out;
    out.reserve(16 + 8 * buf.samples.size());
    append_le(out, kMagic);
    append_le(out, buf.sample_rate_hz);
    append_le(out, static_cast<uint32_t>(buf.samples.size()));
    for (const auto& s : buf.samples) {
        append_le(out, static_cast<float>(s.real()));
        append_le(out, static_cast<float>(s.imag()));
    }
    return out;
}

SampleBuffer deserialize(const std::vector<uint8_t>& bytes) {
    if (read_le<uint32_t>(bytes, 0) != kMagic)
        throw std::invalid_argument("sample buffer: bad magic");
    SampleBuffer buf;
    buf.sample_rate_hz = read_le<double>(bytes, 4);
    const uint32_t count = read_le<uint32_t>(bytes, 12);
    if (bytes.size() != 16 + 8ull * count)
        throw std::invalid_argument("sample buffer: size does not match header count");
    buf.samples.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        const float re = read_le<float>(bytes, 16 + 8ull * i);
        const float im = read_le<float>(bytes, 16 + 8ull * i + 4);
        buf.samples.emplace_back(re, im);
    }
    return buf;
}

void save_buffer(const SampleBuffer& buf, const std::string& path) {
    const auto bytes = serialize(buf);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

SampleBuffer load_buffer(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for read: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

}  // namespace wssim
