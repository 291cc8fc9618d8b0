#include "wssim/spectrum_db.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wssim {

double distance_m(const Point& a, const Point& b) {
    return std::hypot(a.x_m - b.x_m, a.y_m - b.y_m);
}

bool is_tv_channel(int channel) { return channel >= kFirstTvChannel && channel <= kLastTvChannel; }

double channel_low_hz(int channel) {
    return kTvBandStartHz + kTvChannelWidthHz * static_cast<double>(channel - kFirstTvChannel);
}

double channel_center_hz(int channel) { return channel_low_hz(channel) + kTvChannelWidthHz / 2.0; }

std::optional<int> channel_of_freq(double freq_hz) {
    if (freq_hz < kTvBandStartHz) return std::nullopt;
    const int ch = kFirstTvChannel + static_cast<int>((freq_hz - kTvBandStartHz) / kTvChannelWidthHz);
    if (!is_tv_channel(ch)) return std::nullopt;
    return ch;
}

double path_loss_db(const PropagationModel& model, double distance_m) {
    const double d = std::max(distance_m, model.reference_distance_m);
    const double n = model.kind == PropagationModel::Kind::FreeSpace ? 2.0 : model.exponent;
    return model.reference_loss_db + 10.0 * n * std::log10(d / model.reference_distance_m);
}

double antenna_correction(double h_m) {
    if (h_m <= 0.0) throw std::invalid_argument("antenna_correction: height must be > 0");
    const double l = std::log10(11.5 * h_m);
    return 3.2 * l * l - 4.97;
}

double height_correction_db(double h_m) { return antenna_correction(10.0) - antenna_correction(h_m); }

SpectrumMap::SpectrumMap(double extent_x_m, double extent_y_m, double cell_m,
                         PropagationModel model, double correction_db)
    : extent_x_(extent_x_m), extent_y_(extent_y_m), cell_(cell_m), model_(model),
      correction_db_(correction_db) {
    if (extent_x_ <= 0.0 || extent_y_ <= 0.0 || cell_ <= 0.0)
        throw std::invalid_argument("spectrum map: extent and cell size must be > 0");
}

void SpectrumMap::add_station(const TvStation& st) {
    if (!is_tv_channel(st.channel))
        throw std::invalid_argument("spectrum map: station channel outside 14..51");
    if (!std::isfinite(st.tx_power_dbm))
        throw std::invalid_argument("spectrum map: station tx power must be finite");
    stations_.push_back(st);
}

bool SpectrumMap::in_bounds(const Point& p) const {
    return p.x_m >= 0.0 && p.x_m <= extent_x_ && p.y_m >= 0.0 && p.y_m <= extent_y_;
}

double SpectrumMap::rss_at(const TvStation& st, const Point& p) const {
    const double d = distance_m(st.location, p);
    return st.tx_power_dbm - path_loss_db(model_, d) + correction_db_;
}

double SpectrumMap::exclusion_radius_m(const TvStation& st) const {
    // Largest d with tx - PL(d) + corr >= threshold, then the separation
    // margin on top. Monotone path loss gives the closed form directly.
    const double margin_db = st.tx_power_dbm + correction_db_ - kProtectionThresholdDbm -
                             model_.reference_loss_db;
    const double n = model_.kind == PropagationModel::Kind::FreeSpace ? 2.0 : model_.exponent;
    double contour = 0.0;
    if (margin_db >= 0.0)
        contour = model_.reference_distance_m * std::pow(10.0, margin_db / (10.0 * n));
    return contour + kContourSeparationM;
}

bool SpectrumMap::is_white_space(int channel, const Point& p) const {
    if (!is_tv_channel(channel))
        throw std::invalid_argument("is_white_space: unknown channel");
    for (const auto& st : stations_) {
        if (st.channel != channel) continue;
        if (distance_m(st.location, p) <= exclusion_radius_m(st)) return false;
    }
    return true;
}

std::set<int> SpectrumMap::available_channels(const Point& p) const {
    if (!in_bounds(p)) throw std::invalid_argument("available_channels: point outside map bounds");
    std::set<int> out;
    for (int ch = kFirstTvChannel; ch <= kLastTvChannel; ++ch) {
        if (is_white_space(ch, p)) out.insert(ch);
    }
    return out;
}

std::vector<SpectrumMap::ProbePoint> SpectrumMap::eight_point_channel_list(const Point& bs,
                                                                           double r_m) const {
    const Point offsets[8] = {{0, r_m},    {0, -r_m},  {r_m, 0},    {-r_m, 0},
                              {r_m, r_m},  {r_m, -r_m}, {-r_m, r_m}, {-r_m, -r_m}};
    std::vector<ProbePoint> out;
    out.reserve(8);
    for (const auto& off : offsets) {
        ProbePoint pp;
        pp.location = {bs.x_m + off.x_m, bs.y_m + off.y_m};
        pp.in_bounds = in_bounds(pp.location);
        if (pp.in_bounds) pp.channels = available_channels(pp.location);
        out.push_back(std::move(pp));
    }
    return out;
}

int SpectrumMap::count_available_cells(int channel, const Point& center, double radius_m) const {
    const auto nx = static_cast<int>(std::floor(extent_x_ / cell_));
    const auto ny = static_cast<int>(std::floor(extent_y_ / cell_));
    int count = 0;
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            const Point c{(static_cast<double>(ix) + 0.5) * cell_,
                          (static_cast<double>(iy) + 0.5) * cell_};
            if (distance_m(c, center) > radius_m) continue;
            if (is_white_space(channel, c)) ++count;
        }
    }
    return count;
}

std::vector<TvStation> parse_station_registry(const std::string& text) {
    std::vector<TvStation> out;
    std::istringstream stream(text);
    std::string line;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        TvStation st;
        if (!(fields >> st.channel)) continue;  // blank or comment-only line
        if (!(fields >> st.location.x_m >> st.location.y_m >> st.tx_power_dbm >>
              st.antenna_height_m))
            throw std::invalid_argument("station registry line " + std::to_string(line_no) +
                                        ": expected 'channel x_m y_m tx_power_dbm height_m'");
        if (!is_tv_channel(st.channel))
            throw std::invalid_argument("station registry line " + std::to_string(line_no) +
                                        ": channel outside 14..51");
        out.push_back(st);
    }
    return out;
}

std::vector<TvStation> load_station_registry(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open station registry: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_station_registry(ss.str());
}

std::string format_station_registry(const std::vector<TvStation>& stations) {
    std::string out = "# channel x_m y_m tx_power_dbm height_m\n";
    char line[160];
    for (const auto& st : stations) {
        std::snprintf(line, sizeof(line), "%d %.9g %.9g %.9g %.9g\n", st.channel, st.location.x_m,
                      st.location.y_m, st.tx_power_dbm, st.antenna_height_m);
        out += line;
    }
    return out;
}

}  // namespace wssim
