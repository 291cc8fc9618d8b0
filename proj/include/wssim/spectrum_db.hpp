#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace wssim {

struct Point {
    double x_m = 0.0;
    double y_m = 0.0;
};

double distance_m(const Point& a, const Point& b);

// US TV band handled here: channels 14..51, 6 MHz each, 470-698 MHz.
inline constexpr int kFirstTvChannel = 14;
inline constexpr int kLastTvChannel = 51;
inline constexpr double kTvChannelWidthHz = 6e6;
inline constexpr double kTvBandStartHz = 470e6;

bool is_tv_channel(int channel);
double channel_low_hz(int channel);
double channel_center_hz(int channel);
// Channel containing the frequency, or nullopt outside the band.
std::optional<int> channel_of_freq(double freq_hz);

// Licensed transmitter that secondary devices must protect.
struct TvStation {
    int channel = 0;
    Point location;
    double tx_power_dbm = 0.0;
    double antenna_height_m = 10.0;
};

struct PropagationModel {
    enum class Kind { LogDistance, FreeSpace } kind = Kind::LogDistance;
    double exponent = 3.5;             // urban default; FreeSpace forces 2
    double reference_distance_m = 1.0;
    double reference_loss_db = 26.4;   // free-space loss at 1 m, mid TV band
};

double path_loss_db(const PropagationModel& model, double distance_m);

// Height correction a(h) = 3.2 (log10(11.5 h))^2 - 4.97 from Hata's urban
// model. Strictly increasing for h > 1/11.5 m.
double antenna_correction(double h_m);

// Correction applied to raw measurements taken at height h against the
// 10 m reference the contour rules assume: a(10) - a(h). Decreasing in h,
// so lowering the antenna can only push a reading further above threshold.
double height_correction_db(double h_m);

// Occupied when corrected RSS would exceed this.
inline constexpr double kProtectionThresholdDbm = -84.0;
// Extra separation required outside the contour for portable devices.
inline constexpr double kContourSeparationM = 6000.0;

// Geospatial white-space ground truth over a rectangular extent.
class SpectrumMap {
public:
    SpectrumMap(double extent_x_m, double extent_y_m, double cell_m = 100.0,
                PropagationModel model = {}, double correction_db = 7.5);

    void add_station(const TvStation& st);
    const std::vector<TvStation>& stations() const { return stations_; }

    double extent_x_m() const { return extent_x_; }
    double extent_y_m() const { return extent_y_; }
    double cell_m() const { return cell_; }
    double correction_db() const { return correction_db_; }
    const PropagationModel& model() const { return model_; }
    bool in_bounds(const Point& p) const;

    // Corrected RSS from one station at a point (clamped at the reference
    // distance when the point sits on top of the station).
    double rss_at(const TvStation& st, const Point& p) const;

    // True iff no station on the channel covers the point with its
    // protection contour plus the 6 km separation.
    bool is_white_space(int channel, const Point& p) const;

    // All band channels that are white space at the point.
    std::set<int> available_channels(const Point& p) const;

    struct ProbePoint {
        Point location;
        bool in_bounds = false;
        std::set<int> channels;
    };
    // Channel availability at (0,+-r), (+-r,0) and (+-r,+-r) around the BS.
    // Out-of-bounds probes come back flagged with an empty set.
    std::vector<ProbePoint> eight_point_channel_list(const Point& bs_location, double r_m) const;

    // Grid cells inside the disc around `center` where the channel is free.
    // Feeds the availability ordering for subcarrier assignment.
    int count_available_cells(int channel, const Point& center, double radius_m) const;

    // Distance from the station beyond which a point is usable: protection
    // contour radius plus the separation margin.
    double exclusion_radius_m(const TvStation& st) const;

private:
    double extent_x_, extent_y_, cell_;
    PropagationModel model_;
    double correction_db_;
    std::vector<TvStation> stations_;
};

// One station per line: channel x_m y_m tx_power_dbm height_m, whitespace
// separated, '#' starts a comment. Throws with the offending line number.
std::vector<TvStation> parse_station_registry(const std::string& text);
std::vector<TvStation> load_station_registry(const std::string& path);
std::string format_station_registry(const std::vector<TvStation>& stations);

}  // namespace wssim
