#pragma once

#include <limits>
#include <vector>

#include "coexsim/geometry.hpp"

namespace coexsim {

// Distinguished SIR value for an empty interferer set; the rate map
// resolves it to the peak rate.
inline constexpr double kInterferenceFree = std::numeric_limits<double>::infinity();

inline bool is_interference_free(double sir) {
    return sir == std::numeric_limits<double>::infinity();
}

// Log-distance pathloss of the form
//   PL(d, f) = intercept + dist_slope*log10(d) + freq_slope*log10(f_GHz)
// with d clamped below at min_distance. The distance slope is 10*alpha.
struct PathlossModel {
    double intercept_db = 22.7;
    double dist_slope_db = 36.7;
    double freq_slope_db = 26.0;
    double min_distance_m = 1.0;
    double shadowing_sigma_db = 0.0;  // log-normal shadowing, 0 = off

    double alpha() const { return dist_slope_db / 10.0; }
    void validate() const {
        if (min_distance_m <= 0.0) throw std::invalid_argument("min_distance must be > 0");
        if (alpha() <= 2.0)
            throw std::invalid_argument("pathloss exponent must exceed 2 (dist_slope > 20 dB)");
    }
};

double pathloss_db(const PathlossModel& model, double distance_m, double carrier_hz);

// Linear power gain 10^(-PL/10).
double path_gain(const PathlossModel& model, double distance_m, double carrier_hz);

inline double received_power(double tx_power_w, double pl_db) {
    return tx_power_w * std::pow(10.0, -pl_db / 10.0);
}

struct Emitter {
    Vec2 pos;
    double power_w = 1.0;
    double carrier_hz = 2.4e9;
};

// SIR at a user served by `serving` against the active interferer set.
// Computed from power ratios relative to the serving transmitter, so a
// common scaling of all powers that keeps each individual power exactly
// representable leaves the result bit-identical. An empty (or fully
// zero-gain) interferer set returns the interference-free marker.
double sir(const Vec2& user, const Emitter& serving, const std::vector<Emitter>& active,
           const PathlossModel& model, const Region& region);

// Truncated Shannon rate map: min(peak, attenuation*B*log2(1+sir)),
// zero below the SIR floor, peak for interference-free input.
struct RateMap {
    double bandwidth_hz = 20e6;
    double attenuation = 0.75;
    double sir_floor = 0.1;  // linear, -10 dB
    double peak_rate_bps = 84e6;
};

double rate(double sir_value, const RateMap& map);

}  // namespace coexsim
