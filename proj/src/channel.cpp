#include "coexsim/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace coexsim {

double pathloss_db(const PathlossModel& model, double distance_m, double carrier_hz) {
    if (carrier_hz <= 0.0) throw std::invalid_argument("carrier frequency must be > 0");
    if (distance_m < 0.0) throw std::invalid_argument("distance must be >= 0");
    double d = std::max(distance_m, model.min_distance_m);
    double f_ghz = carrier_hz / 1e9;
    double pl = model.intercept_db + model.dist_slope_db * std::log10(d) +
                model.freq_slope_db * std::log10(f_ghz);
    return pl;
}

double path_gain(const PathlossModel& model, double distance_m, double carrier_hz) {
    return std::pow(10.0, -pathloss_db(model, distance_m, carrier_hz) / 10.0);
}

double sir(const Vec2& user, const Emitter& serving, const std::vector<Emitter>& active,
           const PathlossModel& model, const Region& region) {
    double gs = path_gain(model, wrap_distance(user, serving.pos, region), serving.carrier_hz);
    double denom = 0.0;
    for (const Emitter& e : active) {
        double rel = e.power_w / serving.power_w;
        double g = path_gain(model, wrap_distance(user, e.pos, region), e.carrier_hz);
        denom += rel * g;
    }
    if (denom <= 0.0) return kInterferenceFree;
    return gs / denom;
}

double rate(double sir_value, const RateMap& map) {
    if (is_interference_free(sir_value)) return map.peak_rate_bps;
    if (sir_value < 0.0) throw std::invalid_argument("sir must be >= 0");
    if (sir_value < map.sir_floor) return 0.0;
    double r = map.attenuation * map.bandwidth_hz * std::log2(1.0 + sir_value);
    return std::min(map.peak_rate_bps, r);
}

}  // namespace coexsim
