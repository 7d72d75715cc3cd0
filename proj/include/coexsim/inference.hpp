#pragma once

#include <vector>

#include "coexsim/channel.hpp"
#include "coexsim/geometry.hpp"

namespace coexsim {

// One aggregate power measurement on a band, taken by a sensor placed at
// `sensor_offset` meters from its base station.
struct SensorReading {
    int band = 0;
    double power_w = 0.0;
    double sensor_offset_m = 50.0;
};

struct DensityEstimate {
    int band = 0;
    double lambda_hat = 0.0;  // transmitters per m^2
    double calibration = 1.0;
};

// Exclusion-radius interference factor: sqrt(2*pi/(alpha-2)) * h^((2-alpha)/2).
// Inverts the mean aggregate power of a power-law PPP field observed beyond
// radius h. Defined only for alpha > 2.
struct QFactor {
    double h_m = 0.0;
    double alpha = 0.0;
    double value = 0.0;
};

QFactor q_factor(double h_m, double alpha);

enum class EstimatorForm {
    squared,  // lambda = (sqrt(Pf/P)/Q)^2, linear in Pf (default)
    sqrt_form  // literal proportional form, linear in sqrt(Pf)
};

// Transmitter-density estimate from one sensed power. The squared form is
//   lambda = calibration * Pf*(alpha-2)*h^(alpha-2) / (2*pi*P)
// which is unbiased when the pathloss is K*r^-alpha and calibration = 1/K.
DensityEstimate estimate_density(const SensorReading& reading, double tier_power_w, double alpha,
                                 double calibration = 1.0,
                                 EstimatorForm form = EstimatorForm::squared);

// SIR at distance d from the sensing BS: S * (h/d)^(2-alpha) / Pf.
// Zero sensed power returns the interference-free marker.
double estimate_sir(const SensorReading& reading, double signal_strength_w, double distance_m,
                    double alpha);

// Aggregate received power at a sensor position from every active co-band
// transmitter, excluding the sensor's own cell.
double sense_power(const Vec2& sensor, int own_cell_id, const std::vector<Node>& nodes,
                   const std::vector<bool>& active, const std::vector<double>& tx_power_w,
                   const std::vector<double>& carrier_hz, const PathlossModel& model,
                   const Region& region);

// Analytic calibration constant for a log-distance pathloss model:
// 1 / K where gain = K * d^-alpha at the given carrier.
double analytic_calibration(const PathlossModel& model, double carrier_hz);

struct TierActivityInputs {
    // signature[tier][band]: fraction of that tier's transmitters occupying
    // the band when fully active (config-supplied prior).
    std::vector<std::vector<double>> signature;
    std::vector<double> density_per_m2;  // known deployment density per tier
    std::vector<double> tx_power_w;      // per-tier transmit power
};

// Non-negative least-squares decomposition of per-band density estimates
// into per-tier activity fractions, clamped to [0,1]. Throws
// "tiers not separable" when the signature system is rank deficient.
std::vector<double> estimate_tier_activity(const std::vector<SensorReading>& readings,
                                           const TierActivityInputs& inputs, double alpha,
                                           double calibration = 1.0);

// Monte Carlo fit of the calibration constant: ratio of true density to the
// mean uncalibrated estimate over `draws` synthetic sensing scenes.
double fit_calibration(const PathlossModel& model, double carrier_hz, double tier_power_w,
                       double true_lambda, double h_m, int draws, std::uint64_t seed);

}  // namespace coexsim
