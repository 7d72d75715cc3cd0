#include "coexsim/inference.hpp"

#include <cmath>
#include <stdexcept>

#include "coexsim/rng.hpp"

namespace coexsim {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

QFactor q_factor(double h_m, double alpha) {
    if (h_m <= 0.0) throw std::invalid_argument("sensor offset must be > 0");
    if (alpha <= 2.0) throw std::invalid_argument("divergent interference regime");
    QFactor q;
    q.h_m = h_m;
    q.alpha = alpha;
    q.value = std::sqrt(2.0 * kPi / (alpha - 2.0)) * std::pow(h_m, (2.0 - alpha) / 2.0);
    return q;
}

DensityEstimate estimate_density(const SensorReading& reading, double tier_power_w, double alpha,
                                 double calibration, EstimatorForm form) {
    if (tier_power_w <= 0.0) throw std::invalid_argument("tier power must be > 0");
    if (reading.power_w < 0.0) throw std::invalid_argument("sensed power must be >= 0");
    DensityEstimate est;
    est.band = reading.band;
    est.calibration = calibration;
    if (reading.power_w == 0.0) return est;
    double q = q_factor(reading.sensor_offset_m, alpha).value;
    double root = std::sqrt(reading.power_w / tier_power_w) / q;
    est.lambda_hat = (form == EstimatorForm::squared) ? calibration * root * root
                                                      : calibration * root;
    return est;
}

double estimate_sir(const SensorReading& reading, double signal_strength_w, double distance_m,
                    double alpha) {
    if (distance_m <= 0.0) throw std::invalid_argument("distance must be > 0");
    if (signal_strength_w <= 0.0) throw std::invalid_argument("signal strength must be > 0");
    if (reading.power_w < 0.0) throw std::invalid_argument("sensed power must be >= 0");
    if (reading.power_w == 0.0) return kInterferenceFree;
    double qh = q_factor(reading.sensor_offset_m, alpha).value;
    double qd = q_factor(distance_m, alpha).value;
    double ratio = qh / qd;
    return signal_strength_w * ratio * ratio / reading.power_w;
}

double sense_power(const Vec2& sensor, int own_cell_id, const std::vector<Node>& nodes,
                   const std::vector<bool>& active, const std::vector<double>& tx_power_w,
                   const std::vector<double>& carrier_hz, const PathlossModel& model,
                   const Region& region) {
    double total = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!active[i] || nodes[i].id == own_cell_id) continue;
        double d = wrap_distance(sensor, nodes[i].pos, region);
        total += tx_power_w[i] * path_gain(model, d, carrier_hz[i]);
    }
    return total;
}

double analytic_calibration(const PathlossModel& model, double carrier_hz) {
    // gain(d) = 10^-(intercept + slope*log10(d) + fslope*log10(fGHz))/10
    //         = K * d^-alpha with K = 10^-(intercept + fslope*log10(fGHz))/10.
    double f_ghz = carrier_hz / 1e9;
    double k = std::pow(10.0, -(model.intercept_db + model.freq_slope_db * std::log10(f_ghz)) / 10.0);
    return 1.0 / k;
}

std::vector<double> estimate_tier_activity(const std::vector<SensorReading>& readings,
                                           const TierActivityInputs& inputs, double alpha,
                                           double calibration) {
    const std::size_t tiers = inputs.signature.size();
    const std::size_t bands = readings.size();
    if (tiers == 0) throw std::invalid_argument("no tiers");
    if (bands < tiers) throw std::invalid_argument("need at least as many bands as tiers");
    for (const auto& sig : inputs.signature) {
        if (sig.size() != bands) throw std::invalid_argument("signature band count mismatch");
    }

    // Power-weighted density observed per band: estimate with unit tier
    // power, so y_f = sum_t a_t * s_tf * lambda_t * P_t.
    std::vector<double> y(bands, 0.0);
    bool any_power = false;
    for (std::size_t f = 0; f < bands; ++f) {
        if (readings[f].power_w > 0.0) any_power = true;
        y[f] = estimate_density(readings[f], 1.0, alpha, calibration).lambda_hat;
    }
    if (!any_power) return std::vector<double>(tiers, 0.0);

    std::vector<std::vector<double>> m(bands, std::vector<double>(tiers, 0.0));
    for (std::size_t f = 0; f < bands; ++f) {
        for (std::size_t t = 0; t < tiers; ++t) {
            m[f][t] = inputs.signature[t][f] * inputs.density_per_m2[t] * inputs.tx_power_w[t];
        }
    }

    // Normal equations G a = b.
    std::vector<std::vector<double>> g(tiers, std::vector<double>(tiers, 0.0));
    std::vector<double> b(tiers, 0.0);
    for (std::size_t t = 0; t < tiers; ++t) {
        for (std::size_t u = 0; u < tiers; ++u) {
            for (std::size_t f = 0; f < bands; ++f) g[t][u] += m[f][t] * m[f][u];
        }
        for (std::size_t f = 0; f < bands; ++f) b[t] += m[f][t] * y[f];
    }
    double scale = 0.0;
    for (std::size_t t = 0; t < tiers; ++t) scale = std::max(scale, g[t][t]);
    if (scale <= 0.0) throw std::runtime_error("tiers not separable");

    // Rank check via Cholesky pivots of the Gram matrix.
    {
        std::vector<std::vector<double>> c = g;
        for (std::size_t k = 0; k < tiers; ++k) {
            for (std::size_t j = 0; j < k; ++j) c[k][k] -= c[k][j] * c[k][j];
            if (c[k][k] <= 1e-12 * scale) throw std::runtime_error("tiers not separable");
            c[k][k] = std::sqrt(c[k][k]);
            for (std::size_t i = k + 1; i < tiers; ++i) {
                for (std::size_t j = 0; j < k; ++j) c[i][k] -= c[i][j] * c[k][j];
                c[i][k] /= c[k][k];
            }
        }
    }

    // Box-constrained least squares on [0,1] by cyclic coordinate descent;
    // exact per-coordinate minimizer of a convex quadratic, clamped.
    std::vector<double> a(tiers, 0.5);
    for (int sweep = 0; sweep < 500; ++sweep) {
        double delta = 0.0;
        for (std::size_t t = 0; t < tiers; ++t) {
            double r = b[t];
            for (std::size_t u = 0; u < tiers; ++u) {
                if (u != t) r -= g[t][u] * a[u];
            }
            double next = std::clamp(r / g[t][t], 0.0, 1.0);
            delta = std::max(delta, std::fabs(next - a[t]));
            a[t] = next;
        }
        if (delta < 1e-12) break;
    }
    return a;
}

double fit_calibration(const PathlossModel& model, double carrier_hz, double tier_power_w,
                       double true_lambda, double h_m, int draws, std::uint64_t seed) {
    // Synthetic sensing scenes: PPP transmitters in an annulus [h, R] around
    // the sensor; R chosen so the truncated tail is negligible.
    double alpha = model.alpha();
    double r_max = h_m * std::pow(100.0, 1.0 / (alpha - 2.0)) * 2.0;
    Prng rng(seed);
    double sum_uncal = 0.0;
    for (int i = 0; i < draws; ++i) {
        double mean_pts = true_lambda * kPi * (r_max * r_max - h_m * h_m);
        long n = rng.poisson(mean_pts);
        double p = 0.0;
        for (long k = 0; k < n; ++k) {
            double r = std::sqrt(h_m * h_m + rng.uniform() * (r_max * r_max - h_m * h_m));
            p += tier_power_w * path_gain(model, r, carrier_hz);
        }
        SensorReading reading{0, p, h_m};
        sum_uncal += estimate_density(reading, tier_power_w, alpha, 1.0).lambda_hat;
    }
    double mean_uncal = sum_uncal / static_cast<double>(draws);
    if (mean_uncal <= 0.0) throw std::runtime_error("calibration fit saw no power");
    return true_lambda / mean_uncal;
}

}  // namespace coexsim
