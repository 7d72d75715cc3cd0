#include "coexsim/validation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "coexsim/inference.hpp"
#include "coexsim/rng.hpp"

namespace coexsim {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Aggregate power from one PPP draw in the annulus [r_min, r_max] around the
// measurement point, pure power-law gain r^-alpha at unit transmit power.
double draw_annulus_power(double lambda, double r_min, double r_max, double alpha, Prng& rng) {
    double mean_pts = lambda * kPi * (r_max * r_max - r_min * r_min);
    long n = rng.poisson(mean_pts);
    double p = 0.0;
    for (long k = 0; k < n; ++k) {
        double r = std::sqrt(r_min * r_min + rng.uniform() * (r_max * r_max - r_min * r_min));
        p += std::pow(r, -alpha);
    }
    return p;
}

double truncation_radius(double r_min, double alpha) {
    // Tail beyond R carries (r_min/R)^(alpha-2) of the mean; keep it ~0.5%.
    return r_min * std::pow(200.0, 1.0 / (alpha - 2.0));
}

}  // namespace

InferReport run_infer_validation(const ExperimentConfig& cfg) {
    InferReport report;
    std::uint64_t seed_idx = 0;
    for (double alpha : cfg.infer_alphas) {
        for (double h : cfg.infer_offsets_m) {
            for (double lambda : cfg.infer_lambdas) {
                ++seed_idx;
                Prng rng(mix({cfg.seed, 0x1f5a, seed_idx}));
                double r_max = truncation_radius(h, alpha);

                DensityCase dc;
                dc.alpha = alpha;
                dc.h_m = h;
                dc.true_lambda = lambda;
                dc.trials = cfg.infer_draws;
                double sum_hat = 0.0;
                double sum_pf = 0.0;
                for (int i = 0; i < cfg.infer_draws; ++i) {
                    double pf = draw_annulus_power(lambda, h, r_max, alpha, rng);
                    sum_pf += pf;
                    SensorReading reading{0, pf, h};
                    sum_hat += estimate_density(reading, 1.0, alpha, 1.0, cfg.estimator).lambda_hat;
                }
                dc.mean_lambda_hat = sum_hat / cfg.infer_draws;
                dc.rel_error = std::fabs(dc.mean_lambda_hat / lambda - 1.0);
                dc.pass = dc.rel_error < cfg.infer_tolerance;
                report.all_pass = report.all_pass && dc.pass;
                report.density.push_back(dc);

                // SIR check against the Monte Carlo mean interference at
                // distances keyed to the sensor offset.
                double mean_pf = sum_pf / cfg.infer_draws;
                for (double mult : {0.5, 1.0, 2.0}) {
                    double d = mult * h;
                    double signal = std::pow(d, -alpha);  // unit-power serving BS at d
                    double r_max_d = truncation_radius(d, alpha);
                    double sum_i = 0.0;
                    for (int i = 0; i < cfg.infer_sir_draws; ++i) {
                        sum_i += draw_annulus_power(lambda, d, r_max_d, alpha, rng);
                    }
                    double mean_i = sum_i / cfg.infer_sir_draws;
                    SirCase sc;
                    sc.alpha = alpha;
                    sc.h_m = h;
                    sc.true_lambda = lambda;
                    sc.distance_m = d;
                    SensorReading reading{0, mean_pf, h};
                    double est = estimate_sir(reading, signal, d, alpha);
                    double mc = signal / mean_i;
                    sc.estimate_db = 10.0 * std::log10(est);
                    sc.monte_carlo_db = 10.0 * std::log10(mc);
                    sc.diff_db = std::fabs(sc.estimate_db - sc.monte_carlo_db);
                    sc.pass = sc.diff_db <= cfg.infer_sir_tolerance_db;
                    report.all_pass = report.all_pass && sc.pass;
                    report.sir.push_back(sc);
                }
            }
        }
    }
    return report;
}

void write_infer_csv(const InferReport& report, const ExperimentConfig& cfg,
                     const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    char buf[256];
    out << "# coexsim 0.1.0 estimator consistency report\n";
    std::snprintf(buf, sizeof(buf), "# config_hash %016llx\n",
                  static_cast<unsigned long long>(cfg.config_hash));
    out << buf;
    out << "# rows ordered by (alpha, sensor offset, density); grid:\n";
    out << "# alphas =";
    for (double a : cfg.infer_alphas) out << " " << a;
    out << "\n# offsets_m =";
    for (double h : cfg.infer_offsets_m) out << " " << h;
    out << "\n# densities_per_m2 =";
    for (double l : cfg.infer_lambdas) out << " " << l;
    out << "\n# sir checks at d in {h/2, h, 2h}:\n";
    for (const SirCase& sc : report.sir) {
        std::snprintf(buf, sizeof(buf),
                      "# sir alpha=%g h=%g lambda=%g d=%g est_db=%.4f mc_db=%.4f diff_db=%.4f %s\n",
                      sc.alpha, sc.h_m, sc.true_lambda, sc.distance_m, sc.estimate_db,
                      sc.monte_carlo_db, sc.diff_db, sc.pass ? "pass" : "FAIL");
        out << buf;
    }
    out << "true_lambda,mean_lambda_hat,rel_error,trials\n";
    for (const DensityCase& dc : report.density) {
        std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%d\n", dc.true_lambda,
                      dc.mean_lambda_hat, dc.rel_error, dc.trials);
        out << buf;
    }
}

CalibrateResult run_calibrate(const ExperimentConfig& cfg) {
    // Reference tier: the first scheduled tier, falling back to tier 0.
    const TierSpec* ref = nullptr;
    for (const TierSpec& t : cfg.tiers) {
        if (t.protocol == Protocol::lte_scheduled) {
            ref = &t;
            break;
        }
    }
    if (!ref && !cfg.tiers.empty()) ref = &cfg.tiers.front();
    if (!ref) throw std::runtime_error("no tiers configured");

    const double lambda_fit = 1e-4;  // fitting density; the constant is density-free
    const double h = cfg.sensor_offset_m;
    CalibrateResult res;
    res.record.alpha = cfg.pathloss.alpha();
    res.record.sensor_offset_m = h;
    res.record.calibration = fit_calibration(cfg.pathloss, ref->carrier_hz, ref->tx_power_w,
                                             lambda_fit, h, cfg.infer_draws,
                                             mix({cfg.seed, 0xca1b}));

    // Independent validation batch.
    Prng rng(mix({cfg.seed, 0xca1b, 2}));
    double alpha = cfg.pathloss.alpha();
    double r_max = h * std::pow(200.0, 1.0 / (alpha - 2.0)) ;
    double sum_hat = 0.0;
    int draws = cfg.infer_draws;
    for (int i = 0; i < draws; ++i) {
        double mean_pts = lambda_fit * kPi * (r_max * r_max - h * h);
        long n = rng.poisson(mean_pts);
        double pf = 0.0;
        for (long k = 0; k < n; ++k) {
            double r = std::sqrt(h * h + rng.uniform() * (r_max * r_max - h * h));
            pf += ref->tx_power_w * path_gain(cfg.pathloss, r, ref->carrier_hz);
        }
        SensorReading reading{0, pf, h};
        sum_hat += estimate_density(reading, ref->tx_power_w, alpha, res.record.calibration,
                                    cfg.estimator)
                       .lambda_hat;
    }
    double mean_hat = sum_hat / draws;
    res.record.rel_error = std::fabs(mean_hat / lambda_fit - 1.0);
    res.pass = res.record.rel_error < cfg.infer_tolerance;
    return res;
}

}  // namespace coexsim
