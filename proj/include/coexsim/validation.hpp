#pragma once

#include <string>
#include <vector>

#include "coexsim/config.hpp"
#include "coexsim/experiments.hpp"

namespace coexsim {

struct DensityCase {
    double alpha = 0.0;
    double h_m = 0.0;
    double true_lambda = 0.0;
    double mean_lambda_hat = 0.0;
    double rel_error = 0.0;
    int trials = 0;
    bool pass = false;
};

struct SirCase {
    double alpha = 0.0;
    double h_m = 0.0;
    double true_lambda = 0.0;
    double distance_m = 0.0;
    double estimate_db = 0.0;
    double monte_carlo_db = 0.0;
    double diff_db = 0.0;
    bool pass = false;
};

struct InferReport {
    std::vector<DensityCase> density;
    std::vector<SirCase> sir;
    bool all_pass = true;
};

// Estimator-consistency sweep over the configured (alpha, h, lambda) grid
// with a pure power-law pathloss: density estimates against brute-force PPP
// power summation, SIR estimates against the Monte Carlo mean interference.
InferReport run_infer_validation(const ExperimentConfig& cfg);

void write_infer_csv(const InferReport& report, const ExperimentConfig& cfg,
                     const std::string& path);

struct CalibrateResult {
    CalibrationRecord record;
    bool pass = false;
};

// Fits the inference calibration constant for the configured pathloss model
// and validates it on an independent batch.
CalibrateResult run_calibrate(const ExperimentConfig& cfg);

}  // namespace coexsim
