#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coexsim/inference.hpp"
#include "coexsim/mac.hpp"
#include "coexsim/mitigation.hpp"

namespace coexsim {

enum class PriorityPolicy { random, traffic, qos };

// Fully resolved experiment description; produced by the config layer.
struct ExperimentConfig {
    std::uint64_t seed = 12345;
    int drops = 100;
    int frames_per_drop = 200;
    int frame_length = 10;
    int users_per_cell = 1;
    int subbands = 1;
    Scheme scheme = Scheme::hfr1;
    double abs_rate = 0.0;
    std::vector<double> load_grid{0.0, 0.25, 0.5, 0.75, 1.0};

    Region region;
    std::vector<TierSpec> tiers;
    PathlossModel pathloss;

    double bandwidth_hz = 20e6;
    double attenuation = 0.75;
    double sir_floor_db = -10.0;

    ContentionParams contention;

    double sfr_backoff = 0.5;
    double offband_scale = 0.5;
    PriorityPolicy priority = PriorityPolicy::random;
    int warmup_frames = 2;

    double sensor_offset_m = 50.0;
    EstimatorForm estimator = EstimatorForm::squared;
    double calibration = 0.0;  // 0 = analytic from the pathloss model
    std::string calibration_file;

    // Estimator-consistency validation grid.
    std::vector<double> infer_alphas{3.0, 4.0};
    std::vector<double> infer_offsets_m{20.0, 50.0, 100.0};
    std::vector<double> infer_lambdas{1e-5, 1e-4};
    int infer_draws = 10000;
    int infer_sir_draws = 1000;
    double infer_tolerance = 0.10;
    double infer_sir_tolerance_db = 3.0;

    // Optional per-tier band-occupancy signatures for activity decomposition.
    std::vector<std::vector<double>> signatures;

    int workers = 0;  // 0 = resolve from environment / hardware
    std::uint64_t config_hash = 0;

    int tier_index(const std::string& name) const {
        for (std::size_t i = 0; i < tiers.size(); ++i)
            if (tiers[i].name == name) return static_cast<int>(i);
        return -1;
    }
};

EngineParams engine_params(const ExperimentConfig& cfg);

// Deterministic per-drop deployment (independent of scheme and load).
Deployment make_deployment(const ExperimentConfig& cfg, long drop_index);

// Scheme application for one drop; may run a warmup window for the
// channel-state / sensing dependent schemes.
BandPlan build_plan(const ExperimentConfig& cfg, Scheme scheme, DropEngine& engine, double load,
                    long drop_index);

struct DropResult {
    std::uint64_t dep_hash = 0;
    std::vector<double> achievable_bps;  // per tier, mean over that tier's cells
    std::vector<double> delivered_bps;
    std::vector<long> cells;  // per tier
};

DropResult run_drop(const ExperimentConfig& cfg, Scheme scheme, double load, long drop_index);

struct CurvePoint {
    std::string scheme;
    double load = 0.0;
    std::string tier;
    double mean_tput_mbps = 0.0;
    double ci95_lo = 0.0;
    double ci95_hi = 0.0;
    long drops = 0;
};

struct ThroughputCurve {
    std::vector<CurvePoint> points;
};

// Per-(scheme, load, tier) drop-level samples backing a curve; kept for
// paired comparisons under common random numbers.
struct PointSamples {
    std::string scheme;
    double load = 0.0;
    std::string tier;
    std::vector<double> achievable_mbps;  // one entry per contributing drop
    std::vector<double> delivered_mbps;
};

struct ComparisonResult {
    ThroughputCurve curve;
    std::vector<PointSamples> samples;
    std::vector<std::uint64_t> drop_hashes;  // deployment hash per drop

    const PointSamples* find(const std::string& scheme, double load,
                             const std::string& tier) const;
};

// Runs every (scheme, load) pair on shared per-drop deployments. Drops run
// in parallel; aggregation is ordered by drop index so results are
// worker-count invariant.
ComparisonResult compare_schemes(const ExperimentConfig& cfg, const std::vector<Scheme>& schemes,
                                 int workers);

// Load sweep for the configured scheme.
ComparisonResult sweep_load(const ExperimentConfig& cfg, int workers);

// Header-commented CSV / JSON emission. Deterministic content given inputs.
void emit_csv(const ThroughputCurve& curve, const ExperimentConfig& cfg, const std::string& path);
void emit_json(const ThroughputCurve& curve, const ExperimentConfig& cfg, const std::string& path);
ThroughputCurve parse_curve_csv(const std::string& path);

std::string csv_header(const ExperimentConfig& cfg);

int resolve_workers(int requested, int drops);

}  // namespace coexsim
