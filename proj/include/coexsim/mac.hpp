#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "coexsim/channel.hpp"
#include "coexsim/geometry.hpp"
#include "coexsim/mitigation.hpp"
#include "coexsim/rng.hpp"

namespace coexsim {

// Per-frame random blanking mask: each subframe is independently blanked
// with probability `rate`; a fresh mask is drawn per frame.
struct AbsPattern {
    int frame_length = 10;
    std::vector<char> blanked;
    double rate = 0.0;
};

AbsPattern build_abs_pattern(double rate, int frame_length, Prng& rng);

struct TrafficLoad {
    double value = 0.0;
    explicit TrafficLoad(double v) : value(v) {
        if (v < 0.0 || v > 1.0) throw std::invalid_argument("load must be in [0,1]");
    }
};

struct ContentionParams {
    double cs_threshold_w = 6.30957344480193e-12;  // -82 dBm
    int max_backoff = 1;

    void validate() const {
        if (cs_threshold_w <= 0.0) throw std::invalid_argument("cs_threshold must be > 0");
        if (max_backoff < 1) throw std::invalid_argument("max_backoff must be >= 1");
    }
};

struct BackoffState {
    int counter = 1;
};

enum class WifiDecision { transmit, defer };

// One carrier-sense contention step: deferral freezes the counter; a clear
// channel decrements it, and the station transmits when it reaches zero,
// then redraws uniformly in [1, max_backoff].
template <class Redraw>
inline bool contention_step(double sensed_w, double cs_threshold_w, int& counter, Redraw redraw) {
    if (sensed_w >= cs_threshold_w) return false;
    if (--counter <= 0) {
        counter = redraw();
        return true;
    }
    return false;
}

WifiDecision wifi_contend(double sensed_power_w, const ContentionParams& params,
                          BackoffState& state, Prng& rng);

// Whether an LTE cell transmits in a subframe: never on a blanked subframe,
// otherwise Bernoulli(load).
bool lte_active(const AbsPattern& pattern, int subframe, const TrafficLoad& load, Prng& rng);

struct EngineParams {
    Region region;
    std::vector<TierSpec> tiers;
    PathlossModel pathloss;
    double bandwidth_hz = 20e6;
    double attenuation = 0.75;
    double sir_floor = 0.1;
    int subbands = 1;
    int frame_length = 10;
    double subframe_s = 1e-3;
    double abs_rate = 0.0;
    ContentionParams contention;
    int users_per_cell = 1;
    double sensor_offset_m = 50.0;
};

struct NodeStats {
    double delivered_bits = 0.0;
    double achievable_bits = 0.0;
    long tx_subframes = 0;
    long traffic_subframes = 0;  // subframes with data queued (blanked or not)
    long blanked_subframes = 0;
    long deferred_subframes = 0;
    long total_subframes = 0;
    double idle_peak_bps = 0.0;  // zero-interference rate over the allowed bands
};

struct WarmupStats {
    // Mean interference power per (user, band) and mean sensed power per
    // (scheduled cell, band) over the warmup window.
    std::vector<double> user_interference_w;  // [user*subbands + band]
    std::vector<double> sensor_power_w;       // [cell_local*subbands + band]
};

// Subframe-granular simulator for one Monte Carlo drop. Resolves scheduled
// LTE activity (with random ABS blanking), then Wi-Fi carrier-sense
// contention against the committed transmitter set, then per-user SIR and
// rate. Tracks delivered throughput (bits actually sent over total time)
// and the achievable-rate numerator behind the "maximum achievable
// throughput" curves: for scheduled cells the full-buffer rate in the
// subframes they transmit (carrier sensing around an active cell is then
// part of the measured state), for contention nodes the rate in subframes
// the (counterfactually saturated) station could seize.
class DropEngine {
public:
    DropEngine(const EngineParams& params, const Deployment& dep, std::uint64_t drop_seed);

    int scheduled_count() const { return static_cast<int>(sched_nodes_.size()); }
    const std::vector<int>& scheduled_node_ids() const { return sched_nodes_; }
    const std::vector<Vec2>& scheduled_positions() const { return sched_pos_; }

    // Serving distance of each scheduled cell's first user.
    std::vector<double> scheduled_user_distance() const;
    // Full-power per-band received signal at each scheduled cell's first user.
    std::vector<double> scheduled_user_signal_w() const;
    // Global user index of a scheduled cell's first user (-1 if none).
    int first_user_of_scheduled(int local) const {
        int node = sched_nodes_[static_cast<std::size_t>(local)];
        if (user_count_[static_cast<std::size_t>(node)] == 0) return -1;
        return user_first_[static_cast<std::size_t>(node)];
    }

    BandPlan neutral_plan(bool shuffled_order = true) const;

    WarmupStats warmup(double load, int frames, const BandPlan& plan);

    std::vector<NodeStats> simulate(double load, const BandPlan& plan, int frames,
                                    std::ostream* trace = nullptr);

    double subframe_seconds() const { return params_.subframe_s; }
    const EngineParams& params() const { return params_; }

private:
    struct SubframeScratch;
    void run(double load, const BandPlan& plan, int frames, std::vector<NodeStats>* stats,
             WarmupStats* warm, std::ostream* trace);
    void commit(int node, const std::vector<double>& watts_per_band, SubframeScratch& sc,
                bool with_sensors);

    EngineParams params_;
    const Deployment* dep_ = nullptr;
    std::uint64_t seed_ = 0;

    int n_nodes_ = 0;
    int n_users_ = 0;
    int subbands_ = 1;
    double band_width_hz_ = 0.0;

    std::vector<int> sched_nodes_;   // node ids with lte_scheduled protocol
    std::vector<int> sched_local_;   // node id -> local scheduled index or -1
    std::vector<Vec2> sched_pos_;
    std::vector<int> wifi_nodes_;
    std::vector<int> span_start_;    // per node (wifi occupancy window)
    std::vector<int> span_len_;
    std::vector<double> band_psd_w_; // per node reference per-band power
    std::vector<RateMap> band_map_;  // per node single-subband rate map

    std::vector<double> g_user_;    // [tx * n_users + user]
    std::vector<double> g_node_;    // [tx * n_nodes + rx]
    std::vector<double> g_sensor_;  // [tx * n_sched + cell_local]
    std::vector<int> user_first_;   // first user index per node
    std::vector<int> user_count_;   // users per node
    std::vector<std::vector<int>> users_on_band_;
    std::vector<std::vector<int>> wifi_on_band_;
};

}  // namespace coexsim
