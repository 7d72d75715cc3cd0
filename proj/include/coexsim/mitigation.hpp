#pragma once

#include <string>
#include <vector>

#include "coexsim/channel.hpp"
#include "coexsim/geometry.hpp"

namespace coexsim {

enum class Scheme { hfr1, hfr3, sfr, sgc, uncoordinated };

std::string scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

// Per-cell subband allocation. scale[cell][band] is the transmit power
// scale on that band (0 forbids it); order[cell] lists the cell's bands in
// scheduling preference, strongest claim first. Demand-limited usage takes
// a prefix of the order.
struct BandPlan {
    int subbands = 1;
    std::vector<std::vector<double>> scale;
    std::vector<std::vector<int>> order;

    int cells() const { return static_cast<int>(scale.size()); }
    bool allowed(int cell, int band) const {
        return scale[static_cast<std::size_t>(cell)][static_cast<std::size_t>(band)] > 0.0;
    }
    int allowed_count(int cell) const {
        int n = 0;
        for (double s : scale[static_cast<std::size_t>(cell)])
            if (s > 0.0) ++n;
        return n;
    }
};

// Greedy mutual-nearest-neighbor pairing with per-cell priority ranks
// (lower rank value = higher priority). partner[i] is -1 for unpaired.
struct CellPairing {
    std::vector<std::pair<int, int>> pairs;
    std::vector<int> partner;
    std::vector<int> priority;
};

// Hard frequency reuse. Factor 1 grants the full band everywhere; factor 3
// splits the band in three equal groups and colors cells greedily by
// descending mutual interference so strong neighbors differ where possible.
BandPlan assign_hfr(const std::vector<Vec2>& cells, const Region& region, int reuse_factor,
                    int subbands, double alpha);

// Soft frequency reuse: each cell's reuse-3 colored "edge" group keeps full
// power, the remaining bands transmit at `backoff`. Cells whose user lies
// beyond the median serving distance prefer the edge group; the rest prefer
// the centre bands.
BandPlan assign_sfr(const std::vector<Vec2>& cells, const std::vector<double>& user_distance,
                    const Region& region, int subbands, double backoff, double alpha);

// Greedy mutual-nearest-neighbor pairing; leftover odd cell stays unpaired.
// priority_rank[i] orders cells inside each pair (lower = claims first).
CellPairing pair_cells(const std::vector<Vec2>& cells, const Region& region,
                       const std::vector<int>& priority_rank);

struct SgcResult {
    BandPlan plan;
    int clamp_warnings = 0;
};

// Sequential-game coordinated selection: within each pair the higher
// priority cell claims its best `demand` bands by estimated SIR, the
// partner then picks its best bands preferring those not claimed. Unpaired
// cells pick greedily alone. Non-selected bands stay usable at
// `offband_scale` (0 forbids them entirely).
SgcResult sgc_select(const CellPairing& pairing,
                     const std::vector<std::vector<double>>& sir_estimate,
                     const std::vector<int>& demand, int subbands, double offband_scale);

// Band choice from a cell's own per-band sensed powers: maximizes the
// estimated SIR at user distance d (ties to the lowest band index).
int uncoordinated_select(const std::vector<double>& band_power_w, double signal_strength_w,
                         double user_distance_m, double sensor_offset_m, double alpha);

// Full uncoordinated plan: each cell ranks bands by estimated SIR via
// repeated selection and claims the top `demand`; the rest stay usable at
// `offband_scale`.
BandPlan uncoordinated_plan(const std::vector<std::vector<double>>& band_power_w,
                            const std::vector<double>& signal_strength_w,
                            const std::vector<double>& user_distance_m, double sensor_offset_m,
                            double alpha, const std::vector<int>& demand, int subbands,
                            double offband_scale);

// Greedy coloring used by HFR3/SFR: processes cells by descending total
// interference weight and picks the color minimizing weighted conflicts.
std::vector<int> color_cells_reuse3(const std::vector<Vec2>& cells, const Region& region,
                                    double alpha);

}  // namespace coexsim
