#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "coexsim/rng.hpp"

namespace coexsim {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

enum class Boundary { torus, guard };

// Simulation window. Torus mode eliminates edge effects by wrapping
// distances (minimum image); guard mode keeps plain Euclidean distances.
struct Region {
    double width_m = 1000.0;
    double height_m = 1000.0;
    Boundary boundary = Boundary::torus;

    double area() const { return width_m * height_m; }
    bool contains(const Vec2& p) const {
        return p.x >= 0.0 && p.x < width_m && p.y >= 0.0 && p.y < height_m;
    }
};

enum class Protocol { lte_scheduled, wifi_contention };

// One class of co-deployed transmitters sharing density, power and carrier.
struct TierSpec {
    std::string name;
    double density_per_m2 = 0.0;
    double tx_power_w = 1.0;
    double carrier_hz = 2.4e9;
    double peak_rate_bps = 65e6;
    Protocol protocol = Protocol::wifi_contention;
    // Number of contiguous subbands a transmitter of this tier occupies;
    // 0 means the full band.
    int subband_span = 0;

    void validate() const {
        if (density_per_m2 < 0.0) throw std::invalid_argument("tier density must be >= 0");
        if (tx_power_w <= 0.0) throw std::invalid_argument("tier tx_power must be > 0");
        if (peak_rate_bps <= 0.0) throw std::invalid_argument("tier peak_rate must be > 0");
    }
};

struct Node {
    Vec2 pos;
    int tier = 0;
    int id = 0;
};

struct User {
    Vec2 pos;
    int serving = -1;  // node id
};

// One Monte Carlo drop's sampled transmitters and their served users.
struct Deployment {
    std::vector<Node> nodes;
    std::vector<User> users;

    std::vector<int> nodes_of_tier(int tier) const {
        std::vector<int> out;
        for (const Node& n : nodes)
            if (n.tier == tier) out.push_back(n.id);
        return out;
    }
};

// Wrap-aware distance. Torus mode returns the minimum-image distance.
double wrap_distance(const Vec2& a, const Vec2& b, const Region& region);
double wrap_distance_sq(const Vec2& a, const Vec2& b, const Region& region);

// Homogeneous PPP sample: Poisson count with mean density*area, positions
// i.i.d. uniform. Zero density yields an empty list.
std::vector<Vec2> sample_ppp(const TierSpec& tier, const Region& region, Prng& rng);

// Samples all tiers and assigns stable node ids (tier-major order).
Deployment sample_deployment(const std::vector<TierSpec>& tiers, const Region& region, Prng& rng);

// Places users_per_cell users uniformly in each node's same-tier Voronoi
// cell (wrap-aware in torus mode). Throws if the deployment has no nodes.
void place_users(Deployment& dep, int users_per_cell, const Region& region, Prng& rng);

// Index of the nearest node of the given tier (wrap-aware); ties broken by
// lowest node id. Returns -1 if the tier is empty.
int nearest_node_of_tier(const Deployment& dep, int tier, const Vec2& p, const Region& region);

// Structured-text snapshot for debugging: one line per node and per user.
std::string deployment_text(const Deployment& dep, const std::vector<TierSpec>& tiers);

// Fingerprint over node/user bytes; used for common-random-number checks.
std::uint64_t deployment_hash(const Deployment& dep);

}  // namespace coexsim
