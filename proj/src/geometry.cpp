#include "coexsim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "coexsim/stats.hpp"

namespace coexsim {

double wrap_distance_sq(const Vec2& a, const Vec2& b, const Region& region) {
    double dx = std::fabs(a.x - b.x);
    double dy = std::fabs(a.y - b.y);
    if (region.boundary == Boundary::torus) {
        if (dx > 0.5 * region.width_m) dx = region.width_m - dx;
        if (dy > 0.5 * region.height_m) dy = region.height_m - dy;
    }
    return dx * dx + dy * dy;
}

double wrap_distance(const Vec2& a, const Vec2& b, const Region& region) {
    return std::sqrt(wrap_distance_sq(a, b, region));
}

std::vector<Vec2> sample_ppp(const TierSpec& tier, const Region& region, Prng& rng) {
    tier.validate();
    if (region.width_m <= 0.0 || region.height_m <= 0.0)
        throw std::invalid_argument("region dimensions must be positive");
    long count = rng.poisson(tier.density_per_m2 * region.area());
    std::vector<Vec2> pts;
    pts.reserve(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i) {
        // Draw x before y so the sequence is position-stable.
        double x = rng.uniform(0.0, region.width_m);
        double y = rng.uniform(0.0, region.height_m);
        pts.push_back({x, y});
    }
    return pts;
}

Deployment sample_deployment(const std::vector<TierSpec>& tiers, const Region& region, Prng& rng) {
    Deployment dep;
    int id = 0;
    for (std::size_t t = 0; t < tiers.size(); ++t) {
        for (const Vec2& p : sample_ppp(tiers[t], region, rng)) {
            dep.nodes.push_back({p, static_cast<int>(t), id});
            ++id;
        }
    }
    return dep;
}

namespace {

// Uniform-bucket grid for nearest-neighbor queries, wrap-aware.
class NodeGrid {
public:
    NodeGrid(const std::vector<Node>& nodes, const std::vector<int>& ids, const Region& region)
        : region_(region) {
        n_ = std::max<std::size_t>(1, ids.size());
        cells_ = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(n_))));
        buckets_.resize(static_cast<std::size_t>(cells_) * cells_);
        for (int id : ids) {
            const Vec2& p = nodes[static_cast<std::size_t>(id)].pos;
            buckets_[bucket_of(p)].push_back(id);
        }
        nodes_ = &nodes;
    }

    // Nearest stored node to p; ties broken by lowest id.
    int nearest(const Vec2& p) const {
        int bx = cell_x(p.x);
        int by = cell_y(p.y);
        int best = -1;
        double best_d2 = std::numeric_limits<double>::infinity();
        double cell_min = std::min(region_.width_m, region_.height_m) / cells_;
        for (int ring = 0; ring <= cells_; ++ring) {
            for (int dy = -ring; dy <= ring; ++dy) {
                for (int dx = -ring; dx <= ring; ++dx) {
                    if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
                    int cx = wrap_idx(bx + dx);
                    int cy = wrap_idx(by + dy);
                    if (cx < 0 || cy < 0) continue;
                    for (int id : buckets_[static_cast<std::size_t>(cy) * cells_ + cx]) {
                        double d2 = wrap_distance_sq(p, (*nodes_)[static_cast<std::size_t>(id)].pos,
                                                     region_);
                        if (d2 < best_d2 || (d2 == best_d2 && id < best)) {
                            best_d2 = d2;
                            best = id;
                        }
                    }
                }
            }
            // Cells in ring r+1 lie at least r*cell_min away, so the current
            // best cannot be displaced once that bound passes it.
            if (best >= 0 && static_cast<double>(ring) * cell_min >= std::sqrt(best_d2)) break;
        }
        return best;
    }

private:
    int cell_x(double x) const {
        int c = static_cast<int>(x / region_.width_m * cells_);
        return std::clamp(c, 0, cells_ - 1);
    }
    int cell_y(double y) const {
        int c = static_cast<int>(y / region_.height_m * cells_);
        return std::clamp(c, 0, cells_ - 1);
    }
    std::size_t bucket_of(const Vec2& p) const {
        return static_cast<std::size_t>(cell_y(p.y)) * cells_ + cell_x(p.x);
    }
    int wrap_idx(int i) const {
        if (region_.boundary == Boundary::torus) {
            int m = i % cells_;
            return m < 0 ? m + cells_ : m;
        }
        return (i < 0 || i >= cells_) ? -1 : i;
    }

    const std::vector<Node>* nodes_ = nullptr;
    Region region_;
    std::size_t n_ = 0;
    int cells_ = 1;
    std::vector<std::vector<int>> buckets_;
};

}  // namespace

int nearest_node_of_tier(const Deployment& dep, int tier, const Vec2& p, const Region& region) {
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (const Node& n : dep.nodes) {
        if (n.tier != tier) continue;
        double d2 = wrap_distance_sq(p, n.pos, region);
        if (d2 < best_d2 || (d2 == best_d2 && n.id < best)) {
            best_d2 = d2;
            best = n.id;
        }
    }
    return best;
}

void place_users(Deployment& dep, int users_per_cell, const Region& region, Prng& rng) {
    if (dep.nodes.empty()) throw std::runtime_error("no serving nodes");
    if (users_per_cell < 0) throw std::invalid_argument("users_per_cell must be >= 0");
    dep.users.clear();
    if (users_per_cell == 0) return;

    int max_tier = 0;
    for (const Node& n : dep.nodes) max_tier = std::max(max_tier, n.tier);

    // Per-tier Voronoi-uniform placement by rejection: uniform points in
    // the region, accepted into the nearest cell until quotas fill.
    std::vector<std::vector<Vec2>> per_node(dep.nodes.size());
    for (int tier = 0; tier <= max_tier; ++tier) {
        std::vector<int> ids = dep.nodes_of_tier(tier);
        if (ids.empty()) continue;
        NodeGrid grid(dep.nodes, ids, region);
        std::size_t remaining = ids.size() * static_cast<std::size_t>(users_per_cell);
        // Expected draws scale with the smallest Voronoi cell; the cap only
        // guards pathological geometries.
        std::size_t attempts_left = 50000 + 4000 * remaining;
        while (remaining > 0 && attempts_left > 0) {
            --attempts_left;
            Vec2 p{rng.uniform(0.0, region.width_m), rng.uniform(0.0, region.height_m)};
            int id = grid.nearest(p);
            auto& list = per_node[static_cast<std::size_t>(id)];
            if (static_cast<int>(list.size()) < users_per_cell) {
                list.push_back(p);
                --remaining;
            }
        }
        if (remaining > 0) {
            // Fallback for cells too small to hit by rejection: sample close
            // to the node, inside half the nearest-neighbor distance, which
            // is always inside the Voronoi cell.
            for (int id : ids) {
                auto& list = per_node[static_cast<std::size_t>(id)];
                const Vec2& c = dep.nodes[static_cast<std::size_t>(id)].pos;
                double nn = std::numeric_limits<double>::infinity();
                for (int other : ids) {
                    if (other == id) continue;
                    nn = std::min(nn, wrap_distance(c, dep.nodes[static_cast<std::size_t>(other)].pos,
                                                    region));
                }
                double r_max = std::isfinite(nn) ? 0.49 * nn : 0.25 * std::min(region.width_m,
                                                                               region.height_m);
                while (static_cast<int>(list.size()) < users_per_cell) {
                    double r = r_max * std::sqrt(rng.uniform());
                    double th = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
                    Vec2 p{c.x + r * std::cos(th), c.y + r * std::sin(th)};
                    if (region.boundary == Boundary::torus) {
                        p.x = std::fmod(p.x + region.width_m, region.width_m);
                        p.y = std::fmod(p.y + region.height_m, region.height_m);
                    } else {
                        p.x = std::clamp(p.x, 0.0, std::nextafter(region.width_m, 0.0));
                        p.y = std::clamp(p.y, 0.0, std::nextafter(region.height_m, 0.0));
                    }
                    list.push_back(p);
                }
            }
        }
    }

    // Canonical order: by node id, then placement order.
    for (const Node& n : dep.nodes) {
        for (const Vec2& p : per_node[static_cast<std::size_t>(n.id)]) {
            dep.users.push_back({p, n.id});
        }
    }
}

std::string deployment_text(const Deployment& dep, const std::vector<TierSpec>& tiers) {
    std::ostringstream os;
    os.precision(17);
    os << "nodes " << dep.nodes.size() << "\n";
    for (const Node& n : dep.nodes) {
        const std::string& tname = (n.tier >= 0 && n.tier < static_cast<int>(tiers.size()))
                                       ? tiers[static_cast<std::size_t>(n.tier)].name
                                       : "?";
        os << "node " << n.id << " " << tname << " " << n.pos.x << " " << n.pos.y << "\n";
    }
    os << "users " << dep.users.size() << "\n";
    for (const User& u : dep.users) {
        os << "user " << u.serving << " " << u.pos.x << " " << u.pos.y << "\n";
    }
    return os.str();
}

std::uint64_t deployment_hash(const Deployment& dep) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const Node& n : dep.nodes) {
        h = fnv1a64_add(h, &n.pos.x, sizeof(double));
        h = fnv1a64_add(h, &n.pos.y, sizeof(double));
        h = fnv1a64_add(h, &n.tier, sizeof(int));
        h = fnv1a64_add(h, &n.id, sizeof(int));
    }
    for (const User& u : dep.users) {
        h = fnv1a64_add(h, &u.pos.x, sizeof(double));
        h = fnv1a64_add(h, &u.pos.y, sizeof(double));
        h = fnv1a64_add(h, &u.serving, sizeof(int));
    }
    return h;
}

}  // namespace coexsim
