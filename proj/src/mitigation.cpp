#include "coexsim/mitigation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "coexsim/inference.hpp"

namespace coexsim {

std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::hfr1: return "hfr1";
        case Scheme::hfr3: return "hfr3";
        case Scheme::sfr: return "sfr";
        case Scheme::sgc: return "sgc";
        case Scheme::uncoordinated: return "uncoordinated";
    }
    return "?";
}

Scheme scheme_from_name(const std::string& name) {
    if (name == "hfr1") return Scheme::hfr1;
    if (name == "hfr3") return Scheme::hfr3;
    if (name == "sfr") return Scheme::sfr;
    if (name == "sgc") return Scheme::sgc;
    if (name == "uncoordinated") return Scheme::uncoordinated;
    throw std::invalid_argument("unknown scheme: " + name);
}

namespace {

BandPlan make_plan(int cells, int subbands) {
    BandPlan plan;
    plan.subbands = subbands;
    plan.scale.assign(static_cast<std::size_t>(cells),
                      std::vector<double>(static_cast<std::size_t>(subbands), 0.0));
    plan.order.assign(static_cast<std::size_t>(cells), {});
    return plan;
}

std::vector<int> band_groups(int subbands) {
    // Group id per band for a 3-way split; subband counts divisible by 3
    // split evenly, otherwise the tail bands join the last group.
    std::vector<int> group(static_cast<std::size_t>(subbands));
    int per = std::max(1, subbands / 3);
    for (int b = 0; b < subbands; ++b) group[static_cast<std::size_t>(b)] = std::min(b / per, 2);
    return group;
}

}  // namespace

std::vector<int> color_cells_reuse3(const std::vector<Vec2>& cells, const Region& region,
                                    double alpha) {
    const int n = static_cast<int>(cells.size());
    std::vector<std::vector<double>> w(static_cast<std::size_t>(n),
                                       std::vector<double>(static_cast<std::size_t>(n), 0.0));
    std::vector<double> degree(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double d = std::max(1.0, wrap_distance(cells[static_cast<std::size_t>(i)],
                                                   cells[static_cast<std::size_t>(j)], region));
            double wij = std::pow(d, -alpha);
            w[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = wij;
            w[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = wij;
            degree[static_cast<std::size_t>(i)] += wij;
            degree[static_cast<std::size_t>(j)] += wij;
        }
    }
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return degree[static_cast<std::size_t>(a)] > degree[static_cast<std::size_t>(b)];
    });
    std::vector<int> color(static_cast<std::size_t>(n), -1);
    for (int i : idx) {
        double best_cost = std::numeric_limits<double>::infinity();
        int best_c = 0;
        for (int c = 0; c < 3; ++c) {
            double cost = 0.0;
            for (int j = 0; j < n; ++j) {
                if (color[static_cast<std::size_t>(j)] == c)
                    cost += w[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            }
            if (cost < best_cost) {
                best_cost = cost;
                best_c = c;
            }
        }
        color[static_cast<std::size_t>(i)] = best_c;
    }
    return color;
}

BandPlan assign_hfr(const std::vector<Vec2>& cells, const Region& region, int reuse_factor,
                    int subbands, double alpha) {
    if (reuse_factor != 1 && reuse_factor != 3)
        throw std::invalid_argument("reuse factor must be 1 or 3");
    const int n = static_cast<int>(cells.size());
    BandPlan plan = make_plan(n, subbands);
    if (reuse_factor == 1) {
        for (int i = 0; i < n; ++i) {
            for (int b = 0; b < subbands; ++b) {
                plan.scale[static_cast<std::size_t>(i)][static_cast<std::size_t>(b)] = 1.0;
                plan.order[static_cast<std::size_t>(i)].push_back(b);
            }
        }
        return plan;
    }
    if (subbands < 3) throw std::invalid_argument("reuse 3 needs at least 3 subbands");
    std::vector<int> color = color_cells_reuse3(cells, region, alpha);
    std::vector<int> group = band_groups(subbands);
    for (int i = 0; i < n; ++i) {
        for (int b = 0; b < subbands; ++b) {
            if (group[static_cast<std::size_t>(b)] == color[static_cast<std::size_t>(i)]) {
                plan.scale[static_cast<std::size_t>(i)][static_cast<std::size_t>(b)] = 1.0;
                plan.order[static_cast<std::size_t>(i)].push_back(b);
            }
        }
    }
    return plan;
}

BandPlan assign_sfr(const std::vector<Vec2>& cells, const std::vector<double>& user_distance,
                    const Region& region, int subbands, double backoff, double alpha) {
    if (backoff <= 0.0 || backoff > 1.0) throw std::invalid_argument("backoff must be in (0,1]");
    if (subbands < 3) throw std::invalid_argument("sfr needs at least 3 subbands");
    const int n = static_cast<int>(cells.size());
    if (static_cast<int>(user_distance.size()) != n)
        throw std::invalid_argument("user_distance size mismatch");
    std::vector<int> color = color_cells_reuse3(cells, region, alpha);
    std::vector<int> group = band_groups(subbands);

    // Median serving distance splits edge users from centre users.
    std::vector<double> sorted = user_distance;
    std::sort(sorted.begin(), sorted.end());
    double median = sorted.empty() ? 0.0 : sorted[sorted.size() / 2];

    BandPlan plan = make_plan(n, subbands);
    for (int i = 0; i < n; ++i) {
        bool edge_user = user_distance[static_cast<std::size_t>(i)] >= median && n > 1;
        // The dominant neighbor's edge group carries its full power; static
        // planning schedules around it for as long as possible.
        int hostile = -1;
        if (n > 1) {
            double best = std::numeric_limits<double>::infinity();
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                double d = wrap_distance_sq(cells[static_cast<std::size_t>(i)],
                                            cells[static_cast<std::size_t>(j)], region);
                if (d < best) {
                    best = d;
                    hostile = color[static_cast<std::size_t>(j)];
                }
            }
            if (hostile == color[static_cast<std::size_t>(i)]) hostile = -1;
        }
        std::vector<int> own, neutral, avoid;
        for (int b = 0; b < subbands; ++b) {
            int g = group[static_cast<std::size_t>(b)];
            bool is_edge = g == color[static_cast<std::size_t>(i)];
            plan.scale[static_cast<std::size_t>(i)][static_cast<std::size_t>(b)] =
                is_edge ? 1.0 : backoff;
            if (is_edge) own.push_back(b);
            else if (g == hostile) avoid.push_back(b);
            else neutral.push_back(b);
        }
        // Edge users sit on the full-power edge group; centre users start on
        // the neutral backed-off group. Both spill onto the dominant
        // neighbor's full-power group last.
        auto& order = plan.order[static_cast<std::size_t>(i)];
        if (edge_user) {
            order.insert(order.end(), own.begin(), own.end());
            order.insert(order.end(), neutral.begin(), neutral.end());
        } else {
            order.insert(order.end(), neutral.begin(), neutral.end());
            order.insert(order.end(), own.begin(), own.end());
        }
        order.insert(order.end(), avoid.begin(), avoid.end());
    }
    return plan;
}

CellPairing pair_cells(const std::vector<Vec2>& cells, const Region& region,
                       const std::vector<int>& priority_rank) {
    const int n = static_cast<int>(cells.size());
    CellPairing out;
    out.partner.assign(static_cast<std::size_t>(n), -1);
    out.priority = priority_rank;
    if (out.priority.empty()) {
        out.priority.assign(static_cast<std::size_t>(n), 0);
        std::iota(out.priority.begin(), out.priority.end(), 0);
    }
    if (n < 2) return out;

    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    int remaining = n;
    while (remaining >= 2) {
        // Nearest free neighbor of each free cell.
        std::vector<int> nn(static_cast<std::size_t>(n), -1);
        for (int i = 0; i < n; ++i) {
            if (taken[static_cast<std::size_t>(i)]) continue;
            double best = std::numeric_limits<double>::infinity();
            for (int j = 0; j < n; ++j) {
                if (j == i || taken[static_cast<std::size_t>(j)]) continue;
                double d = wrap_distance_sq(cells[static_cast<std::size_t>(i)],
                                            cells[static_cast<std::size_t>(j)], region);
                if (d < best) {
                    best = d;
                    nn[static_cast<std::size_t>(i)] = j;
                }
            }
        }
        bool any = false;
        for (int i = 0; i < n; ++i) {
            if (taken[static_cast<std::size_t>(i)]) continue;
            int j = nn[static_cast<std::size_t>(i)];
            if (j > i && nn[static_cast<std::size_t>(j)] == i) {
                out.pairs.emplace_back(i, j);
                out.partner[static_cast<std::size_t>(i)] = j;
                out.partner[static_cast<std::size_t>(j)] = i;
                taken[static_cast<std::size_t>(i)] = true;
                taken[static_cast<std::size_t>(j)] = true;
                remaining -= 2;
                any = true;
            }
        }
        if (!any) {
            // No mutual pair among the leftovers: force the closest pair.
            double best = std::numeric_limits<double>::infinity();
            int bi = -1, bj = -1;
            for (int i = 0; i < n; ++i) {
                if (taken[static_cast<std::size_t>(i)]) continue;
                for (int j = i + 1; j < n; ++j) {
                    if (taken[static_cast<std::size_t>(j)]) continue;
                    double d = wrap_distance_sq(cells[static_cast<std::size_t>(i)],
                                                cells[static_cast<std::size_t>(j)], region);
                    if (d < best) {
                        best = d;
                        bi = i;
                        bj = j;
                    }
                }
            }
            if (bi < 0) break;
            out.pairs.emplace_back(bi, bj);
            out.partner[static_cast<std::size_t>(bi)] = bj;
            out.partner[static_cast<std::size_t>(bj)] = bi;
            taken[static_cast<std::size_t>(bi)] = true;
            taken[static_cast<std::size_t>(bj)] = true;
            remaining -= 2;
        }
    }
    return out;
}

namespace {

// Bands ranked by (prefer unclaimed, then SIR estimate desc, then index).
std::vector<int> ranked_bands(const std::vector<double>& sir_est, const std::vector<bool>* avoid) {
    std::vector<int> bands(sir_est.size());
    std::iota(bands.begin(), bands.end(), 0);
    std::stable_sort(bands.begin(), bands.end(), [&](int a, int b) {
        if (avoid) {
            bool ca = (*avoid)[static_cast<std::size_t>(a)];
            bool cb = (*avoid)[static_cast<std::size_t>(b)];
            if (ca != cb) return !ca;
        }
        double sa = sir_est[static_cast<std::size_t>(a)];
        double sb = sir_est[static_cast<std::size_t>(b)];
        if (sa != sb) return sa > sb;
        return a < b;
    });
    return bands;
}

void apply_selection(BandPlan& plan, int cell, const std::vector<int>& selection,
                     const std::vector<int>& rest, double offband_scale) {
    auto& order = plan.order[static_cast<std::size_t>(cell)];
    order = selection;
    for (int b : selection)
        plan.scale[static_cast<std::size_t>(cell)][static_cast<std::size_t>(b)] = 1.0;
    for (int b : rest) {
        plan.scale[static_cast<std::size_t>(cell)][static_cast<std::size_t>(b)] = offband_scale;
        if (offband_scale > 0.0) order.push_back(b);
    }
}

}  // namespace

SgcResult sgc_select(const CellPairing& pairing,
                     const std::vector<std::vector<double>>& sir_estimate,
                     const std::vector<int>& demand, int subbands, double offband_scale) {
    const int n = static_cast<int>(sir_estimate.size());
    SgcResult res;
    res.plan = make_plan(n, subbands);
    std::vector<bool> done(static_cast<std::size_t>(n), false);

    auto clamp_demand = [&](int cell) {
        int d = demand[static_cast<std::size_t>(cell)];
        if (d > subbands) {
            ++res.clamp_warnings;
            d = subbands;
        }
        return std::max(1, d);
    };

    auto select_for = [&](int cell, const std::vector<bool>* avoid) {
        std::vector<int> ranked = ranked_bands(sir_estimate[static_cast<std::size_t>(cell)], avoid);
        int d = clamp_demand(cell);
        std::vector<int> sel(ranked.begin(), ranked.begin() + d);
        std::vector<int> rest(ranked.begin() + d, ranked.end());
        apply_selection(res.plan, cell, sel, rest, offband_scale);
        done[static_cast<std::size_t>(cell)] = true;
        return sel;
    };

    for (const auto& [a, b] : pairing.pairs) {
        int first = a, second = b;
        if (pairing.priority[static_cast<std::size_t>(b)] <
            pairing.priority[static_cast<std::size_t>(a)]) {
            std::swap(first, second);
        }
        std::vector<int> claimed = select_for(first, nullptr);
        std::vector<bool> avoid(static_cast<std::size_t>(subbands), false);
        for (int band : claimed) avoid[static_cast<std::size_t>(band)] = true;
        select_for(second, &avoid);
    }
    for (int i = 0; i < n; ++i) {
        if (!done[static_cast<std::size_t>(i)]) select_for(i, nullptr);
    }
    return res;
}

int uncoordinated_select(const std::vector<double>& band_power_w, double signal_strength_w,
                         double user_distance_m, double sensor_offset_m, double alpha) {
    if (band_power_w.empty()) throw std::invalid_argument("no bands to select");
    int best = 0;
    double best_sir = -1.0;
    for (int b = 0; b < static_cast<int>(band_power_w.size()); ++b) {
        SensorReading reading{b, band_power_w[static_cast<std::size_t>(b)], sensor_offset_m};
        double s = estimate_sir(reading, signal_strength_w, user_distance_m, alpha);
        if (is_interference_free(s)) s = std::numeric_limits<double>::max();
        if (s > best_sir) {
            best_sir = s;
            best = b;
        }
    }
    return best;
}

BandPlan uncoordinated_plan(const std::vector<std::vector<double>>& band_power_w,
                            const std::vector<double>& signal_strength_w,
                            const std::vector<double>& user_distance_m, double sensor_offset_m,
                            double alpha, const std::vector<int>& demand, int subbands,
                            double offband_scale) {
    const int n = static_cast<int>(band_power_w.size());
    BandPlan plan = make_plan(n, subbands);
    for (int i = 0; i < n; ++i) {
        // Rank bands by repeated selection over the not-yet-chosen set.
        std::vector<double> powers = band_power_w[static_cast<std::size_t>(i)];
        std::vector<int> remaining(static_cast<std::size_t>(subbands));
        std::iota(remaining.begin(), remaining.end(), 0);
        std::vector<int> ranked;
        while (!remaining.empty()) {
            std::vector<double> sub(remaining.size());
            for (std::size_t k = 0; k < remaining.size(); ++k)
                sub[k] = powers[static_cast<std::size_t>(remaining[k])];
            int pick = uncoordinated_select(sub, signal_strength_w[static_cast<std::size_t>(i)],
                                            user_distance_m[static_cast<std::size_t>(i)],
                                            sensor_offset_m, alpha);
            ranked.push_back(remaining[static_cast<std::size_t>(pick)]);
            remaining.erase(remaining.begin() + pick);
        }
        int d = std::max(1, std::min(demand[static_cast<std::size_t>(i)], subbands));
        std::vector<int> sel(ranked.begin(), ranked.begin() + d);
        std::vector<int> rest(ranked.begin() + d, ranked.end());
        apply_selection(plan, i, sel, rest, offband_scale);
    }
    return plan;
}

}  // namespace coexsim
