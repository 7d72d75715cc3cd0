#include "coexsim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "coexsim/stats.hpp"

namespace coexsim {

EngineParams engine_params(const ExperimentConfig& cfg) {
    EngineParams p;
    p.region = cfg.region;
    p.tiers = cfg.tiers;
    p.pathloss = cfg.pathloss;
    p.bandwidth_hz = cfg.bandwidth_hz;
    p.attenuation = cfg.attenuation;
    p.sir_floor = std::pow(10.0, cfg.sir_floor_db / 10.0);
    p.subbands = cfg.subbands;
    p.frame_length = cfg.frame_length;
    p.abs_rate = cfg.abs_rate;
    p.contention = cfg.contention;
    p.users_per_cell = cfg.users_per_cell;
    p.sensor_offset_m = cfg.sensor_offset_m;
    return p;
}

Deployment make_deployment(const ExperimentConfig& cfg, long drop_index) {
    Prng rng(mix({drop_seed(cfg.seed, drop_index), kSaltDeploy}));
    Deployment dep = sample_deployment(cfg.tiers, cfg.region, rng);
    if (!dep.nodes.empty()) place_users(dep, cfg.users_per_cell, cfg.region, rng);
    return dep;
}

namespace {

void shuffle_segment(std::vector<int>& order, std::size_t lo, std::size_t hi, std::uint64_t key) {
    if (hi <= lo) return;
    for (std::size_t k = hi - lo; k > 1; --k) {
        std::uint64_t draw = mix({key, static_cast<std::uint64_t>(k)});
        std::size_t j = splitmix64(draw) % k;
        std::swap(order[lo + k - 1], order[lo + j]);
    }
}

std::vector<int> priority_ranks(const ExperimentConfig& cfg, int n_cells, double load,
                                long drop_index) {
    std::vector<int> rank(static_cast<std::size_t>(n_cells));
    std::iota(rank.begin(), rank.end(), 0);
    std::uint64_t base = mix({drop_seed(cfg.seed, drop_index), kSaltPriority});
    switch (cfg.priority) {
        case PriorityPolicy::random: {
            std::vector<int> perm(rank);
            for (std::size_t k = perm.size(); k > 1; --k) {
                std::size_t j = splitmix64(mix({base, static_cast<std::uint64_t>(k)})) % k;
                std::swap(perm[k - 1], perm[j]);
            }
            for (std::size_t i = 0; i < perm.size(); ++i)
                rank[static_cast<std::size_t>(perm[i])] = static_cast<int>(i);
            break;
        }
        case PriorityPolicy::traffic: {
            // Higher drawn traffic weight claims first.
            std::vector<double> w(static_cast<std::size_t>(n_cells));
            for (int i = 0; i < n_cells; ++i)
                w[static_cast<std::size_t>(i)] =
                    load * hash_u01(mix({base, 0x77, static_cast<std::uint64_t>(i)}));
            std::vector<int> idx(rank);
            std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
                return w[static_cast<std::size_t>(a)] > w[static_cast<std::size_t>(b)];
            });
            for (std::size_t i = 0; i < idx.size(); ++i)
                rank[static_cast<std::size_t>(idx[i])] = static_cast<int>(i);
            break;
        }
        case PriorityPolicy::qos:
            // Static id order stands in for a provisioned QoS ranking.
            break;
    }
    return rank;
}

}  // namespace

BandPlan build_plan(const ExperimentConfig& cfg, Scheme scheme, DropEngine& engine, double load,
                    long drop_index) {
    const int n = engine.scheduled_count();
    const double alpha = cfg.pathloss.alpha();
    std::uint64_t dseed = drop_seed(cfg.seed, drop_index);
    if (n == 0) {
        BandPlan empty;
        empty.subbands = cfg.subbands;
        return empty;
    }

    auto demand_of = [&](double l) {
        int d = static_cast<int>(std::ceil(l * cfg.subbands));
        return std::max(1, std::min(d, cfg.subbands));
    };

    switch (scheme) {
        case Scheme::hfr1:
        case Scheme::hfr3: {
            int reuse = scheme == Scheme::hfr1 ? 1 : 3;
            BandPlan plan =
                assign_hfr(engine.scheduled_positions(), cfg.region, reuse, cfg.subbands, alpha);
            for (int c = 0; c < n; ++c) {
                shuffle_segment(plan.order[static_cast<std::size_t>(c)], 0,
                                plan.order[static_cast<std::size_t>(c)].size(),
                                mix({dseed, kSaltUsage, static_cast<std::uint64_t>(c)}));
            }
            return plan;
        }
        case Scheme::sfr: {
            BandPlan plan =
                assign_sfr(engine.scheduled_positions(), engine.scheduled_user_distance(),
                           cfg.region, cfg.subbands, cfg.sfr_backoff, alpha);
            // Group precedence is part of the scheme; shuffle only inside
            // each reuse-3 group block.
            std::size_t block = static_cast<std::size_t>(std::max(1, cfg.subbands / 3));
            for (int c = 0; c < n; ++c) {
                auto& order = plan.order[static_cast<std::size_t>(c)];
                for (std::size_t lo = 0; lo < order.size(); lo += block) {
                    shuffle_segment(order, lo, std::min(lo + block, order.size()),
                                    mix({dseed, kSaltUsage, static_cast<std::uint64_t>(lo),
                                         static_cast<std::uint64_t>(c)}));
                }
            }
            return plan;
        }
        case Scheme::sgc: {
            std::vector<int> rank = priority_ranks(cfg, n, load, drop_index);
            CellPairing pairing = pair_cells(engine.scheduled_positions(), cfg.region, rank);
            WarmupStats warm = engine.warmup(load, cfg.warmup_frames, engine.neutral_plan());
            std::vector<double> signal = engine.scheduled_user_signal_w();
            std::vector<std::vector<double>> sir_est(
                static_cast<std::size_t>(n),
                std::vector<double>(static_cast<std::size_t>(cfg.subbands), 0.0));
            for (int c = 0; c < n; ++c) {
                int u = engine.first_user_of_scheduled(c);
                for (int b = 0; b < cfg.subbands; ++b) {
                    double intf =
                        u < 0 ? 0.0
                              : warm.user_interference_w[static_cast<std::size_t>(u) *
                                                             static_cast<std::size_t>(cfg.subbands) +
                                                         static_cast<std::size_t>(b)];
                    // Bands silent during the window tie at the top; a
                    // per-cell jitter keeps cells from claiming in lockstep.
                    double jitter = hash_u01(mix({dseed, kSaltUsage, 0x5917,
                                                  static_cast<std::uint64_t>(c),
                                                  static_cast<std::uint64_t>(b)}));
                    sir_est[static_cast<std::size_t>(c)][static_cast<std::size_t>(b)] =
                        intf > 0.0 ? signal[static_cast<std::size_t>(c)] / intf
                                   : 1e290 * (1.0 + jitter);
                }
            }
            std::vector<int> demand(static_cast<std::size_t>(n), demand_of(load));
            return sgc_select(pairing, sir_est, demand, cfg.subbands, cfg.offband_scale).plan;
        }
        case Scheme::uncoordinated: {
            WarmupStats warm = engine.warmup(load, cfg.warmup_frames, engine.neutral_plan());
            std::vector<std::vector<double>> readings(
                static_cast<std::size_t>(n),
                std::vector<double>(static_cast<std::size_t>(cfg.subbands), 0.0));
            for (int c = 0; c < n; ++c)
                for (int b = 0; b < cfg.subbands; ++b)
                    readings[static_cast<std::size_t>(c)][static_cast<std::size_t>(b)] =
                        warm.sensor_power_w[static_cast<std::size_t>(c) *
                                                static_cast<std::size_t>(cfg.subbands) +
                                            static_cast<std::size_t>(b)];
            std::vector<double> signal = engine.scheduled_user_signal_w();
            std::vector<double> dist = engine.scheduled_user_distance();
            for (double& d : dist) d = std::max(d, cfg.pathloss.min_distance_m);
            for (double& s : signal) s = std::max(s, 1e-300);
            std::vector<int> demand(static_cast<std::size_t>(n), demand_of(load));
            return uncoordinated_plan(readings, signal, dist, cfg.sensor_offset_m, alpha, demand,
                                      cfg.subbands, cfg.offband_scale);
        }
    }
    throw std::logic_error("unhandled scheme");
}

namespace {

struct TierSums {
    std::vector<double> achievable;  // per tier, summed over cells
    std::vector<double> delivered;
    std::vector<long> cells;
};

// Per-cell achievable throughput: scheduled cells report the full-buffer
// rate over the subframes they transmitted, against the subframes they had
// traffic for (blanked ones count, making the ABS cost visible); with no
// traffic at all the zero-interference limit applies. Contention nodes
// report the saturated-station throughput over total time.
double achievable_bps(const NodeStats& ns, const TierSpec& tier, double abs_rate,
                      double subframe_s) {
    if (tier.protocol == Protocol::lte_scheduled) {
        if (ns.traffic_subframes == 0) return (1.0 - abs_rate) * ns.idle_peak_bps;
        return ns.achievable_bits / (static_cast<double>(ns.traffic_subframes) * subframe_s);
    }
    if (ns.total_subframes == 0) return 0.0;
    return ns.achievable_bits / (static_cast<double>(ns.total_subframes) * subframe_s);
}

TierSums summarize(const ExperimentConfig& cfg, const Deployment& dep,
                   const std::vector<NodeStats>& stats, double sim_seconds, double subframe_s) {
    TierSums sums;
    sums.achievable.assign(cfg.tiers.size(), 0.0);
    sums.delivered.assign(cfg.tiers.size(), 0.0);
    sums.cells.assign(cfg.tiers.size(), 0);
    for (const Node& n : dep.nodes) {
        const NodeStats& ns = stats[static_cast<std::size_t>(n.id)];
        std::size_t t = static_cast<std::size_t>(n.tier);
        sums.achievable[t] += achievable_bps(ns, cfg.tiers[t], cfg.abs_rate, subframe_s);
        sums.delivered[t] += ns.delivered_bits / sim_seconds;
        sums.cells[t] += 1;
    }
    return sums;
}

}  // namespace

DropResult run_drop(const ExperimentConfig& cfg, Scheme scheme, double load, long drop_index) {
    Deployment dep = make_deployment(cfg, drop_index);
    DropResult res;
    res.dep_hash = deployment_hash(dep);
    res.achievable_bps.assign(cfg.tiers.size(), 0.0);
    res.delivered_bps.assign(cfg.tiers.size(), 0.0);
    res.cells.assign(cfg.tiers.size(), 0);
    if (dep.nodes.empty()) return res;

    DropEngine engine(engine_params(cfg), dep, drop_seed(cfg.seed, drop_index));
    BandPlan plan = build_plan(cfg, scheme, engine, load, drop_index);
    std::vector<NodeStats> stats = engine.simulate(load, plan, cfg.frames_per_drop);
    double sim_seconds =
        cfg.frames_per_drop * cfg.frame_length * engine.subframe_seconds();
    TierSums sums = summarize(cfg, dep, stats, sim_seconds, engine.subframe_seconds());
    for (std::size_t t = 0; t < cfg.tiers.size(); ++t) {
        res.cells[t] = sums.cells[t];
        if (sums.cells[t] > 0) {
            res.achievable_bps[t] = sums.achievable[t] / static_cast<double>(sums.cells[t]);
            res.delivered_bps[t] = sums.delivered[t] / static_cast<double>(sums.cells[t]);
        }
    }
    return res;
}

const PointSamples* ComparisonResult::find(const std::string& scheme, double load,
                                           const std::string& tier) const {
    for (const PointSamples& s : samples) {
        if (s.scheme == scheme && s.tier == tier && std::fabs(s.load - load) < 1e-12) return &s;
    }
    return nullptr;
}

int resolve_workers(int requested, int drops) {
    int w = requested;
    if (w <= 0) {
        if (const char* env = std::getenv("COEXSIM_WORKERS")) w = std::atoi(env);
    }
    if (w <= 0) w = static_cast<int>(std::thread::hardware_concurrency());
    if (w <= 0) w = 1;
    return std::max(1, std::min(w, drops));
}

ComparisonResult compare_schemes(const ExperimentConfig& cfg, const std::vector<Scheme>& schemes,
                                 int workers) {
    if (schemes.empty()) throw std::invalid_argument("no schemes to compare");
    const std::size_t n_schemes = schemes.size();
    const std::size_t n_loads = cfg.load_grid.size();
    const std::size_t n_tiers = cfg.tiers.size();
    const long drops = cfg.drops;

    // results[drop][scheme][load] = per-tier sums for that drop
    struct Cell {
        std::vector<double> ach;
        std::vector<double> del;
        std::vector<long> cells;
    };
    std::vector<std::vector<std::vector<Cell>>> results(
        static_cast<std::size_t>(drops),
        std::vector<std::vector<Cell>>(n_schemes, std::vector<Cell>(n_loads)));
    std::vector<std::uint64_t> hashes(static_cast<std::size_t>(drops), 0);

    std::atomic<long> next{0};
    auto worker_fn = [&]() {
        for (;;) {
            long drop = next.fetch_add(1);
            if (drop >= drops) return;
            Deployment dep = make_deployment(cfg, drop);
            hashes[static_cast<std::size_t>(drop)] = deployment_hash(dep);
            if (dep.nodes.empty()) {
                for (std::size_t s = 0; s < n_schemes; ++s)
                    for (std::size_t l = 0; l < n_loads; ++l) {
                        Cell& c = results[static_cast<std::size_t>(drop)][s][l];
                        c.ach.assign(n_tiers, 0.0);
                        c.del.assign(n_tiers, 0.0);
                        c.cells.assign(n_tiers, 0);
                    }
                continue;
            }
            DropEngine engine(engine_params(cfg), dep, drop_seed(cfg.seed, drop));
            double sim_seconds =
                cfg.frames_per_drop * cfg.frame_length * engine.subframe_seconds();
            for (std::size_t l = 0; l < n_loads; ++l) {
                double load = cfg.load_grid[l];
                for (std::size_t s = 0; s < n_schemes; ++s) {
                    BandPlan plan = build_plan(cfg, schemes[s], engine, load, drop);
                    std::vector<NodeStats> stats =
                        engine.simulate(load, plan, cfg.frames_per_drop);
                    TierSums sums = summarize(cfg, dep, stats, sim_seconds, engine.subframe_seconds());
                    Cell& c = results[static_cast<std::size_t>(drop)][s][l];
                    c.ach.assign(n_tiers, 0.0);
                    c.del.assign(n_tiers, 0.0);
                    c.cells = sums.cells;
                    for (std::size_t t = 0; t < n_tiers; ++t) {
                        if (sums.cells[t] > 0) {
                            c.ach[t] = sums.achievable[t] / static_cast<double>(sums.cells[t]);
                            c.del[t] = sums.delivered[t] / static_cast<double>(sums.cells[t]);
                        }
                    }
                }
            }
        }
    };

    int n_workers = resolve_workers(workers, static_cast<int>(drops));
    if (n_workers <= 1) {
        worker_fn();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker_fn);
        for (auto& th : pool) th.join();
    }

    // Deterministic fold ordered by drop index.
    ComparisonResult out;
    out.drop_hashes = hashes;
    for (std::size_t s = 0; s < n_schemes; ++s) {
        for (std::size_t l = 0; l < n_loads; ++l) {
            for (std::size_t t = 0; t < n_tiers; ++t) {
                PointSamples ps;
                ps.scheme = scheme_name(schemes[s]);
                ps.load = cfg.load_grid[l];
                ps.tier = cfg.tiers[t].name;
                for (long d = 0; d < drops; ++d) {
                    const Cell& c = results[static_cast<std::size_t>(d)][s][l];
                    if (c.cells.empty() || c.cells[t] == 0) continue;
                    ps.achievable_mbps.push_back(c.ach[t] / 1e6);
                    ps.delivered_mbps.push_back(c.del[t] / 1e6);
                }
                MeanCi ci = mean_ci95(ps.achievable_mbps);
                CurvePoint pt;
                pt.scheme = ps.scheme;
                pt.load = ps.load;
                pt.tier = ps.tier;
                pt.mean_tput_mbps = ci.mean;
                pt.ci95_lo = ci.lo;
                pt.ci95_hi = ci.hi;
                pt.drops = ci.n;
                out.curve.points.push_back(pt);
                out.samples.push_back(std::move(ps));
            }
        }
    }
    return out;
}

ComparisonResult sweep_load(const ExperimentConfig& cfg, int workers) {
    return compare_schemes(cfg, {cfg.scheme}, workers);
}

namespace {

std::string fmt_g(double v) {
    char buf[64];
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace

std::string csv_header(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "# coexsim 0.1.0\n";
    char hash_buf[32];
    std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                  static_cast<unsigned long long>(cfg.config_hash));
    os << "# config_hash " << hash_buf << "\n";
    os << "# seed " << cfg.seed << "\n";
    os << "# drops " << cfg.drops << " frames_per_drop " << cfg.frames_per_drop << "\n";
    os << "# region " << fmt_g(cfg.region.width_m) << "x" << fmt_g(cfg.region.height_m) << " "
       << (cfg.region.boundary == Boundary::torus ? "torus" : "guard") << "\n";
    os << "# pathloss intercept_db=" << fmt_g(cfg.pathloss.intercept_db)
       << " dist_slope_db=" << fmt_g(cfg.pathloss.dist_slope_db)
       << " freq_slope_db=" << fmt_g(cfg.pathloss.freq_slope_db)
       << " min_distance_m=" << fmt_g(cfg.pathloss.min_distance_m)
       << " shadowing_sigma_db=" << fmt_g(cfg.pathloss.shadowing_sigma_db) << "\n";
    os << "# rate bandwidth_hz=" << fmt_g(cfg.bandwidth_hz)
       << " attenuation=" << fmt_g(cfg.attenuation) << " sir_floor_db=" << fmt_g(cfg.sir_floor_db)
       << "\n";
    os << "# mac cs_threshold_w=" << fmt_g(cfg.contention.cs_threshold_w)
       << " max_backoff=" << cfg.contention.max_backoff << "\n";
    os << "# bands subbands=" << cfg.subbands << " abs_rate=" << fmt_g(cfg.abs_rate) << "\n";
    for (const TierSpec& t : cfg.tiers) {
        os << "# tier " << t.name << " density_per_m2=" << fmt_g(t.density_per_m2)
           << " tx_power_w=" << fmt_g(t.tx_power_w) << " carrier_hz=" << fmt_g(t.carrier_hz)
           << " peak_rate_bps=" << fmt_g(t.peak_rate_bps) << " protocol="
           << (t.protocol == Protocol::lte_scheduled ? "lte" : "wifi")
           << " subband_span=" << t.subband_span << "\n";
    }
    return os.str();
}

void emit_csv(const ThroughputCurve& curve, const ExperimentConfig& cfg, const std::string& path) {
    if (curve.points.empty()) throw std::runtime_error("nothing to emit");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << csv_header(cfg);
    out << "scheme,load,tier,mean_tput_mbps,ci95_lo,ci95_hi,drops\n";
    for (const CurvePoint& p : curve.points) {
        out << p.scheme << "," << fmt_g(p.load) << "," << p.tier << ","
            << fmt_g(p.mean_tput_mbps) << "," << fmt_g(p.ci95_lo) << "," << fmt_g(p.ci95_hi)
            << "," << p.drops << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

void emit_json(const ThroughputCurve& curve, const ExperimentConfig& cfg, const std::string& path) {
    if (curve.points.empty()) throw std::runtime_error("nothing to emit");
    // Mirror of the CSV with identical fields; hand-rolled to keep key order
    // and float formatting deterministic.
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    char hash_buf[32];
    std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                  static_cast<unsigned long long>(cfg.config_hash));
    out << "{\n  \"tool\": \"coexsim 0.1.0\",\n";
    out << "  \"config_hash\": \"" << hash_buf << "\",\n";
    out << "  \"seed\": " << cfg.seed << ",\n";
    out << "  \"points\": [\n";
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const CurvePoint& p = curve.points[i];
        out << "    {\"scheme\": \"" << p.scheme << "\", \"load\": " << fmt_g(p.load)
            << ", \"tier\": \"" << p.tier << "\", \"mean_tput_mbps\": " << fmt_g(p.mean_tput_mbps)
            << ", \"ci95_lo\": " << fmt_g(p.ci95_lo) << ", \"ci95_hi\": " << fmt_g(p.ci95_hi)
            << ", \"drops\": " << p.drops << "}";
        out << (i + 1 < curve.points.size() ? ",\n" : "\n");
    }
    out << "  ]\n}\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

ThroughputCurve parse_curve_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    ThroughputCurve curve;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;  // column header row
            continue;
        }
        std::istringstream ls(line);
        CurvePoint p;
        std::string field;
        std::getline(ls, p.scheme, ',');
        std::getline(ls, field, ',');
        p.load = std::stod(field);
        std::getline(ls, p.tier, ',');
        std::getline(ls, field, ',');
        p.mean_tput_mbps = std::stod(field);
        std::getline(ls, field, ',');
        p.ci95_lo = std::stod(field);
        std::getline(ls, field, ',');
        p.ci95_hi = std::stod(field);
        std::getline(ls, field, ',');
        p.drops = std::stol(field);
        curve.points.push_back(p);
    }
    return curve;
}

}  // namespace coexsim
