#include "coexsim/mac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace coexsim {

AbsPattern build_abs_pattern(double rate, int frame_length, Prng& rng) {
    if (rate < 0.0 || rate > 1.0) throw std::invalid_argument("abs rate must be in [0,1]");
    if (frame_length <= 0) throw std::invalid_argument("frame length must be positive");
    AbsPattern p;
    p.rate = rate;
    p.frame_length = frame_length;
    p.blanked.resize(static_cast<std::size_t>(frame_length));
    for (int i = 0; i < frame_length; ++i) {
        p.blanked[static_cast<std::size_t>(i)] = rng.uniform() < rate ? 1 : 0;
    }
    return p;
}

WifiDecision wifi_contend(double sensed_power_w, const ContentionParams& params,
                          BackoffState& state, Prng& rng) {
    params.validate();
    if (state.counter < 0) throw std::invalid_argument("backoff counter must be >= 0");
    bool tx = contention_step(sensed_power_w, params.cs_threshold_w, state.counter,
                              [&] { return rng.uniform_int(1, params.max_backoff); });
    return tx ? WifiDecision::transmit : WifiDecision::defer;
}

bool lte_active(const AbsPattern& pattern, int subframe, const TrafficLoad& load, Prng& rng) {
    if (subframe < 0 || subframe >= pattern.frame_length)
        throw std::invalid_argument("subframe index out of range");
    if (pattern.blanked[static_cast<std::size_t>(subframe)]) return false;
    return rng.uniform() < load.value;
}

namespace {

constexpr double kTwoPi = 6.283185307179586476925;

double gain_with_shadowing(const PathlossModel& model, double d, double carrier_hz,
                           std::uint64_t shadow_key) {
    double g = path_gain(model, d, carrier_hz);
    if (model.shadowing_sigma_db > 0.0) {
        // Box-Muller from two counter-hash uniforms, deterministic per link.
        double u1 = std::max(hash_u01(shadow_key), 1e-12);
        double u2 = hash_u01(splitmix64(shadow_key ^ 0x9e3779b97f4a7c15ULL));
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
        g *= std::pow(10.0, model.shadowing_sigma_db * z / 10.0);
    }
    return g;
}

}  // namespace

DropEngine::DropEngine(const EngineParams& params, const Deployment& dep, std::uint64_t drop_seed)
    : params_(params), dep_(&dep), seed_(drop_seed) {
    params_.pathloss.validate();
    params_.contention.validate();
    if (params_.subbands < 1) throw std::invalid_argument("subbands must be >= 1");
    subbands_ = params_.subbands;
    band_width_hz_ = params_.bandwidth_hz / subbands_;
    n_nodes_ = static_cast<int>(dep.nodes.size());
    n_users_ = static_cast<int>(dep.users.size());

    sched_local_.assign(static_cast<std::size_t>(n_nodes_), -1);
    span_start_.assign(static_cast<std::size_t>(n_nodes_), 0);
    span_len_.assign(static_cast<std::size_t>(n_nodes_), subbands_);
    band_psd_w_.assign(static_cast<std::size_t>(n_nodes_), 0.0);
    band_map_.resize(static_cast<std::size_t>(n_nodes_));

    for (const Node& node : dep.nodes) {
        if (node.tier < 0 || node.tier >= static_cast<int>(params_.tiers.size()))
            throw std::invalid_argument("node references undefined tier");
        const TierSpec& tier = params_.tiers[static_cast<std::size_t>(node.tier)];
        int span = tier.subband_span <= 0 ? subbands_ : std::min(tier.subband_span, subbands_);
        std::size_t id = static_cast<std::size_t>(node.id);
        if (tier.protocol == Protocol::lte_scheduled) {
            sched_local_[id] = static_cast<int>(sched_nodes_.size());
            sched_nodes_.push_back(node.id);
            sched_pos_.push_back(node.pos);
            span_start_[id] = 0;
            span_len_[id] = subbands_;
            band_psd_w_[id] = tier.tx_power_w / subbands_;
        } else {
            wifi_nodes_.push_back(node.id);
            // Contention nodes camp on a random contiguous window per drop.
            int max_start = subbands_ - span;
            int start = max_start == 0
                            ? 0
                            : static_cast<int>(
                                  splitmix64(mix({seed_, kSaltSpan,
                                                  static_cast<std::uint64_t>(node.id)})) %
                                  static_cast<std::uint64_t>(max_start + 1));
            span_start_[id] = start;
            span_len_[id] = span;
            band_psd_w_[id] = tier.tx_power_w / span;
        }
        RateMap map;
        map.bandwidth_hz = band_width_hz_;
        map.attenuation = params_.attenuation;
        map.sir_floor = params_.sir_floor;
        map.peak_rate_bps = tier.peak_rate_bps / span_len_[id];
        band_map_[id] = map;
    }

    // Users are stored grouped by serving node id.
    user_first_.assign(static_cast<std::size_t>(n_nodes_), 0);
    user_count_.assign(static_cast<std::size_t>(n_nodes_), 0);
    for (int u = 0; u < n_users_; ++u) {
        int s = dep.users[static_cast<std::size_t>(u)].serving;
        if (s < 0 || s >= n_nodes_) throw std::invalid_argument("user serving node missing");
        if (user_count_[static_cast<std::size_t>(s)] == 0)
            user_first_[static_cast<std::size_t>(s)] = u;
        ++user_count_[static_cast<std::size_t>(s)];
    }

    // Band interest lists: which receivers care about each band.
    users_on_band_.assign(static_cast<std::size_t>(subbands_), {});
    wifi_on_band_.assign(static_cast<std::size_t>(subbands_), {});
    for (int u = 0; u < n_users_; ++u) {
        int s = dep.users[static_cast<std::size_t>(u)].serving;
        int lo = span_start_[static_cast<std::size_t>(s)];
        int hi = lo + span_len_[static_cast<std::size_t>(s)];
        for (int b = lo; b < hi; ++b) users_on_band_[static_cast<std::size_t>(b)].push_back(u);
    }
    for (int node : wifi_nodes_) {
        int lo = span_start_[static_cast<std::size_t>(node)];
        int hi = lo + span_len_[static_cast<std::size_t>(node)];
        for (int b = lo; b < hi; ++b) wifi_on_band_[static_cast<std::size_t>(b)].push_back(node);
    }

    // Sensor positions: offset from the BS in a hashed direction.
    const std::size_t n_sched = sched_nodes_.size();
    std::vector<Vec2> sensor_pos(n_sched);
    for (std::size_t c = 0; c < n_sched; ++c) {
        double theta =
            hash_u01(mix({seed_, kSaltSensor, static_cast<std::uint64_t>(sched_nodes_[c])})) *
            kTwoPi;
        Vec2 p = dep.nodes[static_cast<std::size_t>(sched_nodes_[c])].pos;
        p.x += std::cos(theta) * params_.sensor_offset_m;
        p.y += std::sin(theta) * params_.sensor_offset_m;
        if (params_.region.boundary == Boundary::torus) {
            p.x = std::fmod(p.x + params_.region.width_m, params_.region.width_m);
            p.y = std::fmod(p.y + params_.region.height_m, params_.region.height_m);
        }
        sensor_pos[c] = p;
    }

    // Gain matrices; carrier follows the transmitter's tier. Self gains stay
    // zero so a node's own signal never appears in its sensing input.
    g_user_.assign(static_cast<std::size_t>(n_nodes_) * static_cast<std::size_t>(n_users_), 0.0);
    g_node_.assign(static_cast<std::size_t>(n_nodes_) * static_cast<std::size_t>(n_nodes_), 0.0);
    g_sensor_.assign(static_cast<std::size_t>(n_nodes_) * n_sched, 0.0);

    for (int tx = 0; tx < n_nodes_; ++tx) {
        const Node& tn = dep.nodes[static_cast<std::size_t>(tx)];
        double carrier = params_.tiers[static_cast<std::size_t>(tn.tier)].carrier_hz;
        for (int u = 0; u < n_users_; ++u) {
            double d = wrap_distance(tn.pos, dep.users[static_cast<std::size_t>(u)].pos,
                                     params_.region);
            std::uint64_t key = mix({seed_, kSaltShadow, 1, static_cast<std::uint64_t>(tx),
                                     static_cast<std::uint64_t>(u)});
            g_user_[static_cast<std::size_t>(tx) * static_cast<std::size_t>(n_users_) +
                    static_cast<std::size_t>(u)] =
                gain_with_shadowing(params_.pathloss, d, carrier, key);
        }
        for (int rx = 0; rx < n_nodes_; ++rx) {
            if (rx == tx) continue;
            double d = wrap_distance(tn.pos, dep.nodes[static_cast<std::size_t>(rx)].pos,
                                     params_.region);
            std::uint64_t key = mix({seed_, kSaltShadow, 2, static_cast<std::uint64_t>(tx),
                                     static_cast<std::uint64_t>(rx)});
            g_node_[static_cast<std::size_t>(tx) * static_cast<std::size_t>(n_nodes_) +
                    static_cast<std::size_t>(rx)] =
                gain_with_shadowing(params_.pathloss, d, carrier, key);
        }
        for (std::size_t c = 0; c < n_sched; ++c) {
            if (tx == sched_nodes_[c]) continue;
            double d = wrap_distance(tn.pos, sensor_pos[c], params_.region);
            std::uint64_t key = mix({seed_, kSaltShadow, 3, static_cast<std::uint64_t>(tx),
                                     static_cast<std::uint64_t>(c)});
            g_sensor_[static_cast<std::size_t>(tx) * n_sched + c] =
                gain_with_shadowing(params_.pathloss, d, carrier, key);
        }
    }
}

std::vector<double> DropEngine::scheduled_user_distance() const {
    std::vector<double> out(sched_nodes_.size(), 0.0);
    for (std::size_t c = 0; c < sched_nodes_.size(); ++c) {
        int node = sched_nodes_[c];
        if (user_count_[static_cast<std::size_t>(node)] == 0) continue;
        const User& u =
            dep_->users[static_cast<std::size_t>(user_first_[static_cast<std::size_t>(node)])];
        out[c] =
            wrap_distance(u.pos, dep_->nodes[static_cast<std::size_t>(node)].pos, params_.region);
    }
    return out;
}

std::vector<double> DropEngine::scheduled_user_signal_w() const {
    std::vector<double> out(sched_nodes_.size(), 0.0);
    for (std::size_t c = 0; c < sched_nodes_.size(); ++c) {
        int node = sched_nodes_[c];
        if (user_count_[static_cast<std::size_t>(node)] == 0) continue;
        int u = user_first_[static_cast<std::size_t>(node)];
        out[c] = band_psd_w_[static_cast<std::size_t>(node)] *
                 g_user_[static_cast<std::size_t>(node) * static_cast<std::size_t>(n_users_) +
                         static_cast<std::size_t>(u)];
    }
    return out;
}

BandPlan DropEngine::neutral_plan(bool shuffled_order) const {
    BandPlan plan;
    plan.subbands = subbands_;
    const int n = scheduled_count();
    plan.scale.assign(static_cast<std::size_t>(n),
                      std::vector<double>(static_cast<std::size_t>(subbands_), 1.0));
    plan.order.assign(static_cast<std::size_t>(n), {});
    for (int c = 0; c < n; ++c) {
        auto& order = plan.order[static_cast<std::size_t>(c)];
        order.resize(static_cast<std::size_t>(subbands_));
        for (int b = 0; b < subbands_; ++b) order[static_cast<std::size_t>(b)] = b;
        if (shuffled_order && subbands_ > 1) {
            // Per-cell static shuffle decorrelates demand-limited band usage.
            for (int b = subbands_ - 1; b > 0; --b) {
                std::uint64_t key =
                    mix({seed_, kSaltUsage,
                         static_cast<std::uint64_t>(sched_nodes_[static_cast<std::size_t>(c)]),
                         static_cast<std::uint64_t>(b)});
                int j = static_cast<int>(splitmix64(key) % static_cast<std::uint64_t>(b + 1));
                std::swap(order[static_cast<std::size_t>(b)], order[static_cast<std::size_t>(j)]);
            }
        }
    }
    return plan;
}

struct DropEngine::SubframeScratch {
    std::vector<double> sensed;      // [node * subbands + band]
    std::vector<double> user_intf;   // [user * subbands + band]
    std::vector<double> sensor_acc;  // [cell_local * subbands + band]
    std::vector<char> committed;     // per node
    std::vector<double> tx_watts;    // [node * subbands + band]
    std::vector<int> wifi_order;
    std::vector<int> real_backoff;   // per node
    std::vector<int> probe_backoff;  // per node
    std::vector<long> backoff_draws;
    std::vector<long> probe_draws;
    std::vector<int> touched_bands;
};

void DropEngine::commit(int node, const std::vector<double>& watts_per_band, SubframeScratch& sc,
                        bool with_sensors) {
    sc.committed[static_cast<std::size_t>(node)] = 1;
    const std::size_t nu = static_cast<std::size_t>(n_users_);
    const std::size_t nb = static_cast<std::size_t>(subbands_);
    const double* grow_user = &g_user_[static_cast<std::size_t>(node) * nu];
    const double* grow_node = &g_node_[static_cast<std::size_t>(node) * static_cast<std::size_t>(n_nodes_)];
    for (int b = 0; b < subbands_; ++b) {
        double w = watts_per_band[static_cast<std::size_t>(b)];
        if (w <= 0.0) continue;
        sc.tx_watts[static_cast<std::size_t>(node) * nb + static_cast<std::size_t>(b)] = w;
        for (int u : users_on_band_[static_cast<std::size_t>(b)]) {
            sc.user_intf[static_cast<std::size_t>(u) * nb + static_cast<std::size_t>(b)] +=
                w * grow_user[static_cast<std::size_t>(u)];
        }
        for (int rx : wifi_on_band_[static_cast<std::size_t>(b)]) {
            sc.sensed[static_cast<std::size_t>(rx) * nb + static_cast<std::size_t>(b)] +=
                w * grow_node[static_cast<std::size_t>(rx)];
        }
        if (with_sensors) {
            const std::size_t ns = sched_nodes_.size();
            const double* grow_sensor = &g_sensor_[static_cast<std::size_t>(node) * ns];
            for (std::size_t c = 0; c < ns; ++c) {
                sc.sensor_acc[c * nb + static_cast<std::size_t>(b)] += w * grow_sensor[c];
            }
        }
    }
}

WarmupStats DropEngine::warmup(double load, int frames, const BandPlan& plan) {
    WarmupStats warm;
    run(load, plan, frames, nullptr, &warm, nullptr);
    return warm;
}

std::vector<NodeStats> DropEngine::simulate(double load, const BandPlan& plan, int frames,
                                            std::ostream* trace) {
    std::vector<NodeStats> stats(static_cast<std::size_t>(n_nodes_));
    run(load, plan, frames, &stats, nullptr, trace);
    return stats;
}

void DropEngine::run(double load, const BandPlan& plan, int frames, std::vector<NodeStats>* stats,
                     WarmupStats* warm, std::ostream* trace) {
    if (load < 0.0 || load > 1.0) throw std::invalid_argument("load must be in [0,1]");
    if (static_cast<int>(plan.scale.size()) != scheduled_count())
        throw std::invalid_argument("band plan does not match scheduled cell count");

    const std::size_t nb = static_cast<std::size_t>(subbands_);
    SubframeScratch sc;
    sc.sensed.assign(static_cast<std::size_t>(n_nodes_) * nb, 0.0);
    sc.user_intf.assign(static_cast<std::size_t>(n_users_) * nb, 0.0);
    sc.sensor_acc.assign(sched_nodes_.size() * nb, 0.0);
    sc.committed.assign(static_cast<std::size_t>(n_nodes_), 0);
    sc.tx_watts.assign(static_cast<std::size_t>(n_nodes_) * nb, 0.0);
    sc.real_backoff.assign(static_cast<std::size_t>(n_nodes_), 1);
    sc.probe_backoff.assign(static_cast<std::size_t>(n_nodes_), 1);
    sc.backoff_draws.assign(static_cast<std::size_t>(n_nodes_), 0);
    sc.probe_draws.assign(static_cast<std::size_t>(n_nodes_), 0);

    const std::uint64_t phase_salt = warm ? 0xA11CE5ULL : 0;
    auto backoff_redraw = [&](int node, bool probe) {
        long idx = probe ? sc.probe_draws[static_cast<std::size_t>(node)]++
                         : sc.backoff_draws[static_cast<std::size_t>(node)]++;
        std::uint64_t key = mix({seed_,
                                 probe ? static_cast<std::uint64_t>(kSaltProbe)
                                       : static_cast<std::uint64_t>(kSaltBackoff),
                                 phase_salt, static_cast<std::uint64_t>(node),
                                 static_cast<std::uint64_t>(idx)});
        return 1 + static_cast<int>(splitmix64(key) %
                                    static_cast<std::uint64_t>(params_.contention.max_backoff));
    };
    for (int node : wifi_nodes_) {
        sc.real_backoff[static_cast<std::size_t>(node)] = backoff_redraw(node, false);
        sc.probe_backoff[static_cast<std::size_t>(node)] = backoff_redraw(node, true);
    }

    if (warm) {
        warm->user_interference_w.assign(static_cast<std::size_t>(n_users_) * nb, 0.0);
        warm->sensor_power_w.assign(sched_nodes_.size() * nb, 0.0);
    }

    if (stats) {
        // Zero-interference rate over each node's allowed bands; the
        // load-zero limit of the achievable curve.
        for (int node = 0; node < n_nodes_; ++node) {
            int local = sched_local_[static_cast<std::size_t>(node)];
            double peak_band = band_map_[static_cast<std::size_t>(node)].peak_rate_bps;
            if (local < 0) {
                (*stats)[static_cast<std::size_t>(node)].idle_peak_bps =
                    peak_band * span_len_[static_cast<std::size_t>(node)];
            } else {
                int allowed = 0;
                for (int b = 0; b < subbands_; ++b)
                    if (plan.scale[static_cast<std::size_t>(local)][static_cast<std::size_t>(b)] >
                        0.0)
                        ++allowed;
                (*stats)[static_cast<std::size_t>(node)].idle_peak_bps = peak_band * allowed;
            }
        }
    }

    std::vector<double> watts(nb, 0.0);
    const long total_subframes = static_cast<long>(frames) * params_.frame_length;
    const double dt = params_.subframe_s;

    for (int frame = 0; frame < frames; ++frame) {
        for (int sf = 0; sf < params_.frame_length; ++sf) {
            std::fill(sc.sensed.begin(), sc.sensed.end(), 0.0);
            std::fill(sc.user_intf.begin(), sc.user_intf.end(), 0.0);
            std::fill(sc.committed.begin(), sc.committed.end(), 0);
            std::fill(sc.tx_watts.begin(), sc.tx_watts.end(), 0.0);

            std::uint64_t tkey_base =
                mix({seed_, kSaltTraffic, phase_salt, static_cast<std::uint64_t>(frame),
                     static_cast<std::uint64_t>(sf)});
            auto is_blanked = [&](int node) {
                if (params_.abs_rate <= 0.0) return false;
                double u = hash_u01(mix({seed_, kSaltAbs, phase_salt,
                                         static_cast<std::uint64_t>(node),
                                         static_cast<std::uint64_t>(frame),
                                         static_cast<std::uint64_t>(sf)}));
                return u < params_.abs_rate;
            };

            // Scheduled (LTE) cells first: Bernoulli traffic, blanking, then
            // demand-limited band usage in plan order.
            for (std::size_t c = 0; c < sched_nodes_.size(); ++c) {
                int node = sched_nodes_[c];
                double u = hash_u01(mix({tkey_base, static_cast<std::uint64_t>(node)}));
                bool has_traffic = u < load;
                if (stats && has_traffic)
                    (*stats)[static_cast<std::size_t>(node)].traffic_subframes += 1;
                if (!has_traffic || is_blanked(node)) continue;
                const auto& order = plan.order[c];
                if (order.empty()) continue;
                int demand = std::max(1, static_cast<int>(std::ceil(load * subbands_)));
                demand = std::min<int>(demand, static_cast<int>(order.size()));
                std::fill(watts.begin(), watts.end(), 0.0);
                for (int k = 0; k < demand; ++k) {
                    int b = order[static_cast<std::size_t>(k)];
                    watts[static_cast<std::size_t>(b)] =
                        band_psd_w_[static_cast<std::size_t>(node)] *
                        plan.scale[c][static_cast<std::size_t>(b)];
                }
                commit(node, watts, sc, warm != nullptr);
            }

            // Wi-Fi carrier-sense contention in a per-subframe random order
            // against the already committed transmitters.
            sc.wifi_order = wifi_nodes_;
            for (std::size_t k = sc.wifi_order.size(); k > 1; --k) {
                std::uint64_t key = mix({seed_, kSaltOrder, phase_salt,
                                         static_cast<std::uint64_t>(frame),
                                         static_cast<std::uint64_t>(sf),
                                         static_cast<std::uint64_t>(k)});
                std::size_t j = splitmix64(key) % k;
                std::swap(sc.wifi_order[k - 1], sc.wifi_order[j]);
            }
            for (int node : sc.wifi_order) {
                double u = hash_u01(mix({tkey_base, static_cast<std::uint64_t>(node)}));
                if (u >= load) continue;  // no traffic, counter frozen
                double sensed = 0.0;
                int lo = span_start_[static_cast<std::size_t>(node)];
                int hi = lo + span_len_[static_cast<std::size_t>(node)];
                for (int b = lo; b < hi; ++b)
                    sensed +=
                        sc.sensed[static_cast<std::size_t>(node) * nb + static_cast<std::size_t>(b)];
                bool busy = sensed >= params_.contention.cs_threshold_w;
                bool tx = contention_step(sensed, params_.contention.cs_threshold_w,
                                          sc.real_backoff[static_cast<std::size_t>(node)],
                                          [&] { return backoff_redraw(node, false); });
                if (tx) {
                    std::fill(watts.begin(), watts.end(), 0.0);
                    for (int b = lo; b < hi; ++b)
                        watts[static_cast<std::size_t>(b)] =
                            band_psd_w_[static_cast<std::size_t>(node)];
                    commit(node, watts, sc, warm != nullptr);
                } else if (stats && busy) {
                    (*stats)[static_cast<std::size_t>(node)].deferred_subframes += 1;
                }
            }

            if (warm) {
                for (std::size_t i = 0; i < warm->user_interference_w.size(); ++i)
                    warm->user_interference_w[i] += sc.user_intf[i];
                for (std::size_t i = 0; i < warm->sensor_power_w.size(); ++i)
                    warm->sensor_power_w[i] += sc.sensor_acc[i];
                std::fill(sc.sensor_acc.begin(), sc.sensor_acc.end(), 0.0);
                continue;
            }

            // Measurement pass.
            for (int node = 0; node < n_nodes_; ++node) {
                NodeStats& ns = (*stats)[static_cast<std::size_t>(node)];
                ns.total_subframes += 1;
                int nu_here = user_count_[static_cast<std::size_t>(node)];
                if (nu_here == 0) continue;
                const Node& nd = dep_->nodes[static_cast<std::size_t>(node)];
                const TierSpec& tier = params_.tiers[static_cast<std::size_t>(nd.tier)];
                bool scheduled = tier.protocol == Protocol::lte_scheduled;
                int local = scheduled ? sched_local_[static_cast<std::size_t>(node)] : -1;
                bool transmitted = sc.committed[static_cast<std::size_t>(node)] != 0;

                bool can_achieve = true;
                if (scheduled) {
                    if (is_blanked(node)) {
                        can_achieve = false;
                        ns.blanked_subframes += 1;
                    }
                    // The achievable numerator for scheduled cells counts
                    // only transmitted subframes; the traffic count is the
                    // matching denominator.
                    can_achieve = can_achieve && transmitted;
                } else {
                    double sensed = 0.0;
                    int lo = span_start_[static_cast<std::size_t>(node)];
                    int hi = lo + span_len_[static_cast<std::size_t>(node)];
                    for (int b = lo; b < hi; ++b)
                        sensed += sc.sensed[static_cast<std::size_t>(node) * nb +
                                            static_cast<std::size_t>(b)];
                    bool busy = sensed >= params_.contention.cs_threshold_w;
                    bool probe_ready = false;
                    if (!busy) {
                        probe_ready = contention_step(
                            sensed, params_.contention.cs_threshold_w,
                            sc.probe_backoff[static_cast<std::size_t>(node)],
                            [&] { return backoff_redraw(node, true); });
                    }
                    can_achieve = transmitted || (!busy && probe_ready);
                }

                // Saturated-cell rate over the node's full allowed band set,
                // averaged across its users.
                double rate_sum = 0.0;
                double sig_sum = 0.0, intf_sum = 0.0;
                const double* grow_user =
                    &g_user_[static_cast<std::size_t>(node) * static_cast<std::size_t>(n_users_)];
                for (int k = 0; k < nu_here; ++k) {
                    int u = user_first_[static_cast<std::size_t>(node)] + k;
                    double g = grow_user[static_cast<std::size_t>(u)];
                    int b_lo = scheduled ? 0 : span_start_[static_cast<std::size_t>(node)];
                    int b_hi = scheduled ? subbands_
                                         : span_start_[static_cast<std::size_t>(node)] +
                                               span_len_[static_cast<std::size_t>(node)];
                    for (int b = b_lo; b < b_hi; ++b) {
                        double scale = 1.0;
                        if (scheduled) {
                            scale = plan.scale[static_cast<std::size_t>(local)]
                                              [static_cast<std::size_t>(b)];
                            if (scale <= 0.0) continue;
                        }
                        double s = band_psd_w_[static_cast<std::size_t>(node)] * scale * g;
                        double intf = sc.user_intf[static_cast<std::size_t>(u) * nb +
                                                   static_cast<std::size_t>(b)];
                        if (transmitted) {
                            double own = sc.tx_watts[static_cast<std::size_t>(node) * nb +
                                                     static_cast<std::size_t>(b)] *
                                         g;
                            intf = std::max(0.0, intf - own);
                        }
                        double sir_b = intf > 0.0 ? s / intf : kInterferenceFree;
                        rate_sum += rate(sir_b, band_map_[static_cast<std::size_t>(node)]);
                        sig_sum += s;
                        intf_sum += intf;
                    }
                }
                double mean_rate = rate_sum / nu_here;

                if (transmitted) {
                    ns.tx_subframes += 1;
                    double used_rate = 0.0;
                    int used_bands = 0;
                    for (int b = 0; b < subbands_; ++b) {
                        if (sc.tx_watts[static_cast<std::size_t>(node) * nb +
                                        static_cast<std::size_t>(b)] > 0.0)
                            ++used_bands;
                    }
                    for (int k = 0; k < nu_here; ++k) {
                        int u = user_first_[static_cast<std::size_t>(node)] + k;
                        double g = grow_user[static_cast<std::size_t>(u)];
                        for (int b = 0; b < subbands_; ++b) {
                            double w = sc.tx_watts[static_cast<std::size_t>(node) * nb +
                                                   static_cast<std::size_t>(b)];
                            if (w <= 0.0) continue;
                            double s = w * g;
                            double intf =
                                std::max(0.0, sc.user_intf[static_cast<std::size_t>(u) * nb +
                                                           static_cast<std::size_t>(b)] -
                                                  s);
                            double sir_b = intf > 0.0 ? s / intf : kInterferenceFree;
                            used_rate += rate(sir_b, band_map_[static_cast<std::size_t>(node)]);
                        }
                    }
                    ns.delivered_bits += used_rate / nu_here * dt;
                    if (scheduled) {
                        // Achievable capacity extrapolates the quality of the
                        // bands in use (where deferral has reacted to this
                        // transmission) across the cell's allowed set.
                        int allowed = 0;
                        for (int b = 0; b < subbands_; ++b)
                            if (plan.scale[static_cast<std::size_t>(local)]
                                          [static_cast<std::size_t>(b)] > 0.0)
                                ++allowed;
                        double scale_up =
                            used_bands > 0 ? static_cast<double>(allowed) / used_bands : 0.0;
                        ns.achievable_bits += used_rate / nu_here * scale_up * dt;
                    }
                }
                if (!scheduled && can_achieve) ns.achievable_bits += mean_rate * dt;

                if (trace) {
                    long gsf = static_cast<long>(frame) * params_.frame_length + sf;
                    const char* action = transmitted ? "tx"
                                         : scheduled ? (can_achieve ? "idle" : "blank")
                                                     : (can_achieve ? "idle" : "defer");
                    double sir_db = intf_sum > 0.0 ? 10.0 * std::log10(sig_sum / intf_sum)
                                                   : std::numeric_limits<double>::infinity();
                    *trace << gsf << "," << node << "," << action << "," << sir_db << ","
                           << (transmitted ? mean_rate * dt : 0.0) << "\n";
                }
            }
        }
    }

    if (warm && total_subframes > 0) {
        for (double& v : warm->user_interference_w) v /= static_cast<double>(total_subframes);
        for (double& v : warm->sensor_power_w) v /= static_cast<double>(total_subframes);
    }
}

}  // namespace coexsim
