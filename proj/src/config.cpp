#include "coexsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "coexsim/stats.hpp"

#include "json.hpp"

namespace coexsim {

namespace {

struct RawEntry {
    std::string value;
    int line = 0;
    bool used = false;
};

using RawMap = std::map<std::string, RawEntry>;

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

RawMap tokenize(const std::string& text) {
    RawMap raw;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError(lineno, "expected 'key = value', got '" + s + "'");
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (key.empty()) throw ConfigError(lineno, "empty key");
        if (raw.count(key)) throw ConfigError(lineno, "duplicate key '" + key + "'");
        raw[key] = RawEntry{value, lineno, false};
    }
    return raw;
}

double parse_double(const RawEntry& e, const std::string& key) {
    try {
        std::size_t pos = 0;
        double v = std::stod(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        throw ConfigError(e.line, key + ": expected a number, got '" + e.value + "'");
    }
}

long parse_long(const RawEntry& e, const std::string& key) {
    try {
        std::size_t pos = 0;
        long v = std::stol(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        throw ConfigError(e.line, key + ": expected an integer, got '" + e.value + "'");
    }
}

std::uint64_t parse_u64(const RawEntry& e, const std::string& key) {
    try {
        std::size_t pos = 0;
        unsigned long long v = std::stoull(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        throw ConfigError(e.line, key + ": expected an unsigned integer, got '" + e.value + "'");
    }
}

std::vector<double> parse_list(const RawEntry& e, const std::string& key) {
    std::vector<double> out;
    std::istringstream ls(e.value);
    std::string item;
    while (std::getline(ls, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError(e.line, key + ": empty list element");
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument("trailing");
        } catch (...) {
            throw ConfigError(e.line, key + ": bad list element '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError(e.line, key + ": empty list");
    return out;
}

class Reader {
public:
    explicit Reader(RawMap& raw) : raw_(raw) {}

    bool has(const std::string& key) {
        auto it = raw_.find(key);
        return it != raw_.end();
    }
    const RawEntry* take(const std::string& key) {
        auto it = raw_.find(key);
        if (it == raw_.end()) return nullptr;
        it->second.used = true;
        return &it->second;
    }
    double number(const std::string& key, double fallback) {
        const RawEntry* e = take(key);
        return e ? parse_double(*e, key) : fallback;
    }
    double number_in(const std::string& key, double fallback, double lo, double hi) {
        const RawEntry* e = take(key);
        if (!e) return fallback;
        double v = parse_double(*e, key);
        if (v < lo || v > hi) {
            std::ostringstream os;
            os << key << ": value " << v << " outside [" << lo << ", " << hi << "]";
            throw ConfigError(e->line, os.str());
        }
        return v;
    }
    long integer(const std::string& key, long fallback, long lo, long hi) {
        const RawEntry* e = take(key);
        if (!e) return fallback;
        long v = parse_long(*e, key);
        if (v < lo || v > hi) {
            std::ostringstream os;
            os << key << ": value " << v << " outside [" << lo << ", " << hi << "]";
            throw ConfigError(e->line, os.str());
        }
        return v;
    }
    std::uint64_t u64(const std::string& key, std::uint64_t fallback) {
        const RawEntry* e = take(key);
        return e ? parse_u64(*e, key) : fallback;
    }
    std::string word(const std::string& key, const std::string& fallback,
                     const std::vector<std::string>& allowed) {
        const RawEntry* e = take(key);
        if (!e) return fallback;
        if (!allowed.empty() &&
            std::find(allowed.begin(), allowed.end(), e->value) == allowed.end()) {
            std::string opts;
            for (const auto& a : allowed) opts += (opts.empty() ? "" : "|") + a;
            throw ConfigError(e->line, key + ": expected one of " + opts + ", got '" + e->value +
                                           "'");
        }
        return e->value;
    }
    std::vector<double> list(const std::string& key, std::vector<double> fallback) {
        const RawEntry* e = take(key);
        return e ? parse_list(*e, key) : std::move(fallback);
    }

    void reject_unused() const {
        for (const auto& [key, entry] : raw_) {
            if (!entry.used) throw ConfigError(entry.line, "unknown key '" + key + "'");
        }
    }

private:
    RawMap& raw_;
};

TierSpec default_lte_tier() {
    TierSpec t;
    t.name = "lte";
    t.density_per_m2 = 3e-6;  // 3 per km^2
    t.tx_power_w = 40.0;
    t.carrier_hz = 2100e6;
    t.peak_rate_bps = 84e6;
    t.protocol = Protocol::lte_scheduled;
    t.subband_span = 0;
    return t;
}

TierSpec default_wifi_tier() {
    TierSpec t;
    t.name = "wifi";
    t.density_per_m2 = 300e-6;  // 300 per km^2
    t.tx_power_w = 1.0;
    t.carrier_hz = 2400e6;
    t.peak_rate_bps = 65e6;
    t.protocol = Protocol::wifi_contention;
    t.subband_span = 0;
    return t;
}

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    RawMap raw = tokenize(text);
    Reader r(raw);
    ExperimentConfig cfg;

    cfg.seed = r.u64("seed", 12345);
    cfg.drops = static_cast<int>(r.integer("drops", 100, 1, 1000000));
    cfg.frames_per_drop = static_cast<int>(r.integer("frames_per_drop", 200, 1, 1000000));
    cfg.frame_length = static_cast<int>(r.integer("frame_length", 10, 1, 1000));
    cfg.users_per_cell = static_cast<int>(r.integer("users_per_cell", 1, 1, 100));
    cfg.subbands = static_cast<int>(r.integer("subbands", 1, 1, 64));
    cfg.scheme = scheme_from_name(
        r.word("scheme", "hfr1", {"hfr1", "hfr3", "sfr", "sgc", "uncoordinated"}));
    cfg.abs_rate = r.number_in("abs_rate", 0.0, 0.0, 1.0);
    {
        std::vector<double> grid = r.list("load_grid", {0.0, 0.25, 0.5, 0.75, 1.0});
        for (double l : grid) {
            if (l < 0.0 || l > 1.0)
                throw ConfigError(0, "load_grid: value " + fmt_g(l) + " outside [0, 1]");
        }
        cfg.load_grid = grid;
    }

    cfg.region.width_m = r.number_in("region.width_m", 1000.0, 1.0, 1e7);
    cfg.region.height_m = r.number_in("region.height_m", 1000.0, 1.0, 1e7);
    cfg.region.boundary =
        r.word("region.boundary", "torus", {"torus", "guard"}) == "torus" ? Boundary::torus
                                                                          : Boundary::guard;

    cfg.pathloss.intercept_db = r.number("pathloss.intercept_db", 22.7);
    cfg.pathloss.dist_slope_db = r.number_in("pathloss.dist_slope_db", 36.7, 20.001, 80.0);
    cfg.pathloss.freq_slope_db = r.number_in("pathloss.freq_slope_db", 26.0, 0.0, 100.0);
    cfg.pathloss.min_distance_m = r.number_in("pathloss.min_distance_m", 1.0, 1e-6, 1e4);
    cfg.pathloss.shadowing_sigma_db = r.number_in("pathloss.shadowing_sigma_db", 0.0, 0.0, 30.0);

    cfg.bandwidth_hz = r.number_in("rate.bandwidth_mhz", 20.0, 0.001, 10000.0) * 1e6;
    cfg.attenuation = r.number_in("rate.attenuation", 0.75, 1e-6, 1.0);
    cfg.sir_floor_db = r.number_in("rate.sir_floor_db", -10.0, -100.0, 100.0);

    {
        double dbm = r.number_in("mac.cs_threshold_dbm", -82.0, -200.0, 100.0);
        cfg.contention.cs_threshold_w = std::pow(10.0, (dbm - 30.0) / 10.0);
        cfg.contention.max_backoff =
            static_cast<int>(r.integer("mac.max_backoff", 1, 1, 1024));
    }

    cfg.sfr_backoff = r.number_in("mitigation.sfr_backoff", 0.5, 1e-9, 1.0);
    cfg.offband_scale = r.number_in("mitigation.offband_scale", 0.5, 0.0, 1.0);
    {
        std::string p = r.word("mitigation.priority", "random", {"random", "traffic", "qos"});
        cfg.priority = p == "random" ? PriorityPolicy::random
                       : p == "traffic" ? PriorityPolicy::traffic
                                        : PriorityPolicy::qos;
    }
    cfg.warmup_frames = static_cast<int>(r.integer("mitigation.warmup_frames", 2, 1, 1000));

    cfg.sensor_offset_m = r.number_in("sense.offset_m", 50.0, 0.1, 1e5);
    cfg.estimator = r.word("sense.estimator", "squared", {"squared", "sqrt"}) == "squared"
                        ? EstimatorForm::squared
                        : EstimatorForm::sqrt_form;
    cfg.calibration = r.number_in("sense.calibration", 0.0, 0.0, 1e30);
    cfg.calibration_file = r.word("sense.calibration_file", "", {});

    cfg.infer_alphas = r.list("infer.alphas", {3.0, 4.0});
    cfg.infer_offsets_m = r.list("infer.offsets_m", {20.0, 50.0, 100.0});
    cfg.infer_lambdas = r.list("infer.densities_per_m2", {1e-5, 1e-4});
    cfg.infer_draws = static_cast<int>(r.integer("infer.draws", 10000, 10, 10000000));
    cfg.infer_sir_draws = static_cast<int>(r.integer("infer.sir_draws", 1000, 10, 10000000));
    cfg.infer_tolerance = r.number_in("infer.tolerance", 0.10, 1e-6, 1.0);
    cfg.infer_sir_tolerance_db = r.number_in("infer.sir_tolerance_db", 3.0, 0.01, 30.0);
    for (double a : cfg.infer_alphas) {
        if (a <= 2.0) throw ConfigError(0, "infer.alphas: exponent must exceed 2");
    }

    // Tiers: declared by any tier.<name>.<field> key, in first-line order.
    std::vector<std::pair<int, std::string>> tier_names;
    for (const auto& [key, entry] : raw) {
        if (key.rfind("tier.", 0) != 0) continue;
        std::size_t dot = key.find('.', 5);
        if (dot == std::string::npos)
            throw ConfigError(entry.line, "tier key must be tier.<name>.<field>: '" + key + "'");
        std::string name = key.substr(5, dot - 5);
        if (name.empty()) throw ConfigError(entry.line, "empty tier name in '" + key + "'");
        bool seen = false;
        for (auto& [line, existing] : tier_names) {
            if (existing == name) {
                line = std::min(line, entry.line);
                seen = true;
            }
        }
        if (!seen) tier_names.emplace_back(entry.line, name);
    }
    std::sort(tier_names.begin(), tier_names.end());

    if (tier_names.empty()) {
        cfg.tiers = {default_lte_tier(), default_wifi_tier()};
    } else {
        cfg.tiers.clear();
        for (const auto& [line, name] : tier_names) {
            TierSpec t;
            bool has_defaults = name == "lte" || name == "wifi";
            if (name == "lte") t = default_lte_tier();
            else if (name == "wifi") t = default_wifi_tier();
            else t.name = name;
            const std::string base = "tier." + name + ".";
            bool have_density = r.has(base + "density_per_km2");
            bool have_power = r.has(base + "tx_power_w");
            bool have_carrier = r.has(base + "carrier_mhz");
            bool have_peak = r.has(base + "peak_rate_mbps");
            bool have_protocol = r.has(base + "protocol");
            if (!has_defaults &&
                !(have_density && have_power && have_carrier && have_peak && have_protocol)) {
                throw ConfigError(line, "tier '" + name +
                                            "' must define density_per_km2, tx_power_w, "
                                            "carrier_mhz, peak_rate_mbps and protocol");
            }
            t.density_per_m2 =
                r.number_in(base + "density_per_km2", t.density_per_m2 * 1e6, 0.0, 1e9) / 1e6;
            t.tx_power_w = r.number_in(base + "tx_power_w", t.tx_power_w, 1e-9, 1e6);
            t.carrier_hz = r.number_in(base + "carrier_mhz", t.carrier_hz / 1e6, 1.0, 1e7) * 1e6;
            t.peak_rate_bps =
                r.number_in(base + "peak_rate_mbps", t.peak_rate_bps / 1e6, 1e-3, 1e6) * 1e6;
            std::string proto_default =
                t.protocol == Protocol::lte_scheduled ? "lte" : "wifi";
            t.protocol = r.word(base + "protocol", proto_default, {"lte", "wifi"}) == "lte"
                             ? Protocol::lte_scheduled
                             : Protocol::wifi_contention;
            t.subband_span = static_cast<int>(
                r.integer(base + "subband_span", t.subband_span, 0, 64));
            cfg.tiers.push_back(t);
        }
    }

    // Optional per-tier activity signatures: signature.<tier> = list per band.
    {
        int with_sig = 0;
        for (const TierSpec& t : cfg.tiers)
            if (r.has("signature." + t.name)) ++with_sig;
        if (with_sig > 0 && with_sig != static_cast<int>(cfg.tiers.size()))
            throw ConfigError(0, "signatures must be given for every tier or none");
        if (with_sig > 0) {
            for (const TierSpec& t : cfg.tiers) {
                std::string key = "signature." + t.name;
                std::vector<double> sig = r.list(key, {});
                for (double v : sig) {
                    if (v < 0.0 || v > 1.0)
                        throw ConfigError(0, key + ": signature values must lie in [0, 1]");
                }
                cfg.signatures.push_back(sig);
            }
        }
    }

    if (cfg.scheme == Scheme::hfr3 || cfg.scheme == Scheme::sfr) {
        if (cfg.subbands < 3)
            throw ConfigError(0, "scheme " + scheme_name(cfg.scheme) + " needs subbands >= 3");
    }

    r.reject_unused();

    if (!cfg.calibration_file.empty()) {
        CalibrationRecord rec = read_calibration_file(cfg.calibration_file);
        cfg.calibration = rec.calibration;
    }

    cfg.config_hash = fnv1a64(print_config(cfg));
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(0, "cannot open config file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config_text(os.str());
}

std::string print_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "seed = " << cfg.seed << "\n";
    os << "drops = " << cfg.drops << "\n";
    os << "frames_per_drop = " << cfg.frames_per_drop << "\n";
    os << "frame_length = " << cfg.frame_length << "\n";
    os << "users_per_cell = " << cfg.users_per_cell << "\n";
    os << "subbands = " << cfg.subbands << "\n";
    os << "scheme = " << scheme_name(cfg.scheme) << "\n";
    os << "abs_rate = " << fmt_g(cfg.abs_rate) << "\n";
    os << "load_grid = ";
    for (std::size_t i = 0; i < cfg.load_grid.size(); ++i)
        os << (i ? ", " : "") << fmt_g(cfg.load_grid[i]);
    os << "\n";
    os << "region.width_m = " << fmt_g(cfg.region.width_m) << "\n";
    os << "region.height_m = " << fmt_g(cfg.region.height_m) << "\n";
    os << "region.boundary = " << (cfg.region.boundary == Boundary::torus ? "torus" : "guard")
       << "\n";
    os << "pathloss.intercept_db = " << fmt_g(cfg.pathloss.intercept_db) << "\n";
    os << "pathloss.dist_slope_db = " << fmt_g(cfg.pathloss.dist_slope_db) << "\n";
    os << "pathloss.freq_slope_db = " << fmt_g(cfg.pathloss.freq_slope_db) << "\n";
    os << "pathloss.min_distance_m = " << fmt_g(cfg.pathloss.min_distance_m) << "\n";
    os << "pathloss.shadowing_sigma_db = " << fmt_g(cfg.pathloss.shadowing_sigma_db) << "\n";
    os << "rate.bandwidth_mhz = " << fmt_g(cfg.bandwidth_hz / 1e6) << "\n";
    os << "rate.attenuation = " << fmt_g(cfg.attenuation) << "\n";
    os << "rate.sir_floor_db = " << fmt_g(cfg.sir_floor_db) << "\n";
    os << "mac.cs_threshold_dbm = "
       << fmt_g(10.0 * std::log10(cfg.contention.cs_threshold_w) + 30.0) << "\n";
    os << "mac.max_backoff = " << cfg.contention.max_backoff << "\n";
    os << "mitigation.sfr_backoff = " << fmt_g(cfg.sfr_backoff) << "\n";
    os << "mitigation.offband_scale = " << fmt_g(cfg.offband_scale) << "\n";
    os << "mitigation.priority = "
       << (cfg.priority == PriorityPolicy::random
               ? "random"
               : cfg.priority == PriorityPolicy::traffic ? "traffic" : "qos")
       << "\n";
    os << "mitigation.warmup_frames = " << cfg.warmup_frames << "\n";
    os << "sense.offset_m = " << fmt_g(cfg.sensor_offset_m) << "\n";
    os << "sense.estimator = "
       << (cfg.estimator == EstimatorForm::squared ? "squared" : "sqrt") << "\n";
    os << "sense.calibration = " << fmt_g(cfg.calibration) << "\n";
    os << "infer.alphas = ";
    for (std::size_t i = 0; i < cfg.infer_alphas.size(); ++i)
        os << (i ? ", " : "") << fmt_g(cfg.infer_alphas[i]);
    os << "\n";
    os << "infer.offsets_m = ";
    for (std::size_t i = 0; i < cfg.infer_offsets_m.size(); ++i)
        os << (i ? ", " : "") << fmt_g(cfg.infer_offsets_m[i]);
    os << "\n";
    os << "infer.densities_per_m2 = ";
    for (std::size_t i = 0; i < cfg.infer_lambdas.size(); ++i)
        os << (i ? ", " : "") << fmt_g(cfg.infer_lambdas[i]);
    os << "\n";
    os << "infer.draws = " << cfg.infer_draws << "\n";
    os << "infer.sir_draws = " << cfg.infer_sir_draws << "\n";
    os << "infer.tolerance = " << fmt_g(cfg.infer_tolerance) << "\n";
    os << "infer.sir_tolerance_db = " << fmt_g(cfg.infer_sir_tolerance_db) << "\n";
    for (const TierSpec& t : cfg.tiers) {
        const std::string base = "tier." + t.name + ".";
        os << base << "density_per_km2 = " << fmt_g(t.density_per_m2 * 1e6) << "\n";
        os << base << "tx_power_w = " << fmt_g(t.tx_power_w) << "\n";
        os << base << "carrier_mhz = " << fmt_g(t.carrier_hz / 1e6) << "\n";
        os << base << "peak_rate_mbps = " << fmt_g(t.peak_rate_bps / 1e6) << "\n";
        os << base << "protocol = " << (t.protocol == Protocol::lte_scheduled ? "lte" : "wifi")
           << "\n";
        os << base << "subband_span = " << t.subband_span << "\n";
    }
    for (std::size_t i = 0; i < cfg.signatures.size() && i < cfg.tiers.size(); ++i) {
        os << "signature." << cfg.tiers[i].name << " = ";
        for (std::size_t j = 0; j < cfg.signatures[i].size(); ++j)
            os << (j ? ", " : "") << fmt_g(cfg.signatures[i][j]);
        os << "\n";
    }
    return os.str();
}

void write_calibration_file(const std::string& path, const CalibrationRecord& rec) {
    nlohmann::json j;
    j["calibration"] = rec.calibration;
    j["alpha"] = rec.alpha;
    j["sensor_offset_m"] = rec.sensor_offset_m;
    j["rel_error"] = rec.rel_error;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

CalibrationRecord read_calibration_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(0, "cannot open calibration file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(0, "bad calibration file " + path + ": " + e.what());
    }
    CalibrationRecord rec;
    rec.calibration = j.value("calibration", 0.0);
    rec.alpha = j.value("alpha", 0.0);
    rec.sensor_offset_m = j.value("sensor_offset_m", 0.0);
    rec.rel_error = j.value("rel_error", 0.0);
    if (rec.calibration <= 0.0)
        throw ConfigError(0, "calibration file " + path + " has no positive calibration");
    return rec;
}

}  // namespace coexsim
