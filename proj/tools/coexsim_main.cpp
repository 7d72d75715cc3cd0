#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "coexsim/config.hpp"
#include "coexsim/experiments.hpp"
#include "coexsim/stats.hpp"
#include "coexsim/validation.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string output = "out.csv";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int drops = 0;
    int workers = 0;
    bool print_config = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("-c,--config", opts.config_path, "Configuration file (key = value lines)");
    cmd->add_option("-o,--output", opts.output, "Output path (CSV; a .json mirror is written)");
    cmd->add_option("--seed", opts.seed, "Master seed override")
        ->each([&](const std::string&) { opts.seed_set = true; });
    cmd->add_option("--drops", opts.drops, "Monte Carlo drop count override");
    cmd->add_option("--workers", opts.workers,
                    "Parallel drop workers (default: COEXSIM_WORKERS or hardware)");
    cmd->add_flag("--print-config", opts.print_config, "Print the resolved configuration and run");
}

coexsim::ExperimentConfig load_config(const CommonOpts& opts) {
    coexsim::ExperimentConfig cfg = opts.config_path.empty()
                                        ? coexsim::parse_config_text("")
                                        : coexsim::parse_config_file(opts.config_path);
    if (opts.seed_set) cfg.seed = opts.seed;
    if (opts.drops > 0) cfg.drops = opts.drops;
    cfg.config_hash = coexsim::fnv1a64(coexsim::print_config(cfg));
    if (opts.print_config) std::cout << coexsim::print_config(cfg);
    return cfg;
}

std::string json_sibling(const std::string& csv_path) {
    std::size_t dot = csv_path.find_last_of('.');
    if (dot == std::string::npos || csv_path.substr(dot) != ".csv") return csv_path + ".json";
    return csv_path.substr(0, dot) + ".json";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coexsim - LTE / Wi-Fi unlicensed spectrum coexistence simulator"};
    app.require_subcommand(1);

    CommonOpts sim_opts, sweep_opts, cmp_opts, infer_opts, cal_opts;

    auto* sim = app.add_subcommand("simulate", "Run a single Monte Carlo drop");
    add_common(sim, sim_opts);
    double sim_load = -1.0;
    long sim_drop = 0;
    std::string trace_path, dump_path;
    sim->add_option("--load", sim_load, "Normalized traffic load (default: first grid entry)");
    sim->add_option("--drop", sim_drop, "Drop index to run");
    sim->add_option("--trace", trace_path,
                    "Write a per-subframe trace (subframe,node,action,sir_db,bits)");
    sim->add_option("--dump-deployment", dump_path, "Write the deployment snapshot text");

    auto* sweep = app.add_subcommand("sweep", "Sweep the load grid for the configured scheme");
    add_common(sweep, sweep_opts);

    auto* cmp = app.add_subcommand("mitigation-compare",
                                   "Compare mitigation schemes on shared seeds");
    add_common(cmp, cmp_opts);
    std::vector<std::string> cmp_schemes{"hfr1", "hfr3", "sfr", "sgc", "uncoordinated"};
    cmp->add_option("--schemes", cmp_schemes, "Schemes to compare")->delimiter(',');

    auto* infer = app.add_subcommand("infer-validate",
                                     "Estimator-consistency report for the density/SIR inference");
    add_common(infer, infer_opts);

    auto* cal = app.add_subcommand("calibrate",
                                   "Fit the inference calibration constant for this pathloss");
    add_common(cal, cal_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed()) {
            coexsim::ExperimentConfig cfg = load_config(sim_opts);
            double load = sim_load >= 0.0 ? sim_load : cfg.load_grid.front();
            if (load > 1.0) throw coexsim::ConfigError(0, "--load must be in [0,1]");
            try {
                coexsim::Deployment dep = coexsim::make_deployment(cfg, sim_drop);
                if (!dump_path.empty()) {
                    std::ofstream out(dump_path, std::ios::binary);
                    if (!out) throw std::runtime_error("cannot write " + dump_path);
                    out << coexsim::deployment_text(dep, cfg.tiers);
                }
                if (dep.nodes.empty()) {
                    std::cout << "deployment is empty (zero-density tiers)\n";
                    return 0;
                }
                coexsim::DropEngine engine(coexsim::engine_params(cfg), dep,
                                           coexsim::drop_seed(cfg.seed, sim_drop));
                coexsim::BandPlan plan =
                    coexsim::build_plan(cfg, cfg.scheme, engine, load, sim_drop);
                std::ofstream trace;
                std::ostream* trace_ptr = nullptr;
                if (!trace_path.empty()) {
                    trace.open(trace_path, std::ios::binary);
                    if (!trace) throw std::runtime_error("cannot write " + trace_path);
                    trace << "subframe,node,action,sir_db,bits\n";
                    trace_ptr = &trace;
                }
                std::vector<coexsim::NodeStats> stats =
                    engine.simulate(load, plan, cfg.frames_per_drop, trace_ptr);
                double sim_s = cfg.frames_per_drop * cfg.frame_length * engine.subframe_seconds();
                std::vector<double> ach(cfg.tiers.size(), 0.0), del(cfg.tiers.size(), 0.0);
                std::vector<long> cells(cfg.tiers.size(), 0);
                for (const coexsim::Node& n : dep.nodes) {
                    ach[static_cast<std::size_t>(n.tier)] +=
                        stats[static_cast<std::size_t>(n.id)].achievable_bits / sim_s;
                    del[static_cast<std::size_t>(n.tier)] +=
                        stats[static_cast<std::size_t>(n.id)].delivered_bits / sim_s;
                    cells[static_cast<std::size_t>(n.tier)] += 1;
                }
                for (std::size_t t = 0; t < cfg.tiers.size(); ++t) {
                    double a = cells[t] ? ach[t] / cells[t] / 1e6 : 0.0;
                    double d = cells[t] ? del[t] / cells[t] / 1e6 : 0.0;
                    std::printf("%s: cells=%ld achievable=%.3f Mbps/cell delivered=%.3f Mbps/cell\n",
                                cfg.tiers[t].name.c_str(), cells[t], a, d);
                }
            } catch (const coexsim::ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                std::cerr << "simulation error (drop " << sim_drop << "): " << e.what() << "\n";
                return 2;
            }
            return 0;
        }
        if (sweep->parsed()) {
            coexsim::ExperimentConfig cfg = load_config(sweep_opts);
            try {
                coexsim::ComparisonResult res = coexsim::sweep_load(
                    cfg, coexsim::resolve_workers(sweep_opts.workers, cfg.drops));
                coexsim::emit_csv(res.curve, cfg, sweep_opts.output);
                coexsim::emit_json(res.curve, cfg, json_sibling(sweep_opts.output));
                std::cout << "wrote " << sweep_opts.output << " and "
                          << json_sibling(sweep_opts.output) << "\n";
            } catch (const std::exception& e) {
                std::cerr << "simulation error: " << e.what() << "\n";
                return 2;
            }
            return 0;
        }
        if (cmp->parsed()) {
            coexsim::ExperimentConfig cfg = load_config(cmp_opts);
            std::vector<coexsim::Scheme> schemes;
            for (const std::string& s : cmp_schemes) schemes.push_back(coexsim::scheme_from_name(s));
            if (schemes.size() < 2)
                throw coexsim::ConfigError(0, "mitigation-compare needs at least 2 schemes");
            try {
                coexsim::ComparisonResult res = coexsim::compare_schemes(
                    cfg, schemes, coexsim::resolve_workers(cmp_opts.workers, cfg.drops));
                coexsim::emit_csv(res.curve, cfg, cmp_opts.output);
                coexsim::emit_json(res.curve, cfg, json_sibling(cmp_opts.output));
                std::cout << "wrote " << cmp_opts.output << " and "
                          << json_sibling(cmp_opts.output) << "\n";
            } catch (const std::exception& e) {
                std::cerr << "simulation error: " << e.what() << "\n";
                return 2;
            }
            return 0;
        }
        if (infer->parsed()) {
            coexsim::ExperimentConfig cfg = load_config(infer_opts);
            coexsim::InferReport report;
            try {
                report = coexsim::run_infer_validation(cfg);
                coexsim::write_infer_csv(report, cfg, infer_opts.output);
            } catch (const std::exception& e) {
                std::cerr << "validation error: " << e.what() << "\n";
                return 2;
            }
            std::cout << "wrote " << infer_opts.output << "\n";
            for (const coexsim::DensityCase& dc : report.density) {
                std::printf("density alpha=%g h=%g lambda=%g rel_error=%.4f %s\n", dc.alpha,
                            dc.h_m, dc.true_lambda, dc.rel_error, dc.pass ? "pass" : "FAIL");
            }
            int sir_fail = 0;
            for (const coexsim::SirCase& sc : report.sir)
                if (!sc.pass) ++sir_fail;
            std::printf("sir checks: %zu, failures: %d\n", report.sir.size(), sir_fail);
            if (!report.all_pass) {
                std::cerr << "estimator consistency outside tolerance\n";
                return 3;
            }
            return 0;
        }
        if (cal->parsed()) {
            coexsim::ExperimentConfig cfg = load_config(cal_opts);
            coexsim::CalibrateResult res;
            try {
                res = coexsim::run_calibrate(cfg);
                std::string out = cal_opts.output == "out.csv" ? "calibration.json"
                                                               : cal_opts.output;
                coexsim::write_calibration_file(out, res.record);
                std::printf("calibration=%.10g alpha=%g h=%g rel_error=%.4f -> %s\n",
                            res.record.calibration, res.record.alpha,
                            res.record.sensor_offset_m, res.record.rel_error, out.c_str());
            } catch (const std::exception& e) {
                std::cerr << "calibration error: " << e.what() << "\n";
                return 2;
            }
            if (!res.pass) {
                std::cerr << "calibration validation outside tolerance\n";
                return 3;
            }
            return 0;
        }
    } catch (const coexsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
