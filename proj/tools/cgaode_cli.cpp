// cgaode: command-line front end for the compact GA / mean-field ODE toolkit.
//
// Exit codes: 0 success, 1 validation error (bad flags, bad config, scope
// guard), 2 internal error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <cgaode/cgaode.hpp>

namespace {

using namespace cgaode;

struct Overrides {
    std::string config_file;
    std::string spec_kind;
    std::string spec_file;
    std::size_t n = 0;
    double epsilon = 0.0;
    std::vector<double> weights;
    std::uint64_t spec_seed = 0;
    std::vector<std::uint32_t> N_values;
    std::uint64_t seed = 0;
    std::uint64_t runs = 0;
    double horizon = 0.0;
    double step = 0.0;
    std::string out;
    std::uint64_t max_iters = 0;
    std::uint64_t record_every = 0;
    double tol = 0.0;
    double t_max = 0.0;
    unsigned threads = 0;
    std::size_t grid = 0;
    std::vector<double> x0;

    std::map<std::string, CLI::Option*> opts;

    [[nodiscard]] bool given(const std::string& name) const {
        auto it = opts.find(name);
        return it != opts.end() && it->second->count() > 0;
    }
};

void add_common_options(CLI::App* cmd, Overrides& o) {
    o.opts.clear();
    o.opts["config"] = cmd->add_option("--config", o.config_file, "ExperimentConfig JSON file");
    o.opts["spec"] = cmd->add_option("--spec", o.spec_kind,
                                     "fitness kind: binval, linear, perturbed_onemax, random_injective");
    o.opts["spec-file"] = cmd->add_option("--spec-file", o.spec_file, "FitnessSpec JSON file");
    o.opts["n"] = cmd->add_option("--n", o.n, "solution length");
    o.opts["epsilon"] = cmd->add_option("--epsilon", o.epsilon, "perturbed_onemax epsilon");
    o.opts["weights"] = cmd->add_option("--weights", o.weights, "linear weights");
    o.opts["spec-seed"] = cmd->add_option("--spec-seed", o.spec_seed, "random_injective seed");
    o.opts["N"] = cmd->add_option("--N", o.N_values, "N values (alpha = 1/(2N)); repeatable");
    o.opts["seed"] = cmd->add_option("--seed", o.seed, "master seed");
    o.opts["runs"] = cmd->add_option("--runs", o.runs, "runs per setting");
    o.opts["horizon"] = cmd->add_option("--horizon", o.horizon, "time horizon T");
    o.opts["step"] = cmd->add_option("--step", o.step, "ODE step h");
    o.opts["out"] = cmd->add_option("--out", o.out, "output directory (default: standard output)");
    o.opts["max-iters"] = cmd->add_option("--max-iters", o.max_iters, "cGA iteration budget");
    o.opts["record-every"] = cmd->add_option("--record-every", o.record_every, "trajectory thinning");
    o.opts["tol"] = cmd->add_option("--tol", o.tol, "limit tolerance on ||f||_inf");
    o.opts["t-max"] = cmd->add_option("--t-max", o.t_max, "limit search time cap");
    o.opts["threads"] = cmd->add_option("--threads", o.threads, "worker threads (0 = auto)");
    o.opts["grid"] = cmd->add_option("--grid", o.grid, "drift grid points per axis");
    o.opts["x0"] = cmd->add_option("--x0", o.x0, "initial probability vector");
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

FitnessSpec spec_from_flags(const Overrides& o, std::size_t fallback_n) {
    const std::size_t n = o.given("n") ? o.n : fallback_n;
    const auto& kind = o.spec_kind;
    if (kind == "binval") return FitnessSpec::binval(n);
    if (kind == "perturbed_onemax") {
        return FitnessSpec::perturbed_onemax(n, o.given("epsilon") ? std::optional(o.epsilon)
                                                                    : std::nullopt);
    }
    if (kind == "random_injective") return FitnessSpec::random_injective(n, o.spec_seed);
    if (kind == "linear") {
        if (!o.given("weights")) throw ConfigError("--spec linear needs --weights");
        return FitnessSpec::linear(o.weights);
    }
    if (kind == "table") throw ConfigError("table fitness must be given with --spec-file");
    throw ConfigError("unknown fitness kind '" + kind + "'");
}

ExperimentConfig build_config(const Overrides& o) {
    ExperimentConfig cfg;
    if (o.given("config")) cfg = ExperimentConfig::from_json(read_json_file(o.config_file));
    if (o.given("spec-file")) {
        if (o.given("spec")) throw ConfigError("--spec and --spec-file are mutually exclusive");
        cfg.spec = FitnessSpec::from_json(read_json_file(o.spec_file));
    } else if (o.given("spec")) {
        cfg.spec = spec_from_flags(o, cfg.spec.n());
    } else if (o.given("n") || o.given("epsilon") || o.given("weights") || o.given("spec-seed")) {
        // Re-parameterise the configured kind.
        Overrides copy = o;
        copy.spec_kind = cfg.spec.kind_name();
        cfg.spec = spec_from_flags(copy, cfg.spec.n());
    }
    if (o.given("N")) cfg.N_values = o.N_values;
    if (o.given("seed")) cfg.master_seed = o.seed;
    if (o.given("runs")) cfg.runs_per_setting = o.runs;
    if (o.given("horizon")) cfg.T_horizon = o.horizon;
    if (o.given("step")) cfg.ode_step = o.step;
    if (o.given("out")) cfg.output_dir = o.out;
    if (o.given("max-iters")) cfg.max_iters = o.max_iters;
    if (o.given("record-every")) cfg.record_every = o.record_every;
    if (o.given("tol")) cfg.limit_tolerance = o.tol;
    if (o.given("t-max")) cfg.T_max = o.t_max;
    if (o.given("threads")) cfg.threads = o.threads;
    if (o.given("grid")) cfg.grid_resolution = o.grid;
    if (o.given("x0")) cfg.x0 = o.x0;
    cfg.validate();
    return cfg;
}

/// Sends `content` to output_dir/filename, or to stdout when no directory is set.
void emit(const ExperimentConfig& cfg, const std::string& filename, const std::string& content) {
    if (cfg.output_dir.empty()) {
        std::cout << content;
        return;
    }
    std::filesystem::create_directories(cfg.output_dir);
    const auto path = std::filesystem::path(cfg.output_dir) / filename;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << content;
    std::cerr << "wrote " << path.string() << '\n';
}

std::vector<double> start_point(const ExperimentConfig& cfg) {
    return cfg.x0.value_or(std::vector<double>(cfg.spec.n(), 0.5));
}

void cmd_run(const ExperimentConfig& cfg) {
    RunOptions opts;
    opts.alpha_steps = cfg.N_values.front();
    if (cfg.x0) opts.initial = ProbabilityVector::from_values(*cfg.x0, opts.alpha_steps);
    opts.max_iters = cfg.max_iters;
    opts.seed = cfg.master_seed;
    opts.record_every = cfg.record_every;
    const auto traj = run(cfg.spec, opts);
    std::ostringstream os;
    write_jsonl(os, traj, cfg.spec, {{"provenance", provenance(cfg, "run")}});
    emit(cfg, "trajectory.jsonl", os.str());
}

void cmd_drift(const ExperimentConfig& cfg) {
    const DriftModel model(cfg.spec);
    std::ostringstream os;
    write_csv_provenance(os, cfg, "drift");
    write_drift_grid_csv(os, model, cfg.grid_resolution);
    emit(cfg, "drift.csv", os.str());
}

void cmd_ode(const ExperimentConfig& cfg) {
    const auto traj = integrate(DriftModel(cfg.spec), start_point(cfg), cfg.ode_step, cfg.T_horizon);
    std::ostringstream os;
    write_jsonl(os, traj, cfg.spec, {{"provenance", provenance(cfg, "ode")}});
    emit(cfg, "ode.jsonl", os.str());
}

void cmd_classify(const ExperimentConfig& cfg) {
    const auto report = classify_all(cfg.spec);
    std::ostringstream os;
    write_csv_provenance(os, cfg, "classify");
    write_classify_csv(os, report);
    emit(cfg, "classify.csv", os.str());
}

void cmd_localmaxima(const ExperimentConfig& cfg) {
    const auto report = enumerate_local_maxima(cfg.spec);
    std::ostringstream os;
    write_csv_provenance(os, cfg, "localmaxima");
    write_local_maxima_csv(os, cfg.spec, report);
    emit(cfg, "localmaxima.csv", os.str());
}

void cmd_montecarlo(const ExperimentConfig& cfg) {
    const auto result = monte_carlo(cfg);
    nlohmann::json summary = {{"provenance", provenance(cfg, "montecarlo")},
                              {"config", cfg.to_json()},
                              {"result", result.to_json()}};
    emit(cfg, "montecarlo.json", summary.dump(2) + "\n");
}

void cmd_alphasweep(const ExperimentConfig& cfg) {
    const auto rows = alpha_sweep(cfg);
    std::ostringstream csv;
    write_csv_provenance(csv, cfg, "alphasweep");
    write_sweep_csv(csv, rows);
    emit(cfg, "alphasweep.csv", csv.str());
    if (!cfg.output_dir.empty()) {
        nlohmann::json summary = {{"provenance", provenance(cfg, "alphasweep")},
                                  {"config", cfg.to_json()},
                                  {"rows", nlohmann::json::array()}};
        for (const auto& r : rows) {
            summary["rows"].push_back({{"N", r.N},
                                       {"alpha", r.alpha},
                                       {"median", r.median},
                                       {"q90", r.q90},
                                       {"max", r.max},
                                       {"sup_distances", r.values}});
        }
        emit(cfg, "alphasweep.json", summary.dump(2) + "\n");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"compact GA and its mean-field ODE"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    struct Command {
        const char* name;
        const char* help;
        void (*action)(const ExperimentConfig&);
    };
    const std::vector<Command> commands = {
        {"run", "single cGA trajectory as JSON lines", cmd_run},
        {"drift", "drift field on a grid as CSV", cmd_drift},
        {"ode", "integrate the limiting ODE, JSON lines", cmd_ode},
        {"classify", "stability of every corner vs. local maxima, CSV", cmd_classify},
        {"montecarlo", "terminal-corner statistics over seeded runs, JSON", cmd_montecarlo},
        {"alphasweep", "sup-distance between cGA and ODE per N, CSV", cmd_alphasweep},
        {"localmaxima", "brute-force local maxima, CSV", cmd_localmaxima},
    };
    std::vector<Overrides> per_command(commands.size());
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < commands.size(); ++i) {
        auto* sub = app.add_subcommand(commands[i].name, commands[i].help);
        add_common_options(sub, per_command[i]);
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    for (std::size_t i = 0; i < commands.size(); ++i) {
        if (!subs[i]->parsed()) continue;
        try {
            commands[i].action(build_config(per_command[i]));
            return 0;
        } catch (const InternalError& e) {
            std::cerr << "internal error: " << e.what() << '\n';
            return 2;
        } catch (const Error& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 1;
        } catch (const std::exception& e) {
            std::cerr << "internal error: " << e.what() << '\n';
            return 2;
        }
    }
    return 1;
}
