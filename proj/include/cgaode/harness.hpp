#pragma once

/// Campaign runner: Monte Carlo convergence statistics, alpha sweeps of the
/// distance between the cGA and its ODE, and per-corner stability reports.
///
/// Runs are independent and may execute on several threads. Run r at
/// setting N draws from the stream derive_stream_seed(derive_stream_seed(
/// master_seed, N), r), so results do not depend on thread count, on the
/// order of N_values, or on scheduling.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cga_engine.hpp"
#include "core.hpp"
#include "drift_field.hpp"
#include "io.hpp"
#include "landscape.hpp"
#include "ode_analyzer.hpp"
#include "rng.hpp"

namespace cgaode {

struct ExperimentConfig {
    FitnessSpec spec = FitnessSpec::binval(4);
    std::vector<std::uint32_t> N_values{64};
    std::uint64_t runs_per_setting = 100;
    double T_horizon = 5.0;
    std::uint64_t master_seed = 0;
    std::string output_dir;
    double ode_step = kDefaultOdeStep;
    double limit_tolerance = kDefaultLimitTolerance;
    double T_max = kDefaultMaxTime;
    std::optional<std::uint64_t> max_iters;
    std::uint64_t record_every = 1;
    std::size_t grid_resolution = 11;
    std::optional<std::vector<double>> x0;
    /// 0 picks std::thread::hardware_concurrency(). Does not affect results.
    unsigned threads = 0;

    void validate() const {
        if (runs_per_setting < 1) throw ConfigError("runs_per_setting must be at least 1");
        if (N_values.empty()) throw ConfigError("N_values must not be empty");
        for (auto N : N_values) {
            if (N < 1) throw ConfigError("every N must be at least 1");
        }
        if (!(T_horizon >= 0.0) || !std::isfinite(T_horizon)) {
            throw ConfigError("T_horizon must be a non-negative number");
        }
        if (!(ode_step > 0.0)) throw ConfigError("ode step must be positive");
        if (!(limit_tolerance > 0.0)) throw ConfigError("limit tolerance must be positive");
        if (!(T_max >= 0.0)) throw ConfigError("T_max must be non-negative");
        if (record_every < 1) throw ConfigError("record_every must be at least 1");
        if (max_iters && *max_iters < 1) throw ConfigError("max_iters must be at least 1");
        if (x0) {
            if (x0->size() != spec.n()) throw ConfigError("x0 length does not match n");
            require_probabilities(*x0);
        }
    }

    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json j = {
            {"spec", spec.to_json()},
            {"N_values", N_values},
            {"runs_per_setting", runs_per_setting},
            {"T_horizon", T_horizon},
            {"master_seed", master_seed},
            {"output_dir", output_dir},
            {"ode_step", ode_step},
            {"tolerances", {{"limit", limit_tolerance}, {"T_max", T_max}}},
            {"record_every", record_every},
            {"grid_resolution", grid_resolution},
        };
        j["max_iters"] = max_iters ? nlohmann::json(*max_iters) : nlohmann::json(nullptr);
        j["x0"] = x0 ? nlohmann::json(*x0) : nlohmann::json(nullptr);
        return j;
    }

    static ExperimentConfig from_json(const nlohmann::json& j) {
        ExperimentConfig cfg;
        try {
            if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
            static const std::vector<std::string> known = {
                "spec",        "N_values",  "runs_per_setting", "T_horizon",      "master_seed",
                "output_dir",  "ode_step",  "tolerances",       "record_every",   "grid_resolution",
                "max_iters",   "x0",        "threads"};
            for (const auto& [key, value] : j.items()) {
                if (std::find(known.begin(), known.end(), key) == known.end()) {
                    throw ConfigError("unknown configuration field '" + key + "'");
                }
            }
            if (j.contains("spec")) cfg.spec = FitnessSpec::from_json(j.at("spec"));
            if (j.contains("N_values")) cfg.N_values = j.at("N_values").get<std::vector<std::uint32_t>>();
            if (j.contains("runs_per_setting")) cfg.runs_per_setting = j.at("runs_per_setting").get<std::uint64_t>();
            if (j.contains("T_horizon")) cfg.T_horizon = j.at("T_horizon").get<double>();
            if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
            if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
            if (j.contains("ode_step")) cfg.ode_step = j.at("ode_step").get<double>();
            if (j.contains("tolerances")) {
                const auto& t = j.at("tolerances");
                if (t.contains("limit")) cfg.limit_tolerance = t.at("limit").get<double>();
                if (t.contains("T_max")) cfg.T_max = t.at("T_max").get<double>();
            }
            if (j.contains("record_every")) cfg.record_every = j.at("record_every").get<std::uint64_t>();
            if (j.contains("grid_resolution")) cfg.grid_resolution = j.at("grid_resolution").get<std::size_t>();
            if (j.contains("max_iters") && !j.at("max_iters").is_null()) {
                cfg.max_iters = j.at("max_iters").get<std::uint64_t>();
            }
            if (j.contains("x0") && !j.at("x0").is_null()) cfg.x0 = j.at("x0").get<std::vector<double>>();
            if (j.contains("threads")) cfg.threads = j.at("threads").get<unsigned>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("malformed configuration: ") + e.what());
        }
        return cfg;
    }

    /// Fingerprint of everything that influences numeric output; the output
    /// location is left out.
    [[nodiscard]] std::string hash() const {
        auto j = to_json();
        j.erase("output_dir");
        return hex64(fnv1a64(j.dump()));
    }
};

/// Provenance block embedded in every output file.
inline nlohmann::json provenance(const ExperimentConfig& cfg, std::string_view command) {
    return {{"version", std::string(kVersion)},
            {"command", std::string(command)},
            {"config_hash", cfg.hash()},
            {"master_seed", cfg.master_seed}};
}

inline void write_csv_provenance(std::ostream& out, const ExperimentConfig& cfg,
                                 std::string_view command) {
    out << "# " << kVersion << " command=" << command << " config_hash=" << cfg.hash()
        << " master_seed=" << cfg.master_seed << '\n';
}

/// Calls body(i) for i in [0, count) on up to `threads` workers.
template <typename Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
    if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const auto i = next.fetch_add(1);
                if (i >= count || failed.load()) return;
                try {
                    body(i);
                } catch (...) {
                    if (!failed.exchange(true)) failure = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

inline std::uint64_t run_seed(std::uint64_t master_seed, std::uint32_t N, std::uint64_t run) {
    return derive_stream_seed(derive_stream_seed(master_seed, N), run);
}

/// Quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw DomainError("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

/// Budget that keeps a run alive at least until the horizon T.
inline std::uint64_t iteration_budget(const ExperimentConfig& cfg, std::uint32_t N) {
    const auto base = cfg.max_iters.value_or(default_max_iters(N, cfg.spec.n()));
    const auto horizon_steps = static_cast<std::uint64_t>(std::ceil(cfg.T_horizon * 2.0 * N)) + 1;
    return std::max(base, horizon_steps);
}

struct SettingRecord {
    std::uint32_t N = 0;
    double alpha = 0.0;
    std::map<std::string, std::uint64_t> convergence_counts;
    std::uint64_t non_terminated = 0;
    double mean_iterations = 0.0;
    /// Terminal corners that are not local maxima of g.
    std::uint64_t non_maximum_terminations = 0;
    std::vector<double> sup_distances;
    double sup_distance_median = 0.0;
    double sup_distance_q90 = 0.0;
};

struct CampaignResult {
    bool within_theorem_scope = true;
    std::vector<SettingRecord> settings;

    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json j;
        j["scope"] = within_theorem_scope ? "injective" : "outside theorem scope";
        j["settings"] = nlohmann::json::array();
        for (const auto& s : settings) {
            j["settings"].push_back({
                {"N", s.N},
                {"alpha", s.alpha},
                {"convergence_counts", s.convergence_counts},
                {"non_terminated", s.non_terminated},
                {"mean_iterations", s.mean_iterations},
                {"non_maximum_terminations", s.non_maximum_terminations},
                {"sup_distance_median", s.sup_distance_median},
                {"sup_distance_q90", s.sup_distance_q90},
            });
        }
        return j;
    }
};

namespace detail {

struct RunSummary {
    std::optional<Solution> corner;
    std::uint64_t iterations = 0;
    double sup_distance = 0.0;
};

inline ProbabilityVector start_vector(const ExperimentConfig& cfg, std::uint32_t N) {
    if (cfg.x0) return ProbabilityVector::from_values(*cfg.x0, N);
    return ProbabilityVector::center(cfg.spec.n(), N);
}

inline std::vector<RunSummary> run_setting(const ExperimentConfig& cfg, std::uint32_t N,
                                           const OdeTrajectory* ode) {
    const auto initial = start_vector(cfg, N);
    std::vector<RunSummary> out(cfg.runs_per_setting);
    parallel_for(out.size(), cfg.threads, [&](std::size_t r) {
        RunOptions opts;
        opts.alpha_steps = N;
        opts.initial = initial;
        opts.max_iters = iteration_budget(cfg, N);
        opts.seed = run_seed(cfg.master_seed, N, r);
        const auto traj = run(cfg.spec, opts);
        RunSummary s;
        s.iterations = traj.iterations;
        if (traj.terminated) s.corner = traj.final_state().as_corner();
        if (ode) s.sup_distance = sup_distance(interpolate(traj), *ode, cfg.T_horizon);
        out[r] = std::move(s);
    });
    return out;
}

}  // namespace detail

/// Seeded cGA runs from the centre (or x0) for every N; tallies terminal
/// corners and checks each against the local-maximum oracle.
inline CampaignResult monte_carlo(const ExperimentConfig& cfg) {
    cfg.validate();
    const DriftModel model(cfg.spec);
    CampaignResult result;
    result.within_theorem_scope = model.injective();
    const auto x0 = cfg.x0.value_or(std::vector<double>(cfg.spec.n(), 0.5));
    const auto ode = integrate(model, x0, cfg.ode_step, cfg.T_horizon);
    for (auto N : cfg.N_values) {
        SettingRecord rec;
        rec.N = N;
        rec.alpha = 1.0 / (2.0 * N);
        const auto runs = detail::run_setting(cfg, N, &ode);
        double iters = 0.0;
        for (const auto& r : runs) {
            iters += static_cast<double>(r.iterations);
            rec.sup_distances.push_back(r.sup_distance);
            if (!r.corner) {
                ++rec.non_terminated;
                continue;
            }
            ++rec.convergence_counts[r.corner->to_string()];
            if (is_local_maximum(cfg.spec, *r.corner) == LocalMaxStatus::not_max) {
                ++rec.non_maximum_terminations;
            }
        }
        rec.mean_iterations = iters / static_cast<double>(runs.size());
        rec.sup_distance_median = quantile(rec.sup_distances, 0.5);
        rec.sup_distance_q90 = quantile(rec.sup_distances, 0.9);
        result.settings.push_back(std::move(rec));
    }
    return result;
}

struct SweepRow {
    std::uint32_t N = 0;
    double alpha = 0.0;
    std::uint64_t runs = 0;
    double median = 0.0;
    double q90 = 0.0;
    double max = 0.0;
    std::vector<double> values;
};

/// For each alpha = 1/(2N): h_T = sup_{t <= T} ||p^alpha(t) - X(t)|| over seeded runs.
inline std::vector<SweepRow> alpha_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.N_values.size() < 2) throw ConfigError("alpha sweep needs at least two N values");
    if (!(cfg.T_horizon > 0.0)) throw ConfigError("alpha sweep needs a positive horizon");
    const DriftModel model(cfg.spec);
    const auto x0 = cfg.x0.value_or(std::vector<double>(cfg.spec.n(), 0.5));
    const auto ode = integrate(model, x0, cfg.ode_step, cfg.T_horizon);
    std::vector<SweepRow> rows;
    for (auto N : cfg.N_values) {
        SweepRow row;
        row.N = N;
        row.alpha = 1.0 / (2.0 * N);
        for (const auto& r : detail::run_setting(cfg, N, &ode)) row.values.push_back(r.sup_distance);
        row.runs = row.values.size();
        row.median = quantile(row.values, 0.5);
        row.q90 = quantile(row.values, 0.9);
        row.max = *std::max_element(row.values.begin(), row.values.end());
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "N,alpha,runs,median_sup_distance,q90_sup_distance,max_sup_distance\n";
    for (const auto& r : rows) {
        out << r.N << ',' << format_real(r.alpha) << ',' << r.runs << ',' << format_real(r.median)
            << ',' << format_real(r.q90) << ',' << format_real(r.max) << '\n';
    }
}

struct ClassifyRow {
    Solution corner;
    double fitness = 0.0;
    LocalMaxStatus local_max = LocalMaxStatus::not_max;
    StabilityVerdict verdict;
    bool agree = false;
};

struct ClassifyReport {
    std::vector<ClassifyRow> rows;
    std::size_t agreements = 0;
    std::size_t stable = 0;

    [[nodiscard]] bool all_agree() const { return agreements == rows.size(); }
};

/// Stability verdict for every corner next to the brute-force local-max flag.
inline ClassifyReport classify_all(const FitnessSpec& spec) {
    require_within_cap(spec.n());
    const DriftModel model(spec);
    if (!model.injective()) {
        throw ScopeError("classify: fitness is not injective (injectivity guard); outside theorem scope");
    }
    ClassifyReport report;
    for (std::uint64_t i = 0; i < (std::uint64_t{1} << spec.n()); ++i) {
        ClassifyRow row;
        row.corner = Solution::from_index(i, spec.n());
        row.fitness = spec.value_at(i);
        row.local_max = is_local_maximum(spec, row.corner);
        row.verdict = classify_corner(model, row.corner);
        const bool stable = row.verdict.verdict == Stability::asymptotically_stable;
        row.agree = stable == (row.local_max == LocalMaxStatus::strict_local_max);
        report.agreements += row.agree ? 1 : 0;
        report.stable += stable ? 1 : 0;
        report.rows.push_back(std::move(row));
    }
    return report;
}

inline void write_classify_csv(std::ostream& out, const ClassifyReport& report) {
    out << "corner,fitness,local_max,verdict,eigenvalues,agreement\n";
    for (const auto& r : report.rows) {
        out << r.corner.to_string() << ',' << format_real(r.fitness) << ','
            << (r.local_max != LocalMaxStatus::not_max ? "true" : "false") << ','
            << to_string(r.verdict.verdict) << ','
            << csv_field(join_eigenvalues(r.verdict.eigenvalues)) << ','
            << (r.agree ? "true" : "false") << '\n';
    }
    out << "# agreement " << report.agreements << '/' << report.rows.size() << " ("
        << (report.all_agree() ? "100%" : "MISMATCH") << "), stable corners " << report.stable
        << '\n';
}

inline void write_local_maxima_csv(std::ostream& out, const FitnessSpec& spec,
                                   const LocalMaxReport& report) {
    out << "solution,fitness,strict\n";
    for (std::size_t i = 0; i < report.maxima.size(); ++i) {
        out << report.maxima[i].to_string() << ','
            << format_real(spec.value_at(report.maxima[i].index())) << ','
            << (report.strict_flags[i] ? "true" : "false") << '\n';
    }
}

}  // namespace cgaode
