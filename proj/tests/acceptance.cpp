// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <cgaode/cgaode.hpp>

using namespace cgaode;

namespace {

struct Named {
    std::string name;
    FitnessSpec spec;
};

FitnessSpec two_maxima_table() {
    return FitnessSpec::table({{"00", 3.0}, {"01", 1.0}, {"10", 2.0}, {"11", 4.0}});
}

/// Built-in injective landscapes up to length max_n.
std::vector<Named> suite(std::size_t min_n, std::size_t max_n, std::uint64_t random_seeds) {
    std::vector<Named> out;
    for (std::size_t n = min_n; n <= max_n; ++n) {
        out.push_back({"binval" + std::to_string(n), FitnessSpec::binval(n)});
        out.push_back({"perturbed_onemax" + std::to_string(n), FitnessSpec::perturbed_onemax(n)});
        std::vector<double> w;
        for (std::size_t i = 0; i < n; ++i) w.push_back((i % 2 ? -1.0 : 1.0) * (1.0 + 0.37 * static_cast<double>(i)));
        out.push_back({"linear" + std::to_string(n), FitnessSpec::linear(w)});
        for (std::uint64_t s = 0; s < random_seeds; ++s) {
            out.push_back({"random_injective" + std::to_string(n) + "/" + std::to_string(s),
                           FitnessSpec::random_injective(n, s)});
        }
    }
    if (min_n <= 2 && max_n >= 2) out.push_back({"two_maxima_table", two_maxima_table()});
    return out;
}

std::vector<double> random_interior(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p(n);
    for (auto& v : p) {
        do v = u(rng);
        while (v <= 0.0 || v >= 1.0);
    }
    return p;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << ". " << title << ": " << o.detail << " ["
              << fmt(secs) << " s]" << std::endl;
}

/// Trajectories from criterion 7, reused by the Lyapunov check.
std::vector<std::pair<const DriftModel*, OdeTrajectory>> limit_trajectories;
std::vector<std::unique_ptr<DriftModel>> limit_models;

std::string run_cli(const std::string& args) {
    const std::string cmd = std::string(CGAODE_CLI_PATH) + " " + args + " 2>/dev/null";
    std::string out;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) throw InternalError("cannot start " + cmd);
    std::array<char, 4096> buf{};
    std::size_t got = 0;
    while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), got);
    const int status = pclose(pipe);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) throw InternalError("command failed: " + args);
    return out;
}

}  // namespace

int main() {
    std::mt19937_64 rng(20240601);

    criterion(1, "corner stationarity", [] {
        double worst = 0.0;
        std::size_t corners = 0;
        for (const auto& [name, spec] : suite(1, 6, 5)) {
            const DriftModel m(spec);
            for (std::uint64_t c = 0; c < (1ULL << spec.n()); ++c) {
                std::vector<double> p(spec.n());
                for (std::size_t i = 0; i < p.size(); ++i) p[i] = bit_of(c, i, spec.n());
                for (double f : m.drift(p)) worst = std::max(worst, std::abs(f));
                ++corners;
            }
        }
        return Outcome{worst <= 1e-12, std::to_string(corners) + " corners, max |f_i| = " + fmt(worst) +
                                           " (tol 1e-12)"};
    });

    criterion(2, "interior non-stationarity", [&] {
        double smallest = INFINITY;
        std::size_t points = 0;
        for (const auto& [name, spec] : suite(1, 4, 5)) {
            const DriftModel m(spec);
            for (int k = 0; k < 1000; ++k) {
                const auto p = random_interior(rng, spec.n());
                double s = 0.0;
                for (double f : m.drift(p)) s += std::abs(f);
                smallest = std::min(smallest, s);
                ++points;
            }
        }
        return Outcome{smallest > 1e-12, std::to_string(points) + " points, min sum |f_i| = " + fmt(smallest) +
                                             " (must exceed 1e-12)"};
    });

    criterion(3, "drift formula equivalence", [&] {
        const auto specs = suite(1, 6, 10);
        double worst = 0.0;
        for (int k = 0; k < 200; ++k) {
            const auto& spec = specs[static_cast<std::size_t>(k) % specs.size()].spec;
            const DriftModel m(spec);
            const auto p = random_interior(rng, spec.n());
            const auto a = m.drift(p);
            const auto b = m.drift_naive(p);
            for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
        }
        const auto spot = drift(std::vector<double>{0.5, 0.5}, FitnessSpec::binval(2));
        const double spot_err = std::max(std::abs(spot[0] - 0.5), std::abs(spot[1] - 0.25));
        return Outcome{worst <= 1e-12 && spot_err <= 1e-12,
                       "200 pairs, max diff = " + fmt(worst) + "; binval2 centre f = (" + fmt(spot[0]) + ", " +
                           fmt(spot[1]) + ")"};
    });

    criterion(4, "winner/loser identity", [&] {
        const auto specs = suite(1, 6, 10);
        double worst = 0.0;
        for (int k = 0; k < 100; ++k) {
            const auto& spec = specs[static_cast<std::size_t>(k * 7) % specs.size()].spec;
            const DriftModel m(spec);
            const auto p = random_interior(rng, spec.n());
            for (std::uint64_t i = 0; i < (1ULL << spec.n()); ++i) {
                const auto y = Solution::from_index(i, spec.n());
                const double lhs = m.winner_prob(p, y) + m.loser_prob(p, y);
                worst = std::max(worst, std::abs(lhs - 2.0 * sampling_prob(p, y)));
            }
        }
        return Outcome{worst <= 1e-12, "100 configurations, max |W+L-2Pr| = " + fmt(worst)};
    });

    criterion(5, "stability classification", [] {
        std::size_t rows = 0, agree = 0, maxima = 0, exact = 0;
        for (const auto& [name, spec] : suite(2, 4, 20)) {
            const DriftModel m(spec);
            for (std::uint64_t c = 0; c < (1ULL << spec.n()); ++c) {
                const auto corner = Solution::from_index(c, spec.n());
                const auto v = classify_corner(m, corner);
                const bool local_max = is_local_maximum(spec, corner) != LocalMaxStatus::not_max;
                ++rows;
                if ((v.verdict == Stability::asymptotically_stable) == local_max) ++agree;
                if (local_max) {
                    ++maxima;
                    const auto& J = m.jacobian_analytic(corner).matrix;
                    bool ok = J.is_diagonal();
                    for (std::size_t i = 0; i < J.size(); ++i) ok = ok && J(i, i) == -2.0;
                    if (ok) ++exact;
                }
            }
        }
        return Outcome{agree == rows && exact == maxima,
                       "agreement " + std::to_string(agree) + "/" + std::to_string(rows) + ", diag(-2) at " +
                           std::to_string(exact) + "/" + std::to_string(maxima) + " local maxima"};
    });

    criterion(6, "Jacobian oracle", [&] {
        double corner_err = 0.0;
        for (const auto& [name, spec] : suite(1, 4, 5)) {
            const DriftModel m(spec);
            for (std::uint64_t c = 0; c < (1ULL << spec.n()); ++c) {
                const auto corner = Solution::from_index(c, spec.n());
                std::vector<double> p(spec.n());
                for (std::size_t i = 0; i < p.size(); ++i) p[i] = corner[i] ? 1.0 - 1e-5 : 1e-5;
                corner_err = std::max(corner_err,
                                      m.jacobian_numeric(p, 1e-5).max_abs_diff(m.jacobian_analytic(corner).matrix));
            }
        }
        const auto specs = suite(2, 4, 5);
        double asym = 0.0;
        for (int k = 0; k < 100; ++k) {
            const auto& spec = specs[static_cast<std::size_t>(k) % specs.size()].spec;
            const auto p = random_interior(rng, spec.n());
            std::vector<double> q(p);
            for (auto& v : q) v = std::clamp(v, 1e-3, 1.0 - 1e-3);
            asym = std::max(asym, DriftModel(spec).jacobian_numeric(q, 1e-5).asymmetry());
        }
        return Outcome{corner_err <= 1e-3 && asym <= 1e-6,
                       "near-corner max diff = " + fmt(corner_err) + " (tol 1e-3); interior max |J-J^T| = " +
                           fmt(asym) + " (tol 1e-6)"};
    });

    criterion(7, "ODE convergence", [&] {
        std::size_t starts = 0, ok = 0;
        double worst_norm = 0.0;
        for (const auto& [name, spec] : suite(1, 4, 5)) {
            limit_models.push_back(std::make_unique<DriftModel>(spec));
            const auto& m = *limit_models.back();
            for (int k = 0; k <= 100; ++k) {
                const auto x0 = k == 0 ? std::vector<double>(spec.n(), 0.5) : random_interior(rng, spec.n());
                auto r = find_limit(m, x0);
                ++starts;
                worst_norm = std::max(worst_norm, r.drift_norm);
                if (r.converged && r.drift_norm < 1e-8 && r.corner_distance < 1e-3 &&
                    is_local_maximum(spec, r.nearest_corner) != LocalMaxStatus::not_max) {
                    ++ok;
                }
                limit_trajectories.emplace_back(&m, std::move(r.trajectory));
            }
        }
        return Outcome{ok == starts, std::to_string(ok) + "/" + std::to_string(starts) +
                                         " starts reach a local-maximum corner, max ||f||_inf = " + fmt(worst_norm)};
    });

    criterion(8, "integrator accuracy", [] {
        const DriftModel m(FitnessSpec::binval(1));
        const std::vector<double> x0{0.5};
        const double exact = 1.0 / (1.0 + std::exp(-2.0));
        const double x1 = integrate(m, x0, 1e-3, 1.0).states.back()[0];
        const double e1 = std::abs(integrate(m, x0, 0.1, 1.0).states.back()[0] - exact);
        const double e2 = std::abs(integrate(m, x0, 0.05, 1.0).states.back()[0] - exact);
        const double order = std::log2(e1 / e2);
        return Outcome{std::abs(x1 - 0.880797) <= 1e-6 && std::abs(order - 4.0) < 0.5,
                       "X(1) = " + std::to_string(x1) + ", observed order " + fmt(order)};
    });

    criterion(9, "Lyapunov monotonicity", [] {
        double worst = INFINITY;
        std::size_t increments = 0;
        for (const auto& [model, traj] : limit_trajectories) {
            for (double inc : lyapunov_increments(*model, traj)) {
                worst = std::min(worst, inc);
                ++increments;
            }
        }
        return Outcome{!limit_trajectories.empty() && worst >= -1e-9,
                       std::to_string(limit_trajectories.size()) + " trajectories, " + std::to_string(increments) +
                           " increments, min = " + fmt(worst) + " (tol -1e-9)"};
    });

    criterion(10, "weak-convergence trend", [] {
        ExperimentConfig cfg;
        cfg.spec = FitnessSpec::binval(8);
        cfg.N_values = {32, 128, 512};
        cfg.runs_per_setting = 100;
        cfg.T_horizon = 5.0;
        cfg.master_seed = 1;
        const auto rows = alpha_sweep(cfg);
        bool decreasing = true;
        std::string medians;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i > 0 && !(rows[i].median < rows[i - 1].median)) decreasing = false;
            medians += (i ? ", " : "") + std::string("N=") + std::to_string(rows[i].N) + ": " + fmt(rows[i].median);
        }
        return Outcome{decreasing && rows.back().median < 0.15,
                       "median h_T " + medians + " (strictly decreasing, last < 0.15)"};
    });

    criterion(11, "Monte Carlo convergence", [] {
        ExperimentConfig cfg;
        cfg.spec = FitnessSpec::binval(4);
        cfg.N_values = {64};
        cfg.runs_per_setting = 200;
        cfg.master_seed = 11;
        const auto a = monte_carlo(cfg).settings.at(0);
        const std::uint64_t terminated = cfg.runs_per_setting - a.non_terminated;
        const auto top = a.convergence_counts.count("1111") ? a.convergence_counts.at("1111") : 0;
        const double frac = terminated ? static_cast<double>(top) / static_cast<double>(terminated) : 0.0;
        cfg.spec = two_maxima_table();
        const auto b = monte_carlo(cfg).settings.at(0);
        std::uint64_t at_maxima = 0, ended = 0;
        for (const auto& [corner, count] : b.convergence_counts) {
            ended += count;
            if (corner == "00" || corner == "11") at_maxima += count;
        }
        return Outcome{frac >= 0.95 && ended > 0 && at_maxima == ended,
                       "binval4 at 1111: " + fmt(100.0 * frac) + "% of " + std::to_string(terminated) +
                           "; table at 00/11: " + std::to_string(at_maxima) + "/" + std::to_string(ended)};
    });

    criterion(12, "reproducibility", [] {
        const std::vector<std::string> commands = {
            "run --spec binval --n 4 --N 16 --seed 3",
            "drift --spec random_injective --n 3 --spec-seed 2 --grid 4",
            "ode --spec binval --n 4 --horizon 3",
            "classify --spec random_injective --n 4 --spec-seed 7",
            "montecarlo --spec binval --n 4 --N 16 --N 32 --runs 20 --seed 5",
            "alphasweep --spec binval --n 4 --N 16 --N 32 --runs 20 --seed 5 --horizon 2",
            "localmaxima --spec random_injective --n 6 --spec-seed 4",
        };
        std::size_t same = 0;
        for (const auto& c : commands) {
            if (run_cli(c) == run_cli(c + " --threads 2")) ++same;
        }
        return Outcome{same == commands.size(),
                       std::to_string(same) + "/" + std::to_string(commands.size()) +
                           " subcommands byte-identical on rerun"};
    });

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
