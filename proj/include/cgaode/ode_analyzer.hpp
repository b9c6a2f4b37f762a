#pragma once

/// The limiting ODE dX/dt = f(X): fixed-step RK4 integration, limit
/// detection, corner stability classification and trajectory distances.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cga_engine.hpp"
#include "core.hpp"
#include "drift_field.hpp"
#include "io.hpp"
#include "landscape.hpp"

namespace cgaode {

inline constexpr double kDefaultOdeStep = 1e-2;
inline constexpr double kDefaultLimitTolerance = 1e-8;
inline constexpr double kDefaultMaxTime = 200.0;

struct OdeTrajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    double step = kDefaultOdeStep;
    /// Number of coordinate clamps back into [0, 1] over the whole run.
    std::uint64_t clamp_count = 0;

    [[nodiscard]] const std::vector<double>& initial() const { return states.front(); }
    [[nodiscard]] double end_time() const { return times.back(); }

    /// Linear interpolation between grid points; exact at grid points.
    [[nodiscard]] std::vector<double> at(double t) const {
        if (!(t >= 0.0) || t > end_time() * (1.0 + 1e-12)) {
            throw RangeError("time " + std::to_string(t) + " outside ODE trajectory");
        }
        auto it = std::upper_bound(times.begin(), times.end(), t);
        if (it == times.end()) return states.back();
        const auto hi = static_cast<std::size_t>(it - times.begin());
        const auto lo = hi - 1;
        if (times[lo] == t) return states[lo];
        const double w = (t - times[lo]) / (times[hi] - times[lo]);
        std::vector<double> x(states[lo].size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = states[lo][i] + w * (states[hi][i] - states[lo][i]);
        }
        return x;
    }
};

namespace detail {

inline void axpy(std::vector<double>& out, std::span<const double> x, double a,
                 std::span<const double> y) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + a * y[i];
}

inline void require_finite(std::span<const double> f) {
    for (double v : f) {
        if (!std::isfinite(v)) throw InternalError("non-finite drift value");
    }
}

/// One classical RK4 step of size h; returns the number of clamped coordinates.
inline std::uint64_t rk4_step(const DriftModel& model, std::vector<double>& x, double h,
                              std::vector<double>& scratch) {
    const auto k1 = model.drift(x);
    require_finite(k1);
    axpy(scratch, x, h / 2, k1);
    const auto k2 = model.drift(scratch);
    axpy(scratch, x, h / 2, k2);
    const auto k3 = model.drift(scratch);
    axpy(scratch, x, h, k3);
    const auto k4 = model.drift(scratch);
    std::uint64_t clamps = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if (x[i] < 0.0) {
            x[i] = 0.0;
            ++clamps;
        } else if (x[i] > 1.0) {
            x[i] = 1.0;
            ++clamps;
        }
    }
    return clamps;
}

inline void check_start(const DriftModel& model, std::span<const double> x0, double h) {
    require_same_length(model.n(), x0.size(), "initial configuration");
    require_probabilities(x0);
    if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("integration step must be positive");
}

inline double sup_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double euclidean(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace detail

/// Integrates from x0 over [0, T] with step h, recording every step. The final
/// step is shortened so the grid ends exactly at T.
inline OdeTrajectory integrate(const DriftModel& model, std::span<const double> x0, double h,
                               double T) {
    detail::check_start(model, x0, h);
    if (!(T >= 0.0) || !std::isfinite(T)) throw DomainError("horizon must be non-negative");
    OdeTrajectory traj;
    traj.step = h;
    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> scratch(x.size());
    traj.times.push_back(0.0);
    traj.states.push_back(x);
    const auto full_steps = static_cast<std::uint64_t>(std::floor(T / h * (1.0 + 1e-12)));
    for (std::uint64_t k = 1; k <= full_steps; ++k) {
        traj.clamp_count += detail::rk4_step(model, x, h, scratch);
        traj.times.push_back(std::min(static_cast<double>(k) * h, T));
        traj.states.push_back(x);
    }
    const double remaining = T - traj.times.back();
    if (remaining > 0.0) {
        traj.clamp_count += detail::rk4_step(model, x, remaining, scratch);
        traj.times.push_back(T);
        traj.states.push_back(x);
    }
    return traj;
}

inline OdeTrajectory integrate(const FitnessSpec& spec, std::span<const double> x0, double h,
                               double T) {
    return integrate(DriftModel(spec), x0, h, T);
}

struct LimitResult {
    std::vector<double> limit;
    bool converged = false;
    /// Time at which the drift criterion was met (or T_max).
    double time = 0.0;
    double drift_norm = 0.0;
    /// Corner closest to the limit and its Euclidean distance; reported only.
    Solution nearest_corner;
    double corner_distance = 0.0;
    OdeTrajectory trajectory;
};

inline Solution nearest_corner(std::span<const double> x) {
    std::vector<std::uint8_t> bits(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) bits[i] = x[i] >= 0.5 ? 1 : 0;
    return Solution(std::move(bits));
}

/// Integrates until ||f(X)||_inf < tol or t reaches T_max.
inline LimitResult find_limit(const DriftModel& model, std::span<const double> x0,
                              double tol = kDefaultLimitTolerance,
                              double T_max = kDefaultMaxTime, double h = kDefaultOdeStep) {
    detail::check_start(model, x0, h);
    if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
    if (!(T_max >= 0.0)) throw DomainError("T_max must be non-negative");
    LimitResult res;
    auto& traj = res.trajectory;
    traj.step = h;
    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> scratch(x.size());
    traj.times.push_back(0.0);
    traj.states.push_back(x);
    double norm = detail::sup_norm(model.drift(x));
    std::uint64_t k = 0;
    double t = 0.0;
    while (norm >= tol && t < T_max) {
        const double dt = std::min(h, T_max - t);
        traj.clamp_count += detail::rk4_step(model, x, dt, scratch);
        ++k;
        t = std::min(static_cast<double>(k) * h, T_max);
        traj.times.push_back(t);
        traj.states.push_back(x);
        norm = detail::sup_norm(model.drift(x));
    }
    res.limit = x;
    res.converged = norm < tol;
    res.time = t;
    res.drift_norm = norm;
    res.nearest_corner = nearest_corner(x);
    std::vector<double> c(x.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = res.nearest_corner[i];
    res.corner_distance = detail::euclidean(x, c);
    return res;
}

enum class Stability { asymptotically_stable, unstable };

inline std::string to_string(Stability s) {
    return s == Stability::asymptotically_stable ? "asymptotically_stable" : "unstable";
}

struct StabilityVerdict {
    Solution corner;
    Stability verdict = Stability::unstable;
    std::vector<double> eigenvalues;
    bool local_max = false;
};

/// Lyapunov's indirect method on the analytic corner Jacobian.
inline StabilityVerdict classify_corner(const DriftModel& model, const Solution& corner) {
    const auto jac = model.jacobian_analytic(corner);
    StabilityVerdict v;
    v.corner = corner;
    v.eigenvalues = jac.eigenvalues;
    const bool all_negative = std::all_of(v.eigenvalues.begin(), v.eigenvalues.end(),
                                          [](double e) { return e < 0.0; });
    v.verdict = all_negative ? Stability::asymptotically_stable : Stability::unstable;
    v.local_max = is_local_maximum(model.spec(), corner) != LocalMaxStatus::not_max;
    return v;
}

/// dF/dt along the flow: ||f(p)||^2.
inline double lyapunov_rate(const DriftModel& model, std::span<const double> p) {
    const auto f = model.drift(p);
    double s = 0.0;
    for (double v : f) s += v * v;
    return s;
}

/// Per-step increments f(X_k) . (X_{k+1} - X_k) of the discrete line integral.
inline std::vector<double> lyapunov_increments(const DriftModel& model, const OdeTrajectory& traj) {
    std::vector<double> inc;
    inc.reserve(traj.states.size());
    for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
        const auto f = model.drift(traj.states[k]);
        double s = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            s += f[i] * (traj.states[k + 1][i] - traj.states[k][i]);
        }
        inc.push_back(s);
    }
    return inc;
}

/// sup over [0, T] of ||a(t) - b(t)||, on the union of both time grids.
inline double sup_distance(const OdeTrajectory& a, const OdeTrajectory& b, double T) {
    if (a.end_time() < T || b.end_time() < T) throw RangeError("trajectory shorter than horizon");
    require_same_length(a.initial().size(), b.initial().size(), "sup_distance");
    double worst = 0.0;
    for (const auto* src : {&a, &b}) {
        for (double t : src->times) {
            if (t > T) break;
            worst = std::max(worst, detail::euclidean(a.at(t), b.at(t)));
        }
    }
    worst = std::max(worst, detail::euclidean(a.at(T), b.at(T)));
    return worst;
}

/// Step process against an ODE solution: the ODE grid points, every jump
/// time k alpha (both sides of the jump) and T itself are checked.
inline double sup_distance(const InterpolatedProcess& a, const OdeTrajectory& b, double T) {
    const auto& traj = a.trajectory();
    if (traj.record_every != 1) throw RangeError("sup_distance needs an unthinned trajectory");
    if (!(T < a.horizon())) throw RangeError("horizon beyond the recorded stochastic trajectory");
    if (b.end_time() < T) throw RangeError("ODE trajectory shorter than horizon");
    require_same_length(traj.states.front().size(), b.initial().size(), "sup_distance");
    double worst = 0.0;
    auto gap = [&](const ProbabilityVector& p, double t) {
        worst = std::max(worst, detail::euclidean(p.values(), b.at(t)));
    };
    for (double t : b.times) {
        if (t > T) break;
        gap(a.evaluate_at(t), t);
    }
    const auto last_jump = a.step_index(T);
    for (std::uint64_t k = 1; k <= last_jump; ++k) {
        const double t = static_cast<double>(k) * traj.alpha();
        gap(a.state_at_step(k), t);
        gap(a.state_at_step(k - 1), t);
    }
    gap(a.evaluate_at(T), T);
    return worst;
}

inline void write_jsonl(std::ostream& out, const OdeTrajectory& traj, const FitnessSpec& spec,
                        const nlohmann::json& extra_header = {}) {
    nlohmann::json header = {
        {"n", spec.n()},
        {"spec", spec.to_json()},
        {"step", traj.step},
        {"T", traj.end_time()},
        {"clamp_count", traj.clamp_count},
    };
    if (extra_header.is_object()) {
        for (const auto& [key, value] : extra_header.items()) header[key] = value;
    }
    out << header.dump() << '\n';
    for (std::size_t j = 0; j < traj.states.size(); ++j) {
        nlohmann::json rec = {{"t", traj.times[j]}, {"p", traj.states[j]}};
        out << rec.dump() << '\n';
    }
}

inline std::string join_eigenvalues(const std::vector<double>& eig) {
    std::string s;
    for (std::size_t i = 0; i < eig.size(); ++i) {
        if (i) s += ';';
        s += format_real(eig[i]);
    }
    return s;
}

/// CSV with columns corner,local_max,verdict,eigenvalues (';'-separated).
inline void write_stability_csv(std::ostream& out, const std::vector<StabilityVerdict>& rows) {
    out << "corner,local_max,verdict,eigenvalues\n";
    for (const auto& v : rows) {
        out << v.corner.to_string() << ',' << (v.local_max ? "true" : "false") << ','
            << to_string(v.verdict) << ',' << csv_field(join_eigenvalues(v.eigenvalues)) << '\n';
    }
}

}  // namespace cgaode
