#pragma once

/// The compact GA: sampling, pairwise competition, the +/-alpha update and
/// trajectory recording with its step-function time interpolation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "landscape.hpp"
#include "rng.hpp"

namespace cgaode {

/// Probability vector on the grid {0, alpha, 2 alpha, ..., 1}, alpha = 1/(2N).
/// Coordinates are stored as integer levels so the grid invariant holds by
/// construction and the vector can never leave [0, 1].
class ProbabilityVector {
public:
    ProbabilityVector(std::vector<std::uint32_t> levels, std::uint32_t alpha_steps)
        : levels_(std::move(levels)), alpha_steps_(alpha_steps) {
        if (alpha_steps_ == 0) {
            throw DomainError("alpha_steps N must be at least 1");
        }
        if (levels_.empty()) {
            throw DomainError("probability vector must have at least one coordinate");
        }
        for (auto l : levels_) {
            if (l > 2 * alpha_steps_) {
                throw DomainError("probability level outside [0, 1]");
            }
        }
    }

    static ProbabilityVector center(std::size_t n, std::uint32_t alpha_steps) {
        return {std::vector<std::uint32_t>(n, alpha_steps), alpha_steps};
    }

    static ProbabilityVector corner(const Solution& y, std::uint32_t alpha_steps) {
        std::vector<std::uint32_t> levels(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            levels[i] = y[i] ? 2 * alpha_steps : 0;
        }
        return {std::move(levels), alpha_steps};
    }

    /// Accepts only values that sit exactly on the alpha grid.
    static ProbabilityVector from_values(std::span<const double> p, std::uint32_t alpha_steps) {
        std::vector<std::uint32_t> levels(p.size());
        const double scale = 2.0 * alpha_steps;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (!(p[i] >= 0.0 && p[i] <= 1.0)) {
                throw DomainError("probability outside [0, 1]");
            }
            const double level = p[i] * scale;
            if (level != std::floor(level)) {
                throw DomainError("probability " + std::to_string(p[i]) +
                                  " is not a multiple of alpha = 1/(2N)");
            }
            levels[i] = static_cast<std::uint32_t>(level);
        }
        return {std::move(levels), alpha_steps};
    }

    [[nodiscard]] std::size_t size() const noexcept { return levels_.size(); }
    [[nodiscard]] std::uint32_t alpha_steps() const noexcept { return alpha_steps_; }
    [[nodiscard]] double alpha() const noexcept { return 1.0 / (2.0 * alpha_steps_); }
    [[nodiscard]] std::uint32_t level(std::size_t i) const { return levels_[i]; }
    [[nodiscard]] const std::vector<std::uint32_t>& levels() const noexcept { return levels_; }

    [[nodiscard]] double operator[](std::size_t i) const {
        return static_cast<double>(levels_[i]) / (2.0 * alpha_steps_);
    }

    [[nodiscard]] std::vector<double> values() const {
        std::vector<double> v(levels_.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = (*this)[i];
        return v;
    }

    /// True when every coordinate is 0 or 1.
    [[nodiscard]] bool is_deterministic() const noexcept {
        for (auto l : levels_) {
            if (l != 0 && l != 2 * alpha_steps_) return false;
        }
        return true;
    }

    /// The corner this vector sits on; DomainError if it is interior.
    [[nodiscard]] Solution as_corner() const {
        if (!is_deterministic()) {
            throw DomainError("probability vector is not a deterministic configuration");
        }
        std::vector<std::uint8_t> bits(levels_.size());
        for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = levels_[i] == 0 ? 0 : 1;
        return Solution(std::move(bits));
    }

    /// p + alpha (w - l), coordinatewise.
    [[nodiscard]] ProbabilityVector updated(const Solution& winner, const Solution& loser) const {
        require_same_length(size(), winner.size(), "update (winner)");
        require_same_length(size(), loser.size(), "update (loser)");
        ProbabilityVector out = *this;
        for (std::size_t i = 0; i < levels_.size(); ++i) {
            if (winner[i] == loser[i]) continue;
            if (winner[i] == 1) {
                if (out.levels_[i] == 2 * alpha_steps_) throw InternalError("update left [0, 1]");
                ++out.levels_[i];
            } else {
                if (out.levels_[i] == 0) throw InternalError("update left [0, 1]");
                --out.levels_[i];
            }
        }
        return out;
    }

    friend bool operator==(const ProbabilityVector&, const ProbabilityVector&) = default;

private:
    std::vector<std::uint32_t> levels_;
    std::uint32_t alpha_steps_;
};

/// Each bit is 1 with probability p_i, drawn independently. Draws are exact:
/// bit i is 1 iff a uniform integer in [0, 2N) falls below the level of p_i.
inline Solution sample_solution(const ProbabilityVector& pv, Rng& rng) {
    const std::uint64_t denom = 2ULL * pv.alpha_steps();
    std::vector<std::uint8_t> bits(pv.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
        bits[i] = rng.below(denom) < pv.level(i) ? 1 : 0;
    }
    return Solution(std::move(bits));
}

struct Competition {
    Solution winner;
    Solution loser;
};

/// Pairwise tournament. On an exact fitness tie the first sample wins.
inline Competition compete(const Solution& a, const Solution& b, const FitnessSpec& spec) {
    require_same_length(a.size(), b.size(), "compete");
    require_same_length(spec.n(), a.size(), "compete");
    if (spec.value_at(a.index()) >= spec.value_at(b.index())) {
        return {a, b};
    }
    return {b, a};
}

struct StepOutcome {
    ProbabilityVector next;
    Competition competition;
};

inline StepOutcome step_with_outcome(const ProbabilityVector& pv, const FitnessSpec& spec,
                                     Rng& rng) {
    require_same_length(spec.n(), pv.size(), "step");
    auto a = sample_solution(pv, rng);
    auto b = sample_solution(pv, rng);
    auto c = compete(a, b, spec);
    auto next = pv.updated(c.winner, c.loser);
    return {std::move(next), std::move(c)};
}

inline ProbabilityVector step(const ProbabilityVector& pv, const FitnessSpec& spec, Rng& rng) {
    return step_with_outcome(pv, spec, rng).next;
}

struct StochasticTrajectory {
    /// Snapshots p(k) for k in `steps`; steps[0] == 0 and steps.back() == iterations.
    std::vector<ProbabilityVector> states;
    std::vector<std::uint64_t> steps;
    std::uint32_t alpha_steps = 1;
    std::uint64_t iterations = 0;
    std::uint64_t record_every = 1;
    std::uint64_t rng_seed = 0;
    bool terminated = false;

    [[nodiscard]] double alpha() const noexcept { return 1.0 / (2.0 * alpha_steps); }
    [[nodiscard]] const ProbabilityVector& final_state() const { return states.back(); }
};

struct RunOptions {
    std::uint32_t alpha_steps = 1;
    std::optional<ProbabilityVector> initial;
    /// Defaults to 50 * (2N) * n.
    std::optional<std::uint64_t> max_iters;
    std::uint64_t seed = 0;
    std::uint64_t record_every = 1;
};

inline std::uint64_t default_max_iters(std::uint32_t alpha_steps, std::size_t n) {
    return 50ULL * 2ULL * alpha_steps * n;
}

/// Iterates until every coordinate is 0 or 1 or the budget runs out.
inline StochasticTrajectory run(const FitnessSpec& spec, const RunOptions& opts) {
    if (opts.alpha_steps == 0) throw DomainError("N must be at least 1");
    if (opts.record_every == 0) throw DomainError("record_every must be at least 1");
    auto pv = opts.initial ? *opts.initial : ProbabilityVector::center(spec.n(), opts.alpha_steps);
    require_same_length(spec.n(), pv.size(), "run initial configuration");
    if (pv.alpha_steps() != opts.alpha_steps) {
        throw DomainError("initial configuration uses a different alpha grid");
    }
    const auto budget = opts.max_iters.value_or(default_max_iters(opts.alpha_steps, spec.n()));

    StochasticTrajectory traj;
    traj.alpha_steps = opts.alpha_steps;
    traj.record_every = opts.record_every;
    traj.rng_seed = opts.seed;
    traj.states.push_back(pv);
    traj.steps.push_back(0);

    Rng rng(opts.seed);
    std::uint64_t k = 0;
    while (!pv.is_deterministic() && k < budget) {
        pv = step(pv, spec, rng);
        ++k;
        if (k % opts.record_every == 0) {
            traj.states.push_back(pv);
            traj.steps.push_back(k);
        }
    }
    if (traj.steps.back() != k) {
        traj.states.push_back(pv);
        traj.steps.push_back(k);
    }
    traj.iterations = k;
    traj.terminated = pv.is_deterministic();
    return traj;
}

/// Continuous-time embedding p^alpha(t) = p(k) for t in [k alpha, (k+1) alpha).
/// Holds a reference; the trajectory must outlive it.
class InterpolatedProcess {
public:
    explicit InterpolatedProcess(const StochasticTrajectory& traj) : traj_(&traj) {}

    [[nodiscard]] const StochasticTrajectory& trajectory() const noexcept { return *traj_; }

    /// Right end of the interval on which the process is defined. A terminated
    /// run sits in an absorbing corner, so it extends to infinity.
    [[nodiscard]] double horizon() const noexcept {
        if (traj_->terminated) return std::numeric_limits<double>::infinity();
        return static_cast<double>(traj_->iterations + 1) * traj_->alpha();
    }

    /// Step index k with t in [k alpha, (k+1) alpha).
    [[nodiscard]] std::uint64_t step_index(double t) const {
        if (!(t >= 0.0)) throw RangeError("interpolation time must be non-negative");
        if (!(t < horizon())) {
            throw RangeError("time " + std::to_string(t) + " beyond recorded horizon " +
                             std::to_string(horizon()));
        }
        const auto k = static_cast<std::uint64_t>(std::floor(t * 2.0 * traj_->alpha_steps));
        return std::min(k, traj_->iterations);
    }

    [[nodiscard]] const ProbabilityVector& evaluate_at(double t) const {
        return state_at_step(step_index(t));
    }

    /// Snapshot p(k). Thinned trajectories answer only at recorded steps.
    [[nodiscard]] const ProbabilityVector& state_at_step(std::uint64_t k) const {
        if (k >= traj_->iterations) return traj_->states.back();
        if (k % traj_->record_every != 0) {
            throw RangeError("step " + std::to_string(k) +
                             " was not recorded (trajectory thinned every " +
                             std::to_string(traj_->record_every) + ")");
        }
        return traj_->states[k / traj_->record_every];
    }

private:
    const StochasticTrajectory* traj_;
};

inline InterpolatedProcess interpolate(const StochasticTrajectory& traj) {
    return InterpolatedProcess(traj);
}

/// JSON-lines export: one header record, then {"k": step, "p": [...]} per snapshot.
inline void write_jsonl(std::ostream& out, const StochasticTrajectory& traj,
                        const FitnessSpec& spec, const nlohmann::json& extra_header = {}) {
    nlohmann::json header = {
        {"n", spec.n()},
        {"N", traj.alpha_steps},
        {"alpha", traj.alpha()},
        {"seed", traj.rng_seed},
        {"spec", spec.to_json()},
        {"iterations", traj.iterations},
        {"terminated", traj.terminated},
        {"record_every", traj.record_every},
    };
    if (extra_header.is_object()) {
        for (const auto& [key, value] : extra_header.items()) header[key] = value;
    }
    out << header.dump() << '\n';
    for (std::size_t j = 0; j < traj.states.size(); ++j) {
        nlohmann::json rec = {{"k", traj.steps[j]}, {"p", traj.states[j].values()}};
        out << rec.dump() << '\n';
    }
}

}  // namespace cgaode
