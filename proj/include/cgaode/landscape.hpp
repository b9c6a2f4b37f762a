#pragma once

/// Pseudo-boolean fitness functions, the injectivity check and the
/// brute-force local-maximum oracle.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "rng.hpp"

namespace cgaode {

namespace kinds {

/// g(y) = sum_i y_i 2^(n-i).
struct BinVal {};

/// g(y) = sum_i w_i y_i.
struct Linear {
    std::vector<double> weights;
};

/// g(y) = onemax(y) + epsilon * binval(y).
struct PerturbedOneMax {
    double epsilon;
};

/// Explicit value per solution, indexed by Solution::index().
struct Table {
    std::vector<double> values;
};

/// A seeded pseudo-random permutation of {0, ..., 2^n - 1}.
struct RandomInjective {
    std::uint64_t seed;
};

}  // namespace kinds

/// Largest perturbation for which onemax levels keep their order:
/// epsilon * binval(y) < 1 for every y.
inline double perturbed_onemax_epsilon_bound(std::size_t n) {
    return 1.0 / (std::ldexp(1.0, static_cast<int>(n)) - 1.0);
}

/// Default perturbation 2^-n: exactly representable and below the bound.
inline double default_perturbation(std::size_t n) { return std::ldexp(1.0, -static_cast<int>(n)); }

class FitnessSpec {
public:
    using Kind = std::variant<kinds::BinVal, kinds::Linear, kinds::PerturbedOneMax, kinds::Table,
                              kinds::RandomInjective>;

    static FitnessSpec binval(std::size_t n) { return FitnessSpec(n, kinds::BinVal{}); }

    static FitnessSpec linear(std::vector<double> weights) {
        if (weights.empty()) {
            throw DomainError("linear fitness needs at least one weight");
        }
        const auto n = weights.size();
        return FitnessSpec(n, kinds::Linear{std::move(weights)});
    }

    static FitnessSpec perturbed_onemax(std::size_t n, std::optional<double> epsilon = {}) {
        const double eps = epsilon.value_or(default_perturbation(n));
        if (!(eps > 0.0) || !(eps < perturbed_onemax_epsilon_bound(n))) {
            throw DomainError("perturbed_onemax epsilon must lie in (0, 1/(2^n - 1))");
        }
        return FitnessSpec(n, kinds::PerturbedOneMax{eps});
    }

    static FitnessSpec table(std::size_t n, std::vector<double> values) {
        require_within_cap(n);
        if (values.size() != (std::uint64_t{1} << n)) {
            throw DimensionError("table needs exactly 2^n = " +
                                 std::to_string(std::uint64_t{1} << n) + " values");
        }
        return FitnessSpec(n, kinds::Table{std::move(values)});
    }

    /// Table from bitstring keys ("01" -> value); every solution must appear.
    static FitnessSpec table(const std::map<std::string, double>& entries) {
        if (entries.empty()) {
            throw DomainError("empty fitness table");
        }
        const std::size_t n = entries.begin()->first.size();
        require_within_cap(n);
        std::vector<double> values(std::size_t{1} << n);
        std::vector<bool> seen(values.size(), false);
        for (const auto& [key, value] : entries) {
            const auto y = Solution::from_string(key);
            require_same_length(n, y.size(), "table key '" + key + "'");
            values[y.index()] = value;
            seen[y.index()] = true;
        }
        if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
            throw DomainError("fitness table must list all 2^n solutions");
        }
        return FitnessSpec(n, kinds::Table{std::move(values)});
    }

    static FitnessSpec random_injective(std::size_t n, std::uint64_t seed) {
        require_within_cap(n);
        return FitnessSpec(n, kinds::RandomInjective{seed});
    }

    [[nodiscard]] std::size_t n() const noexcept { return n_; }
    [[nodiscard]] const Kind& kind() const noexcept { return kind_; }

    [[nodiscard]] std::string kind_name() const {
        return std::visit(
            [](const auto& k) -> std::string {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, kinds::BinVal>) return "binval";
                else if constexpr (std::is_same_v<K, kinds::Linear>) return "linear";
                else if constexpr (std::is_same_v<K, kinds::PerturbedOneMax>) return "perturbed_onemax";
                else if constexpr (std::is_same_v<K, kinds::Table>) return "table";
                else return "random_injective";
            },
            kind_);
    }

    /// Fitness of the solution with the given index (y_1 most significant).
    [[nodiscard]] double value_at(std::uint64_t index) const {
        return std::visit([&](const auto& k) { return eval(k, index); }, kind_);
    }

    friend bool operator==(const FitnessSpec& a, const FitnessSpec& b) {
        return a.n_ == b.n_ && a.kind_name() == b.kind_name() && a.to_json() == b.to_json();
    }

    [[nodiscard]] nlohmann::json to_json() const;
    static FitnessSpec from_json(const nlohmann::json& j);

private:
    FitnessSpec(std::size_t n, Kind kind) : n_(n), kind_(std::move(kind)) {
        if (n_ == 0) {
            throw DomainError("solution length must be positive");
        }
        if (n_ > 62) {
            throw CapacityError("solution length above 62 is not representable");
        }
        if (const auto* r = std::get_if<kinds::RandomInjective>(&kind_)) {
            permutation_ = make_permutation(n_, r->seed);
        }
    }

    static std::vector<double> make_permutation(std::size_t n, std::uint64_t seed) {
        std::vector<double> perm(std::size_t{1} << n);
        std::iota(perm.begin(), perm.end(), 0.0);
        Rng rng(seed);
        for (std::size_t i = perm.size() - 1; i > 0; --i) {
            std::swap(perm[i], perm[rng.below(i + 1)]);
        }
        return perm;
    }

    [[nodiscard]] double eval(const kinds::BinVal&, std::uint64_t index) const {
        return static_cast<double>(index);
    }
    [[nodiscard]] double eval(const kinds::Linear& k, std::uint64_t index) const {
        double s = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            if (bit_of(index, i, n_)) s += k.weights[i];
        }
        return s;
    }
    [[nodiscard]] double eval(const kinds::PerturbedOneMax& k, std::uint64_t index) const {
        const auto ones = static_cast<double>(std::popcount(index));
        return ones + k.epsilon * static_cast<double>(index);
    }
    [[nodiscard]] double eval(const kinds::Table& k, std::uint64_t index) const {
        return k.values[index];
    }
    [[nodiscard]] double eval(const kinds::RandomInjective&, std::uint64_t index) const {
        return permutation_[index];
    }

    std::size_t n_;
    Kind kind_;
    std::vector<double> permutation_;
};

inline nlohmann::json FitnessSpec::to_json() const {
    nlohmann::json j;
    j["kind"] = kind_name();
    j["n"] = n_;
    std::visit(
        [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, kinds::Linear>) {
                j["weights"] = k.weights;
            } else if constexpr (std::is_same_v<K, kinds::PerturbedOneMax>) {
                j["epsilon"] = k.epsilon;
            } else if constexpr (std::is_same_v<K, kinds::Table>) {
                nlohmann::json t = nlohmann::json::object();
                for (std::uint64_t i = 0; i < k.values.size(); ++i) {
                    t[Solution::from_index(i, n_).to_string()] = k.values[i];
                }
                j["table"] = std::move(t);
            } else if constexpr (std::is_same_v<K, kinds::RandomInjective>) {
                j["seed"] = k.seed;
            }
        },
        kind_);
    return j;
}

inline FitnessSpec FitnessSpec::from_json(const nlohmann::json& j) {
    try {
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "table") {
            auto entries = j.at("table").get<std::map<std::string, double>>();
            auto spec = table(entries);
            if (j.contains("n")) {
                require_same_length(j.at("n").get<std::size_t>(), spec.n(), "table spec");
            }
            return spec;
        }
        if (kind == "linear") {
            auto spec = linear(j.at("weights").get<std::vector<double>>());
            if (j.contains("n")) {
                require_same_length(j.at("n").get<std::size_t>(), spec.n(), "linear spec");
            }
            return spec;
        }
        const auto n = j.at("n").get<std::size_t>();
        if (kind == "binval") return binval(n);
        if (kind == "perturbed_onemax") {
            std::optional<double> eps;
            if (j.contains("epsilon")) eps = j.at("epsilon").get<double>();
            return perturbed_onemax(n, eps);
        }
        if (kind == "random_injective") {
            return random_injective(n, j.value("seed", std::uint64_t{0}));
        }
        throw ConfigError("unknown fitness kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed fitness spec: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Operations

inline double evaluate(const FitnessSpec& spec, const Solution& y) {
    require_same_length(spec.n(), y.size(), "evaluate");
    return spec.value_at(y.index());
}

/// All 2^n fitness values, indexed by Solution::index().
inline std::vector<double> fitness_table(const FitnessSpec& spec,
                                         std::size_t cap = kDefaultEnumerationCap) {
    require_within_cap(spec.n(), cap);
    std::vector<double> values(std::size_t{1} << spec.n());
    for (std::uint64_t i = 0; i < values.size(); ++i) {
        values[i] = spec.value_at(i);
    }
    return values;
}

/// Exact comparison: two solutions collide only if their doubles are equal.
inline bool is_injective(const FitnessSpec& spec, std::size_t cap = kDefaultEnumerationCap) {
    auto values = fitness_table(spec, cap);
    std::sort(values.begin(), values.end());
    return std::adjacent_find(values.begin(), values.end()) == values.end();
}

inline void require_injective(const FitnessSpec& spec, std::string_view operation) {
    if (!is_injective(spec)) {
        throw ScopeError(std::string(operation) +
                         ": fitness is not injective (injectivity guard); outside theorem scope");
    }
}

enum class LocalMaxStatus { not_max, local_max, strict_local_max };

inline std::string to_string(LocalMaxStatus s) {
    switch (s) {
        case LocalMaxStatus::not_max: return "not_max";
        case LocalMaxStatus::local_max: return "local_max";
        case LocalMaxStatus::strict_local_max: return "strict_local_max";
    }
    return "?";
}

struct LocalMaxReport {
    std::vector<Solution> maxima;
    std::vector<bool> strict_flags;

    [[nodiscard]] bool contains(const Solution& y) const {
        return std::find(maxima.begin(), maxima.end(), y) != maxima.end();
    }
};

namespace detail {

inline LocalMaxStatus classify_index(const std::vector<double>& values, std::uint64_t index,
                                     std::size_t n) {
    bool strict = true;
    const double gy = values[index];
    for (std::size_t locus = 0; locus < n; ++locus) {
        const double gz = values[index ^ (std::uint64_t{1} << (n - 1 - locus))];
        if (gz > gy) return LocalMaxStatus::not_max;
        if (gz == gy) strict = false;
    }
    return strict ? LocalMaxStatus::strict_local_max : LocalMaxStatus::local_max;
}

}  // namespace detail

inline LocalMaxStatus is_local_maximum(const FitnessSpec& spec, const Solution& y) {
    require_same_length(spec.n(), y.size(), "is_local_maximum");
    require_within_cap(spec.n());
    const double gy = spec.value_at(y.index());
    bool strict = true;
    for (std::size_t locus = 0; locus < y.size(); ++locus) {
        const double gz = spec.value_at(y.flipped(locus).index());
        if (gz > gy) return LocalMaxStatus::not_max;
        if (gz == gy) strict = false;
    }
    return strict ? LocalMaxStatus::strict_local_max : LocalMaxStatus::local_max;
}

/// Exhaustive scan of all 2^n solutions against their n Hamming neighbours.
inline LocalMaxReport enumerate_local_maxima(const FitnessSpec& spec) {
    const auto values = fitness_table(spec);
    LocalMaxReport report;
    for (std::uint64_t i = 0; i < values.size(); ++i) {
        const auto status = detail::classify_index(values, i, spec.n());
        if (status != LocalMaxStatus::not_max) {
            report.maxima.push_back(Solution::from_index(i, spec.n()));
            report.strict_flags.push_back(status == LocalMaxStatus::strict_local_max);
        }
    }
    return report;
}

}  // namespace cgaode
