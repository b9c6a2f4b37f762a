#pragma once

/// Exact sampling, winner and loser distributions of one cGA generation, the
/// mean-field drift f(p) = E[w - l | p] and its Jacobian at the corners of
/// the hypercube.
///
/// Two independent routes to the drift are provided:
///   - drift(): per solution y, 2 Pr(y) (Pr[g(z) < g(y)] - Pr[g(z) > g(y)]),
///     with the inner sums read off fitness-sorted prefix/suffix sums.
///     O(2^n n) per call.
///   - drift_naive(): sum_y y (Pr[w = y] - Pr[l = y]) with the winner and
///     loser probabilities computed by direct double sums. O(4^n); only
///     meant as an oracle for small n.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "io.hpp"
#include "landscape.hpp"

namespace cgaode {

/// Dense row-major square matrix.
class Matrix {
public:
    explicit Matrix(std::size_t n = 0) : n_(n), data_(n * n, 0.0) {}

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * n_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * n_ + c]; }

    [[nodiscard]] bool is_diagonal() const {
        for (std::size_t r = 0; r < n_; ++r)
            for (std::size_t c = 0; c < n_; ++c)
                if (r != c && (*this)(r, c) != 0.0) return false;
        return true;
    }

    /// max |A - A^T|
    [[nodiscard]] double asymmetry() const {
        double worst = 0.0;
        for (std::size_t r = 0; r < n_; ++r)
            for (std::size_t c = r + 1; c < n_; ++c)
                worst = std::max(worst, std::abs((*this)(r, c) - (*this)(c, r)));
        return worst;
    }

    [[nodiscard]] double max_abs_diff(const Matrix& other) const {
        require_same_length(n_, other.n_, "matrix comparison");
        double worst = 0.0;
        for (std::size_t i = 0; i < data_.size(); ++i)
            worst = std::max(worst, std::abs(data_[i] - other.data_[i]));
        return worst;
    }

private:
    std::size_t n_;
    std::vector<double> data_;
};

using DriftVector = std::vector<double>;

struct CornerJacobian {
    Solution corner;
    Matrix matrix;
    /// Diagonal of `matrix`, which is the spectrum since the matrix is diagonal.
    std::vector<double> eigenvalues;
};

inline void require_probabilities(std::span<const double> p) {
    for (double v : p) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw DomainError("probability vector entry outside [0, 1]");
        }
    }
}

/// Pr(y | p) = prod_i p_i^{y_i} (1 - p_i)^{1 - y_i}
inline double sampling_prob(std::span<const double> p, const Solution& y) {
    require_same_length(p.size(), y.size(), "sampling_prob");
    double r = 1.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        r *= y[i] ? p[i] : 1.0 - p[i];
    }
    return r;
}

/// Pr(y | p) for every y, indexed by Solution::index(). Each entry is the
/// same product, in the same order, as sampling_prob() computes.
inline std::vector<double> sampling_distribution(std::span<const double> p,
                                                 std::size_t cap = kDefaultEnumerationCap) {
    require_within_cap(p.size(), cap);
    std::vector<double> probs(std::size_t{1} << p.size());
    probs[0] = 1.0;
    std::size_t filled = 1;
    for (double pi : p) {
        for (std::size_t j = filled; j-- > 0;) {
            const double base = probs[j];
            probs[2 * j] = base * (1.0 - pi);
            probs[2 * j + 1] = base * pi;
        }
        filled *= 2;
    }
    return probs;
}

/// d Pr(z | p) / d p_m evaluated at the corner p = y.
///
/// Zero unless z agrees with y off locus m; then +1 if z_m = 1, else -1.
inline double partials_sampling(const Solution& y, const Solution& z, std::size_t m) {
    require_same_length(y.size(), z.size(), "partials_sampling");
    if (m >= y.size()) throw DimensionError("locus index out of range");
    const auto d = hamming_distance(y, z);
    if (d == 0) return y[m] == 1 ? 1.0 : -1.0;
    if (d >= 2) return 0.0;
    if (z[m] == y[m]) return 0.0;
    return z[m] == 1 ? 1.0 : -1.0;
}

/// Per-spec cache: the fitness table and its sorted order, built once.
/// Immutable after construction, so it may be shared between threads.
class DriftModel {
public:
    explicit DriftModel(FitnessSpec spec, std::size_t cap = kDefaultEnumerationCap)
        : spec_(std::move(spec)), values_(fitness_table(spec_, cap)), cap_(cap) {
        order_.resize(values_.size());
        std::iota(order_.begin(), order_.end(), std::uint64_t{0});
        std::stable_sort(order_.begin(), order_.end(),
                         [&](auto a, auto b) { return values_[a] < values_[b]; });
        std::vector<double> sorted(values_.size());
        for (std::size_t r = 0; r < order_.size(); ++r) sorted[r] = values_[order_[r]];
        injective_ = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
        // Tie groups: group_begin_[r] / group_end_[r] bound the run of equal values at rank r.
        group_begin_.resize(order_.size());
        group_end_.resize(order_.size());
        std::size_t start = 0;
        for (std::size_t r = 1; r <= order_.size(); ++r) {
            if (r == order_.size() || sorted[r] != sorted[start]) {
                for (std::size_t q = start; q < r; ++q) {
                    group_begin_[q] = start;
                    group_end_[q] = r;
                }
                start = r;
            }
        }
    }

    [[nodiscard]] const FitnessSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] std::size_t n() const noexcept { return spec_.n(); }
    [[nodiscard]] bool injective() const noexcept { return injective_; }
    [[nodiscard]] const std::vector<double>& fitness_values() const noexcept { return values_; }

    /// Pr[w = y | p] = Pr(y) (sum_{g(z) < g(y)} Pr(z) + sum_{g(z) <= g(y)} Pr(z))
    [[nodiscard]] double winner_prob(std::span<const double> p, const Solution& y) const {
        const auto probs = checked_distribution(p, y);
        const double gy = values_[y.index()];
        double below = 0.0;
        double at_or_below = 0.0;
        for (std::uint64_t z = 0; z < probs.size(); ++z) {
            if (values_[z] < gy) below += probs[z];
            if (values_[z] <= gy) at_or_below += probs[z];
        }
        return probs[y.index()] * (below + at_or_below);
    }

    /// Pr[l = y | p] = Pr(y) (sum_{g(z) > g(y)} Pr(z) + sum_{g(z) >= g(y)} Pr(z))
    [[nodiscard]] double loser_prob(std::span<const double> p, const Solution& y) const {
        const auto probs = checked_distribution(p, y);
        const double gy = values_[y.index()];
        double above = 0.0;
        double at_or_above = 0.0;
        for (std::uint64_t z = 0; z < probs.size(); ++z) {
            if (values_[z] > gy) above += probs[z];
            if (values_[z] >= gy) at_or_above += probs[z];
        }
        return probs[y.index()] * (above + at_or_above);
    }

    /// f(p) via fitness-sorted prefix sums.
    [[nodiscard]] DriftVector drift(std::span<const double> p) const {
        require_same_length(n(), p.size(), "drift");
        require_probabilities(p);
        const auto probs = sampling_distribution(p, cap_);
        const std::size_t size = order_.size();

        // prefix[r] = sum of Pr over ranks < r
        std::vector<double> prefix(size + 1, 0.0);
        for (std::size_t r = 0; r < size; ++r) prefix[r + 1] = prefix[r] + probs[order_[r]];
        std::vector<double> suffix(size + 1, 0.0);
        for (std::size_t r = size; r-- > 0;) suffix[r] = suffix[r + 1] + probs[order_[r]];

        DriftVector f(n(), 0.0);
        const std::size_t len = n();
        for (std::size_t r = 0; r < size; ++r) {
            const auto y = order_[r];
            const double py = probs[y];
            if (py == 0.0) continue;
            const double lower = prefix[group_begin_[r]];
            const double higher = suffix[group_end_[r]];
            const double c = 2.0 * py * (lower - higher);
            for (std::size_t i = 0; i < len; ++i) {
                if (bit_of(y, i, len)) f[i] += c;
            }
        }
        return f;
    }

    /// f(p) = sum_y y (Pr[w = y] - Pr[l = y]), by direct double sums.
    [[nodiscard]] DriftVector drift_naive(std::span<const double> p) const {
        require_same_length(n(), p.size(), "drift_naive");
        require_probabilities(p);
        const auto probs = sampling_distribution(p, cap_);
        DriftVector f(n(), 0.0);
        const std::size_t len = n();
        for (std::uint64_t y = 0; y < probs.size(); ++y) {
            const double gy = values_[y];
            double below = 0.0, at_or_below = 0.0, above = 0.0, at_or_above = 0.0;
            for (std::uint64_t z = 0; z < probs.size(); ++z) {
                const double gz = values_[z];
                if (gz < gy) below += probs[z];
                if (gz <= gy) at_or_below += probs[z];
                if (gz > gy) above += probs[z];
                if (gz >= gy) at_or_above += probs[z];
            }
            const double win = probs[y] * (below + at_or_below);
            const double lose = probs[y] * (above + at_or_above);
            for (std::size_t i = 0; i < len; ++i) {
                if (bit_of(y, i, len)) f[i] += win - lose;
            }
        }
        return f;
    }

    /// Jacobian of f at a corner p0, evaluated term by term from the
    /// derivative of the product form of f:
    ///   J_im = 2 sum_y y_i dPr(y)/dp_m [g(y) > g(p0)] - [g(y) < g(p0)]
    ///        + 2 p0_i (sum_{g(z) < g(p0)} dPr(z)/dp_m - sum_{g(z) > g(p0)} dPr(z)/dp_m)
    /// where the first bracket uses Pr(z | p0) = [z = p0]. Requires injectivity.
    [[nodiscard]] CornerJacobian jacobian_analytic(const Solution& corner) const {
        require_same_length(n(), corner.size(), "jacobian_analytic");
        if (!injective_) {
            throw ScopeError(
                "jacobian_analytic: fitness is not injective (injectivity guard); outside theorem "
                "scope");
        }
        const std::size_t len = n();
        const double g0 = values_[corner.index()];
        Matrix jac(len);
        for (std::size_t m = 0; m < len; ++m) {
            // Solutions whose sampling probability moves with p_m at p0.
            std::vector<std::pair<std::uint64_t, double>> movers;
            for (std::uint64_t y = 0; y < values_.size(); ++y) {
                const double d = partials_sampling(corner, Solution::from_index(y, len), m);
                if (d != 0.0) movers.emplace_back(y, d);
            }
            double lower_minus_higher = 0.0;  // sum over z of dPr(z)/dp_m * sign(g0 - g(z))
            for (const auto& [z, d] : movers) {
                if (values_[z] < g0) lower_minus_higher += d;
                if (values_[z] > g0) lower_minus_higher -= d;
            }
            for (std::size_t i = 0; i < len; ++i) {
                double first = 0.0;
                for (const auto& [y, d] : movers) {
                    if (!bit_of(y, i, len)) continue;
                    const double gy = values_[y];
                    first += d * ((g0 < gy ? 1.0 : 0.0) - (g0 > gy ? 1.0 : 0.0));
                }
                const double second = corner[i] * lower_minus_higher;
                jac(i, m) = 2.0 * (first + second);
            }
        }
        std::vector<double> eig(len);
        for (std::size_t i = 0; i < len; ++i) eig[i] = jac(i, i);
        if (!jac.is_diagonal()) {
            throw InternalError("corner Jacobian is not diagonal");
        }
        return {corner, std::move(jac), std::move(eig)};
    }

    /// Corner overload for a probability vector; rejects interior points.
    [[nodiscard]] CornerJacobian jacobian_analytic(std::span<const double> p) const {
        require_same_length(n(), p.size(), "jacobian_analytic");
        std::vector<std::uint8_t> bits(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (p[i] == 0.0) bits[i] = 0;
            else if (p[i] == 1.0) bits[i] = 1;
            else throw DomainError("jacobian_analytic needs a deterministic configuration");
        }
        return jacobian_analytic(Solution(std::move(bits)));
    }

    /// Central differences, column m = (f(p + h e_m) - f(p - h e_m)) / 2h.
    [[nodiscard]] Matrix jacobian_numeric(std::span<const double> p, double h) const {
        require_same_length(n(), p.size(), "jacobian_numeric");
        require_probabilities(p);
        if (!(h > 0.0) || !std::isfinite(h)) {
            throw DomainError("finite-difference step must be positive and finite");
        }
        const std::size_t len = n();
        Matrix jac(len);
        std::vector<double> plus(p.begin(), p.end());
        std::vector<double> minus(p.begin(), p.end());
        for (std::size_t m = 0; m < len; ++m) {
            if (p[m] - h < 0.0 || p[m] + h > 1.0) {
                throw DomainError("finite-difference stencil leaves [0, 1]^n at locus " +
                                  std::to_string(m));
            }
            plus[m] = p[m] + h;
            minus[m] = p[m] - h;
            const auto fp = drift(plus);
            const auto fm = drift(minus);
            for (std::size_t i = 0; i < len; ++i) jac(i, m) = (fp[i] - fm[i]) / (2.0 * h);
            plus[m] = p[m];
            minus[m] = p[m];
        }
        return jac;
    }

private:
    [[nodiscard]] std::vector<double> checked_distribution(std::span<const double> p,
                                                           const Solution& y) const {
        require_same_length(n(), p.size(), "probability vector");
        require_same_length(n(), y.size(), "solution");
        require_probabilities(p);
        return sampling_distribution(p, cap_);
    }

    FitnessSpec spec_;
    std::vector<double> values_;
    std::size_t cap_;
    std::vector<std::uint64_t> order_;
    std::vector<std::size_t> group_begin_;
    std::vector<std::size_t> group_end_;
    bool injective_ = true;
};

// Free-function forms for one-off calls; each builds a DriftModel.

inline double winner_prob(std::span<const double> p, const FitnessSpec& spec, const Solution& y) {
    return DriftModel(spec).winner_prob(p, y);
}

inline double loser_prob(std::span<const double> p, const FitnessSpec& spec, const Solution& y) {
    return DriftModel(spec).loser_prob(p, y);
}

inline DriftVector drift(std::span<const double> p, const FitnessSpec& spec) {
    return DriftModel(spec).drift(p);
}

inline DriftVector drift_naive(std::span<const double> p, const FitnessSpec& spec) {
    return DriftModel(spec).drift_naive(p);
}

inline CornerJacobian jacobian_analytic(const Solution& corner, const FitnessSpec& spec) {
    return DriftModel(spec).jacobian_analytic(corner);
}

inline Matrix jacobian_numeric(std::span<const double> p, const FitnessSpec& spec, double h) {
    return DriftModel(spec).jacobian_numeric(p, h);
}

/// Writes f on a regular grid with `resolution` points per axis as CSV:
/// p_1..p_n,f_1..f_n.
inline void write_drift_grid_csv(std::ostream& out, const DriftModel& model,
                                 std::size_t resolution, std::size_t max_rows = 1'000'000) {
    if (resolution < 2) throw DomainError("grid resolution must be at least 2");
    const std::size_t len = model.n();
    double rows = std::pow(static_cast<double>(resolution), static_cast<double>(len));
    if (rows > static_cast<double>(max_rows)) {
        throw CapacityError("drift grid would have " + format_real(rows) + " rows");
    }
    for (std::size_t i = 0; i < len; ++i) out << (i ? "," : "") << "p_" << i + 1;
    for (std::size_t i = 0; i < len; ++i) out << ",f_" << i + 1;
    out << '\n';
    std::vector<std::size_t> idx(len, 0);
    std::vector<double> p(len, 0.0);
    const double denom = static_cast<double>(resolution - 1);
    for (;;) {
        for (std::size_t i = 0; i < len; ++i) p[i] = static_cast<double>(idx[i]) / denom;
        const auto f = model.drift(p);
        for (std::size_t i = 0; i < len; ++i) out << (i ? "," : "") << format_real(p[i]);
        for (std::size_t i = 0; i < len; ++i) out << ',' << format_real(f[i]);
        out << '\n';
        std::size_t k = len;
        while (k-- > 0) {
            if (++idx[k] < resolution) break;
            idx[k] = 0;
        }
        if (k == static_cast<std::size_t>(-1)) break;
    }
}

}  // namespace cgaode
