#pragma once

/// Shared vocabulary for the cgaode library: error types, bitstring
/// solutions and the enumeration cap that bounds every 2^n computation.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cgaode {

inline constexpr std::string_view kVersion = "cgaode 1.0.0";

/// Largest solution length for which exhaustive 2^n work is allowed.
inline constexpr std::size_t kDefaultEnumerationCap = 16;

// Errors. Everything except InternalError is a caller-side validation failure.

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
    using Error::Error;
};

struct CapacityError : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

struct RangeError : Error {
    using Error::Error;
};

/// Raised when an operation relies on injectivity of the fitness function.
struct ScopeError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct InternalError : Error {
    using Error::Error;
};

inline void require_same_length(std::size_t expected, std::size_t actual, std::string_view what) {
    if (expected != actual) {
        throw DimensionError(std::string(what) + ": expected length " + std::to_string(expected) +
                             ", got " + std::to_string(actual));
    }
}

inline void require_within_cap(std::size_t n, std::size_t cap = kDefaultEnumerationCap) {
    if (n > cap) {
        throw CapacityError("solution length " + std::to_string(n) + " exceeds enumeration cap " +
                            std::to_string(cap));
    }
}

/// A bitstring y = (y_1, ..., y_n). Locus 0 of `bits` is y_1, the most
/// significant position when a solution is read as a binary number.
class Solution {
public:
    Solution() = default;

    explicit Solution(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
        for (auto b : bits_) {
            if (b > 1) {
                throw DomainError("solution bits must be 0 or 1");
            }
        }
    }

    /// Decodes `index` with y_1 as the most significant bit.
    static Solution from_index(std::uint64_t index, std::size_t n) {
        if (n < 64 && (index >> n) != 0) {
            throw RangeError("index " + std::to_string(index) + " does not fit in " +
                             std::to_string(n) + " bits");
        }
        std::vector<std::uint8_t> bits(n);
        for (std::size_t i = 0; i < n; ++i) {
            bits[i] = static_cast<std::uint8_t>((index >> (n - 1 - i)) & 1U);
        }
        return Solution(std::move(bits));
    }

    /// Parses "0101"-style strings, y_1 leftmost.
    static Solution from_string(std::string_view text) {
        std::vector<std::uint8_t> bits;
        bits.reserve(text.size());
        for (char c : text) {
            if (c != '0' && c != '1') {
                throw DomainError("invalid bitstring '" + std::string(text) + "'");
            }
            bits.push_back(static_cast<std::uint8_t>(c - '0'));
        }
        if (bits.empty()) {
            throw DomainError("empty bitstring");
        }
        return Solution(std::move(bits));
    }

    [[nodiscard]] std::size_t size() const noexcept { return bits_.size(); }
    [[nodiscard]] std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
    [[nodiscard]] const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

    [[nodiscard]] std::uint64_t index() const noexcept {
        std::uint64_t v = 0;
        for (auto b : bits_) {
            v = (v << 1U) | b;
        }
        return v;
    }

    [[nodiscard]] std::string to_string() const {
        std::string s;
        s.reserve(bits_.size());
        for (auto b : bits_) {
            s.push_back(static_cast<char>('0' + b));
        }
        return s;
    }

    [[nodiscard]] Solution flipped(std::size_t locus) const {
        Solution out = *this;
        out.bits_.at(locus) ^= 1U;
        return out;
    }

    friend bool operator==(const Solution&, const Solution&) = default;
    friend auto operator<=>(const Solution&, const Solution&) = default;

private:
    std::vector<std::uint8_t> bits_;
};

inline std::size_t hamming_distance(const Solution& a, const Solution& b) {
    require_same_length(a.size(), b.size(), "hamming_distance");
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += (a[i] != b[i]) ? 1U : 0U;
    }
    return d;
}

/// Bit `locus` (0-based, y_1 = locus 0) of the solution encoded by `index`.
inline unsigned bit_of(std::uint64_t index, std::size_t locus, std::size_t n) noexcept {
    return static_cast<unsigned>((index >> (n - 1 - locus)) & 1U);
}

}  // namespace cgaode
