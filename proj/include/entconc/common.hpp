// Shared numeric conventions and error types.

#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace entconc {

using cdouble = std::complex<double>;

// All tolerances live here so every module checks against the same values.
namespace tol {
inline constexpr double kNorm = 1e-12;      // state norms, unitarity
inline constexpr double kOperator = 1e-10;  // Hermiticity, trace, positivity
inline constexpr double kBranch = 1e-14;    // below this a branch is impossible
}  // namespace tol

// Post-selection landed on an outcome of probability zero.
class ImpossibleBranchError : public std::runtime_error {
public:
    explicit ImpossibleBranchError(const std::string& what)
        : std::runtime_error(what) {}
};

// Mode-label bookkeeping violation (duplicate or unknown label, mismatched sets).
class ModeError : public std::invalid_argument {
public:
    explicit ModeError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed or out-of-range configuration input.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// splitmix64 step; used to derive independent per-point sub-seeds from a
// master seed so that any evaluation order or thread count gives identical
// streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = splitmix64(master ^ 0x243f6a8885a308d3ULL);
    s = splitmix64(s ^ a);
    s = splitmix64(s ^ b);
    return splitmix64(s ^ c);
}

}  // namespace entconc
