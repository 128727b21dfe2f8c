#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace hrl {

/// Contract violation: a caller broke a documented precondition.
class ContractError : public std::runtime_error {
  public:
    explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

/// An iterative solver ran out of sweeps before reaching its tolerance.
class ConvergenceError : public std::runtime_error {
  public:
    ConvergenceError(const std::string& msg, double residual)
        : std::runtime_error(msg), residual_(residual) {}
    double residual() const { return residual_; }

  private:
    double residual_;
};

/// I/O or format failure on an artifact file.
class IoError : public std::runtime_error {
  public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic stream derivation: mixes a base seed with any number of
/// stream identifiers (worker id, episode index, tree index, ...).
template <typename... Ids>
std::uint64_t derive_seed(std::uint64_t base, Ids... ids) {
    std::uint64_t h = splitmix64(base);
    ((h = splitmix64(h ^ static_cast<std::uint64_t>(ids))), ...);
    return h;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

}  // namespace hrl
