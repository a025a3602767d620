#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace hdiv {

/// Identifies the sampling pipeline in output metadata. Bump when any of the
/// pieces below change.
inline constexpr const char* kGeneratorVersion =
    "mt19937_64/splitmix64-seed/inverse-cdf-as241/v1";

std::uint64_t splitmix64(std::uint64_t x);

/// Seed for stream `index` of a master seed; a pure function of both, so
/// parallel and serial runs draw identical streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Deterministic generator: 53-bit uniforms in (0, 1) from mt19937_64 and
/// standard normals by inverse CDF.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform();
    double normal();

    /// Fisher-Yates permutation of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::mt19937_64 engine_;
};

}  // namespace hdiv
