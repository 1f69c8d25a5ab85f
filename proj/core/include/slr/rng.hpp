#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

namespace slr {

// SplitMix64. The generator is fixed (not std::mt19937 or any
// implementation-defined distribution) so that splits, weight
// initialization and batch sampling are bit-reproducible across
// platforms and across independent reimplementations.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, bound), bound > 0. Plain modulo reduction; the bias is
    // negligible at our sizes and the reduction rule is part of the contract.
    std::uint64_t next_below(std::uint64_t bound) { return next() % bound; }

    // Uniform in (0, 1], 53 significant bits. Never returns 0, so it is safe
    // under a logarithm.
    double next_unit() {
        return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller, cosine branch, one value per call.
    double next_gaussian() {
        double u1 = next_unit();
        double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

  private:
    std::uint64_t state_;
};

// In-place Fisher-Yates: for i = n-1 .. 1, j = rng.next_below(i + 1),
// swap a[i] and a[j]. One rng draw per position, descending walk.
template <typename T>
void fisher_yates(std::span<T> items, SplitMix64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(items[i - 1], items[j]);
    }
}

// Draws k distinct values from [0, n) into the first k slots of `scratch`.
// `scratch` is reset to the identity permutation on every call, so the draw
// depends only on the rng state: for i = 0 .. k-1,
// j = i + rng.next_below(n - i), swap scratch[i] and scratch[j].
std::span<const std::uint32_t> sample_without_replacement(
    std::uint32_t n, std::uint32_t k, SplitMix64& rng,
    std::vector<std::uint32_t>& scratch);

}  // namespace slr
