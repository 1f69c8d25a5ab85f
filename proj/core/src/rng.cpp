#include "slr/rng.hpp"

#include <numeric>

namespace slr {

std::span<const std::uint32_t> sample_without_replacement(
    std::uint32_t n, std::uint32_t k, SplitMix64& rng,
    std::vector<std::uint32_t>& scratch) {
    scratch.resize(n);
    std::iota(scratch.begin(), scratch.end(), 0u);
    for (std::uint32_t i = 0; i < k; ++i) {
        std::uint32_t j =
            i + static_cast<std::uint32_t>(rng.next_below(n - i));
        std::swap(scratch[i], scratch[j]);
    }
    return {scratch.data(), k};
}

}  // namespace slr
