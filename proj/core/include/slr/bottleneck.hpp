#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "slr/backbone.hpp"
#include "slr/dataset.hpp"

namespace slr {

// Frozen-backbone features for a set of dataset indices. Entries are kept
// in ascending id order so caches serialize and merge deterministically.
struct BottleneckCache {
    std::uint32_t dim = 0;
    std::uint64_t backbone_fingerprint = 0;
    std::vector<std::uint32_t> ids;  // ascending
    std::vector<float> data;         // ids.size() x dim, row-major

    std::size_t count() const { return ids.size(); }
    std::span<const float> row(std::size_t i) const {
        return {data.data() + i * dim, dim};
    }
};

// FNV-1a over the canonical spec text, the normalization token and the raw
// little-endian weight bytes in layer order. Any change to the feature
// pipeline invalidates cached bottlenecks.
std::uint64_t backbone_fingerprint(const BackboneSpec& spec,
                                   const WeightSet& weights,
                                   Normalization normalization);

// One forward pass per id. `threads` > 1 splits the ids across workers;
// every sample is computed independently, so the result is bit-identical
// for any thread count. threads = 0 picks the hardware concurrency.
BottleneckCache compute_bottlenecks(const BackboneSpec& spec,
                                    const WeightSet& weights,
                                    const Dataset& dataset,
                                    std::span<const std::uint32_t> ids,
                                    Normalization normalization,
                                    int threads = 1);

// Disjoint shards -> one cache. Throws CacheError when fingerprints or
// dims disagree, or when an id appears twice.
BottleneckCache merge_caches(std::span<const BottleneckCache> shards);

// Labels in cache order: out[i] = dataset.images[cache.ids[i]].label.
std::vector<int> labels_for(const BottleneckCache& cache,
                            const Dataset& dataset);

// Binary cache file: magic `BNCK`, u32 version, u32 dim, u32 count,
// u64 fingerprint, then per entry a u32 id and dim little-endian f32.
void save_cache(const BottleneckCache& cache,
                const std::filesystem::path& path);
BottleneckCache load_cache(const std::filesystem::path& path);

}  // namespace slr
