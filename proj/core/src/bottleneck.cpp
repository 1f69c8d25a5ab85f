#include "slr/bottleneck.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <thread>

#include "slr/error.hpp"

namespace slr {

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_feed(std::uint64_t& h, const void* bytes, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
}

}  // namespace

std::uint64_t backbone_fingerprint(const BackboneSpec& spec,
                                   const WeightSet& weights,
                                   Normalization normalization) {
    std::uint64_t h = kFnvOffset;
    const std::string text = format_backbone(spec);
    fnv_feed(h, text.data(), text.size());
    const std::string norm = normalization_name(normalization);
    fnv_feed(h, norm.data(), norm.size());
    for (const auto& [index, lw] : weights.layers) {
        fnv_feed(h, &index, sizeof(index));
        fnv_feed(h, lw.kernel.data(), lw.kernel.size() * sizeof(float));
        fnv_feed(h, lw.bias.data(), lw.bias.size() * sizeof(float));
    }
    return h;
}

BottleneckCache compute_bottlenecks(const BackboneSpec& spec,
                                    const WeightSet& weights,
                                    const Dataset& dataset,
                                    std::span<const std::uint32_t> ids,
                                    Normalization normalization, int threads) {
    const int dim = bottleneck_dim(spec);
    BottleneckCache cache;
    cache.dim = static_cast<std::uint32_t>(dim);
    cache.backbone_fingerprint =
        backbone_fingerprint(spec, weights, normalization);
    cache.ids.assign(ids.begin(), ids.end());
    std::sort(cache.ids.begin(), cache.ids.end());
    for (std::uint32_t id : cache.ids) {
        if (id >= dataset.size()) {
            throw Error("bottleneck id " + std::to_string(id) +
                        " outside dataset of size " +
                        std::to_string(dataset.size()));
        }
    }
    if (std::adjacent_find(cache.ids.begin(), cache.ids.end()) !=
        cache.ids.end()) {
        throw Error("duplicate id in bottleneck request");
    }

    cache.data.resize(cache.ids.size() * static_cast<std::size_t>(dim));
    const auto views = weight_views(spec, weights);

    auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const LabeledImage& img = dataset.images[cache.ids[i]];
            const Tensor input = to_tensor(img, normalization);
            const std::vector<float> vec = forward(spec, views, input);
            std::copy(vec.begin(), vec.end(),
                      cache.data.begin() + i * static_cast<std::size_t>(dim));
        }
    };

    if (threads == 0) {
        threads = static_cast<int>(std::thread::hardware_concurrency());
        if (threads < 1) threads = 1;
    }
    const std::size_t n = cache.ids.size();
    if (threads <= 1 || n < 2) {
        worker(0, n);
    } else {
        const std::size_t workers = std::min<std::size_t>(threads, n);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t t = 0; t < workers; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(begin + chunk, n);
            if (begin >= end) break;
            pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }
    return cache;
}

BottleneckCache merge_caches(std::span<const BottleneckCache> shards) {
    if (shards.empty()) throw CacheError("nothing to merge");
    BottleneckCache merged;
    merged.dim = shards[0].dim;
    merged.backbone_fingerprint = shards[0].backbone_fingerprint;

    std::size_t total = 0;
    for (const BottleneckCache& shard : shards) {
        if (shard.dim != merged.dim) {
            throw CacheError("cache dim mismatch while merging: " +
                             std::to_string(shard.dim) + " vs " +
                             std::to_string(merged.dim));
        }
        if (shard.backbone_fingerprint != merged.backbone_fingerprint) {
            throw CacheError("cache fingerprint mismatch while merging");
        }
        total += shard.count();
    }

    std::vector<std::pair<std::uint32_t, std::pair<const BottleneckCache*,
                                                   std::size_t>>> entries;
    entries.reserve(total);
    for (const BottleneckCache& shard : shards) {
        for (std::size_t i = 0; i < shard.count(); ++i) {
            entries.push_back({shard.ids[i], {&shard, i}});
        }
    }
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < entries.size(); ++i) {
        if (entries[i].first == entries[i - 1].first) {
            throw CacheError("duplicate id " + std::to_string(entries[i].first) +
                             " while merging caches");
        }
    }

    merged.ids.reserve(total);
    merged.data.resize(total * merged.dim);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        merged.ids.push_back(entries[i].first);
        const auto [shard, row] = entries[i].second;
        std::copy_n(shard->data.begin() + row * merged.dim, merged.dim,
                    merged.data.begin() + i * merged.dim);
    }
    return merged;
}

std::vector<int> labels_for(const BottleneckCache& cache,
                            const Dataset& dataset) {
    std::vector<int> labels;
    labels.reserve(cache.count());
    for (std::uint32_t id : cache.ids) {
        labels.push_back(dataset.images[id].label);
    }
    return labels;
}

namespace {

constexpr char kCacheMagic[4] = {'B', 'N', 'C', 'K'};
constexpr std::uint32_t kCacheVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

}  // namespace

void save_cache(const BottleneckCache& cache,
                const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(kCacheMagic, sizeof(kCacheMagic));
    write_pod(out, kCacheVersion);
    write_pod(out, cache.dim);
    write_pod(out, static_cast<std::uint32_t>(cache.count()));
    write_pod(out, cache.backbone_fingerprint);
    for (std::size_t i = 0; i < cache.count(); ++i) {
        write_pod(out, cache.ids[i]);
        out.write(reinterpret_cast<const char*>(cache.data.data() +
                                                i * cache.dim),
                  std::streamsize(cache.dim) * sizeof(float));
    }
    if (!out) throw IoError("write failed: " + path.string());
}

BottleneckCache load_cache(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    char magic[4];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0) {
        throw FormatError("not a bottleneck cache: " + path.string());
    }
    if (read_pod<std::uint32_t>(in) != kCacheVersion) {
        throw FormatError("unsupported cache version: " + path.string());
    }
    BottleneckCache cache;
    cache.dim = read_pod<std::uint32_t>(in);
    const auto count = read_pod<std::uint32_t>(in);
    cache.backbone_fingerprint = read_pod<std::uint64_t>(in);
    if (!in) throw BoundsError("truncated cache header: " + path.string());

    cache.ids.resize(count);
    cache.data.resize(std::size_t(count) * cache.dim);
    for (std::uint32_t i = 0; i < count; ++i) {
        cache.ids[i] = read_pod<std::uint32_t>(in);
        in.read(reinterpret_cast<char*>(cache.data.data() +
                                        std::size_t(i) * cache.dim),
                std::streamsize(cache.dim) * sizeof(float));
    }
    if (!in) throw BoundsError("truncated cache records: " + path.string());
    if (!std::is_sorted(cache.ids.begin(), cache.ids.end())) {
        throw FormatError("cache ids out of order: " + path.string());
    }
    return cache;
}

}  // namespace slr
