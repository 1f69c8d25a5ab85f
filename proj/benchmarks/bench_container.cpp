#include <benchmark/benchmark.h>

#include <filesystem>
#include <fstream>

#include "slr/bench.hpp"
#include "slr/container.hpp"
#include "slr/rng.hpp"

using namespace slr;

namespace {

// A container with a reasonably large payload so load strategies differ.
std::filesystem::path benchmark_container() {
    static const std::filesystem::path path = [] {
        const auto file =
            std::filesystem::temp_directory_path() / "slr_bench_model.slrm";
        ModelArtifacts artifacts;
        artifacts.spec = flatten_backbone();
        SoftmaxHead head = zero_head(784, asl_label_names());
        SplitMix64 rng(11);
        for (float& w : head.weights) w = float(rng.next_gaussian());
        artifacts.head = std::move(head);
        write_container(artifacts, file);
        return file;
    }();
    return path;
}

void BM_MapContainer(benchmark::State& state) {
    const auto path = benchmark_container();
    for (auto _ : state) {
        MappedModel model = map_container(path);
        benchmark::DoNotOptimize(&model.manifest());
    }
}
BENCHMARK(BM_MapContainer);

void BM_ReadAndCopyContainer(benchmark::State& state) {
    const auto path = benchmark_container();
    for (auto _ : state) {
        std::ifstream in(path, std::ios::binary);
        in.seekg(0, std::ios::end);
        std::vector<std::byte> bytes(std::size_t(in.tellg()));
        in.seekg(0);
        in.read(reinterpret_cast<char*>(bytes.data()),
                std::streamsize(bytes.size()));
        ValidationReport report = validate_container_bytes(bytes);
        benchmark::DoNotOptimize(report.ok());
    }
}
BENCHMARK(BM_ReadAndCopyContainer);

void BM_ValidateContainer(benchmark::State& state) {
    const auto path = benchmark_container();
    for (auto _ : state) {
        ValidationReport report = validate_container(path);
        benchmark::DoNotOptimize(report.ok());
    }
}
BENCHMARK(BM_ValidateContainer);

}  // namespace

BENCHMARK_MAIN();
