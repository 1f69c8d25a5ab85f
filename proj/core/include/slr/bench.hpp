#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "slr/backbone.hpp"
#include "slr/engine.hpp"
#include "slr/head.hpp"

namespace slr {

struct LayerFlops {
    std::string name;
    std::uint64_t macs = 0;
    std::uint64_t flops = 0;
};

struct FlopsBreakdown {
    std::vector<LayerFlops> layers;
    std::uint64_t total_macs = 0;
    std::uint64_t total_flops = 0;
};

// Per-inference floating point work, 2 FLOPs per multiply-accumulate:
//   conv2d      2*Kh*Kw*Cin*Cout*H'*W'  (+ H'*W'*Cout when biased)
//   depthwise   2*Kh*Kw*C*H'*W'
//   pointwise   2*Cin*Cout*H*W          (+ H*W*Cout when biased)
//   head        2*D*N + N
// Elementwise layers count 1 FLOP per element (relu6 per output element,
// global_avg_pool per pooled input element, flatten free). The same
// conventions drive the instrumented counters in the test suite, so the
// two totals match exactly.
FlopsBreakdown flops(const BackboneSpec& spec, int head_dim, int n_classes);

// device_flops_per_second / model_flops; both must be positive.
double fps_estimate(double model_flops, double device_flops_per_second);

struct LatencyStats {
    int samples = 0;
    double mean_ms = 0.0;
    double median_ms = 0.0;  // midpoint of the two middle samples when even
    double p95_ms = 0.0;     // order statistic ceil(0.95 n)
};

// `warmup` untimed single-image inferences, then `samples` timed ones
// (bottleneck + head + top-k against a monotonic clock), cycling through
// `images` round-robin.
LatencyStats measure_latency(const InferenceEngine& engine,
                             std::span<const LabeledImage> images, int warmup,
                             int samples, int k = 3);

struct LoadTiming {
    double mapped_ms = 0.0;  // map_container: mmap + full validation
    double copied_ms = 0.0;  // read into a heap buffer + same validation
};

// Minimum over `repeats` timed loads of each strategy.
LoadTiming compare_load_times(const std::filesystem::path& container_path,
                              int repeats);

struct ReportSummary {
    std::uint64_t param_count = 0;  // backbone + head
    double retrain_seconds = 0.0;
    double final_train_accuracy = 0.0;
    double final_validation_accuracy = 0.0;
};

// Machine-readable JSON document: the metric series, the FLOPs breakdown,
// latency when present, 8/32-bit size estimates, and a summary row shaped
// like {parameters in millions, time to retrain, accuracy}. The metrics CSV
// (head.hpp) carries the same series for external plotting.
std::string emit_report(const MetricsSeries& metrics,
                        const FlopsBreakdown& flops,
                        const LatencyStats* latency,
                        const ReportSummary& summary);

std::string render_text_summary(const FlopsBreakdown& flops,
                                const LatencyStats* latency,
                                const ReportSummary& summary);

}  // namespace slr
