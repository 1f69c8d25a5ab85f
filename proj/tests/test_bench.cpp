#include <unistd.h>

#include <filesystem>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "oracles/naive_ops.hpp"
#include "slr/bench.hpp"
#include "slr/container.hpp"
#include "slr/error.hpp"
#include "slr/rng.hpp"
#include "slr/synth.hpp"

namespace fs = std::filesystem;
using namespace slr;

namespace {

fs::path temp_dir() {
    static int counter = 0;
    fs::path dir = fs::temp_directory_path() /
                   ("slr_bench_test_" + std::to_string(getpid()) + "_" +
                    std::to_string(counter++));
    fs::create_directories(dir);
    return dir;
}

BackboneSpec random_small_spec(SplitMix64& rng) {
    BackboneSpec spec;
    spec.input_h = 6 + int(rng.next_below(10));
    spec.input_w = 6 + int(rng.next_below(10));
    spec.input_c = 1 + int(rng.next_below(3));
    const int blocks = 1 + int(rng.next_below(3));
    for (int b = 0; b < blocks; ++b) {
        switch (rng.next_below(3)) {
            case 0:
                spec.layers.push_back(
                    {.kind = LayerKind::kConv2d,
                     .kernel_h = 1 + int(rng.next_below(3)),
                     .kernel_w = 1 + int(rng.next_below(3)),
                     .stride = 1 + int(rng.next_below(2)),
                     .padding = Padding::kSame,
                     .out_channels = 1 + int(rng.next_below(6)),
                     .bias = rng.next_below(2) == 0});
                break;
            case 1:
                spec.layers.push_back(
                    {.kind = LayerKind::kDepthwiseConv2d,
                     .kernel_h = 1 + int(rng.next_below(3)),
                     .kernel_w = 1 + int(rng.next_below(3)),
                     .stride = 1 + int(rng.next_below(2)),
                     .padding = Padding::kSame,
                     .bias = false});
                break;
            default:
                spec.layers.push_back(
                    {.kind = LayerKind::kPointwiseConv2d,
                     .out_channels = 1 + int(rng.next_below(6)),
                     .bias = rng.next_below(2) == 0});
                break;
        }
        spec.layers.push_back({.kind = LayerKind::kRelu6, .bias = false});
    }
    if (rng.next_below(2) == 0) {
        spec.layers.push_back(
            {.kind = LayerKind::kGlobalAvgPool, .bias = false});
    }
    spec.layers.push_back({.kind = LayerKind::kFlatten, .bias = false});
    return spec;
}

}  // namespace

TEST_CASE("flops closed forms") {
    SUBCASE("single 3x3 conv, 1 -> 8 channels, valid padding") {
        BackboneSpec spec;
        spec.input_h = 28;
        spec.input_w = 28;
        spec.input_c = 1;
        spec.layers = {LayerSpec{.kind = LayerKind::kConv2d,
                                 .kernel_h = 3,
                                 .kernel_w = 3,
                                 .stride = 1,
                                 .padding = Padding::kValid,
                                 .out_channels = 8,
                                 .bias = false},
                       LayerSpec{.kind = LayerKind::kFlatten, .bias = false}};
        const FlopsBreakdown fb = flops(spec, 1, 1);
        CHECK(fb.layers[0].flops == 2ull * 3 * 3 * 1 * 8 * 26 * 26);
        CHECK(fb.layers[0].flops == 97344);
        CHECK(fb.layers[0].macs == 48672);
    }
    SUBCASE("head at 1001- and 2048-wide features") {
        const FlopsBreakdown fb = flops(flatten_backbone(), 1001, 24);
        const LayerFlops& head = fb.layers.back();
        CHECK(head.name == "head");
        CHECK(head.flops == 2ull * 1001 * 24 + 24);
        CHECK(head.flops == 48072);
    }
}

TEST_CASE("flops equals instrumented op counting on random specs") {
    SplitMix64 rng(404);
    for (int trial = 0; trial < 15; ++trial) {
        const BackboneSpec spec = random_small_spec(rng);
        const int head_dim = bottleneck_dim(spec);
        const int n = 2 + int(rng.next_below(23));
        const FlopsBreakdown fb = flops(spec, head_dim, n);
        const oracle::OpCounts counts = oracle::count_ops(spec, head_dim, n);
        CHECK(fb.total_flops == counts.flops());
        CHECK(fb.total_macs == counts.macs());
    }
}

TEST_CASE("fps extrapolation") {
    CHECK(fps_estimate(5e9, 1e10) == 2.0);  // exact, no tolerance
    CHECK(fps_estimate(7.5e9, 7.5e9) == 1.0);
    CHECK_THROWS_AS(fps_estimate(0.0, 1e10), Error);
    CHECK_THROWS_AS(fps_estimate(1e9, -1.0), Error);

    const FlopsBreakdown fb = flops(desk_backbone(), 32, 24);
    const double fps = fps_estimate(double(fb.total_flops), 1e10);
    CHECK(fps == 1e10 / double(fb.total_flops));
}

TEST_CASE("latency measurement") {
    const ModelArtifacts artifacts = [] {
        ModelArtifacts a;
        a.spec = flatten_backbone();
        SoftmaxHead head = zero_head(kImagePixels, asl_label_names());
        a.head = std::move(head);
        return a;
    }();
    const InferenceEngine engine = InferenceEngine::from_parts(
        artifacts.spec, artifacts.weights,
        std::get<SoftmaxHead>(artifacts.head), artifacts.normalization);
    const Dataset ds = make_synthetic_dataset(4, 3);

    SUBCASE("single sample collapses the stats") {
        const LatencyStats stats = measure_latency(engine, ds.images, 1, 1);
        CHECK(stats.samples == 1);
        CHECK(stats.mean_ms == stats.median_ms);
        CHECK(stats.median_ms == stats.p95_ms);
        CHECK(stats.mean_ms > 0.0);
    }
    SUBCASE("median never exceeds p95") {
        for (int samples : {2, 3, 7, 20}) {
            const LatencyStats stats =
                measure_latency(engine, ds.images, 0, samples);
            CHECK(stats.median_ms <= stats.p95_ms);
            CHECK(stats.mean_ms > 0.0);
        }
    }
    SUBCASE("samples must be positive") {
        CHECK_THROWS_AS(measure_latency(engine, ds.images, 0, 0), Error);
    }
}

TEST_CASE("mapped load is no slower than the read-and-copy path") {
    const auto dir = temp_dir();
    // a model whose payload is a few MB, so the copy path pays for the
    // allocation and the extra memcpy
    ModelArtifacts artifacts;
    artifacts.spec = [] {
        BackboneSpec spec;
        spec.input_h = 28;
        spec.input_w = 28;
        spec.input_c = 1;
        spec.layers = {
            LayerSpec{.kind = LayerKind::kConv2d,
                      .kernel_h = 3,
                      .kernel_w = 3,
                      .stride = 2,
                      .padding = Padding::kSame,
                      .out_channels = 256},
            LayerSpec{.kind = LayerKind::kPointwiseConv2d,
                      .out_channels = 4096},
            LayerSpec{.kind = LayerKind::kGlobalAvgPool, .bias = false},
            LayerSpec{.kind = LayerKind::kFlatten, .bias = false}};
        return spec;
    }();
    artifacts.weights = init_weights(artifacts.spec, 60);
    SoftmaxHead head = zero_head(4096, asl_label_names());
    SplitMix64 rng(60);
    for (float& w : head.weights) {
        w = static_cast<float>(rng.next_gaussian());
    }
    artifacts.head = std::move(head);
    const auto path = dir / "model.slrm";
    write_container(artifacts, path);
    REQUIRE(fs::file_size(path) > 4u << 20);

    const LoadTiming timing = compare_load_times(path, 9);
    CHECK(timing.mapped_ms > 0.0);
    CHECK(timing.copied_ms > 0.0);
    CHECK(timing.mapped_ms <= timing.copied_ms);
}

TEST_CASE("report emission and round trip") {
    MetricsSeries metrics;
    metrics.records.push_back({10, 0.5, 0.45, 1.2, 1.3});
    metrics.records.push_back({20, 0.9, 0.8, 0.4, 0.5});
    metrics.final_train_acc = 0.9;
    metrics.final_val_acc = 0.8;
    const FlopsBreakdown fb = flops(desk_backbone(), 32, 24);
    const LatencyStats latency{5, 1.5, 1.25, 2.5};
    ReportSummary summary;
    summary.param_count = param_count(desk_backbone()) +
                          head_param_count(24, 32);
    summary.retrain_seconds = 12.5;
    summary.final_train_accuracy = 0.9;
    summary.final_validation_accuracy = 0.8;

    const std::string doc = emit_report(metrics, fb, &latency, summary);
    const nlohmann::json parsed = nlohmann::json::parse(doc);

    CHECK(parsed["summary"]["parameters"] == summary.param_count);
    CHECK(parsed["summary"]["parameters_millions"].get<double>() ==
          doctest::Approx(double(summary.param_count) / 1e6));
    CHECK(parsed["summary"]["retrain_seconds"].get<double>() == 12.5);
    CHECK(parsed["summary"]["final_validation_accuracy"].get<double>() == 0.8);

    REQUIRE(parsed["metrics"].size() == 2);
    CHECK(parsed["metrics"][0]["step"] == 10);
    CHECK(parsed["metrics"][0]["train_acc"].get<double>() == 0.5);
    CHECK(parsed["metrics"][1]["val_xent"].get<double>() == 0.5);

    CHECK(parsed["flops"]["total_flops"] == fb.total_flops);
    CHECK(parsed["flops"]["layers"].size() == fb.layers.size());
    CHECK(parsed["latency"]["p95_ms"].get<double>() == 2.5);
    CHECK(parsed["sizes"]["real32_bytes"] == summary.param_count * 4);
    CHECK(parsed["sizes"]["quant8_bytes"] == summary.param_count);

    // re-serializing the parsed document keeps every numeric field
    const nlohmann::json reparsed =
        nlohmann::json::parse(parsed.dump(2));
    CHECK(reparsed == parsed);

    SUBCASE("zero-step series emits a single record") {
        MetricsSeries only_final;
        only_final.records.push_back({0, 0.04, 0.04, 3.17, 3.17});
        const std::string small =
            emit_report(only_final, fb, nullptr, summary);
        const nlohmann::json p = nlohmann::json::parse(small);
        CHECK(p["metrics"].size() == 1);
        CHECK(p["latency"].is_null());
    }

    const std::string text = render_text_summary(fb, &latency, summary);
    CHECK(text.find("parameters") != std::string::npos);
    CHECK(text.find("validation") != std::string::npos);
}
