#include "slr/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "slr/error.hpp"
#include "slr/quantize.hpp"

namespace slr {

FlopsBreakdown flops(const BackboneSpec& spec, int head_dim, int n_classes) {
    const auto shapes = infer_shapes(spec);
    FlopsBreakdown breakdown;

    int h = spec.input_h, w = spec.input_w, c = spec.input_c;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& layer = spec.layers[i];
        const auto [oh, ow, oc] = shapes[i];
        LayerFlops lf;
        lf.name = "layer" + std::to_string(i) + "." +
                  layer_kind_name(layer.kind);
        switch (layer.kind) {
            case LayerKind::kConv2d:
                lf.macs = std::uint64_t(layer.kernel_h) * layer.kernel_w * c *
                          oc * oh * ow;
                lf.flops = 2 * lf.macs;
                if (layer.bias) lf.flops += std::uint64_t(oh) * ow * oc;
                break;
            case LayerKind::kDepthwiseConv2d:
                lf.macs = std::uint64_t(layer.kernel_h) * layer.kernel_w * c *
                          oh * ow;
                lf.flops = 2 * lf.macs;
                break;
            case LayerKind::kPointwiseConv2d:
                lf.macs = std::uint64_t(c) * oc * oh * ow;
                lf.flops = 2 * lf.macs;
                if (layer.bias) lf.flops += std::uint64_t(oh) * ow * oc;
                break;
            case LayerKind::kRelu6:
                lf.flops = std::uint64_t(oh) * ow * oc;
                break;
            case LayerKind::kGlobalAvgPool:
                lf.flops = std::uint64_t(h) * w * c;  // one add per element
                break;
            case LayerKind::kFlatten:
                break;
        }
        breakdown.layers.push_back(std::move(lf));
        h = oh;
        w = ow;
        c = oc;
    }

    LayerFlops head;
    head.name = "head";
    head.macs = std::uint64_t(head_dim) * n_classes;
    head.flops = 2 * head.macs + n_classes;
    breakdown.layers.push_back(std::move(head));

    for (const LayerFlops& lf : breakdown.layers) {
        breakdown.total_macs += lf.macs;
        breakdown.total_flops += lf.flops;
    }
    return breakdown;
}

double fps_estimate(double model_flops, double device_flops_per_second) {
    if (!(model_flops > 0.0) || !(device_flops_per_second > 0.0)) {
        throw Error("fps_estimate needs positive FLOPs figures");
    }
    return device_flops_per_second / model_flops;
}

LatencyStats measure_latency(const InferenceEngine& engine,
                             std::span<const LabeledImage> images, int warmup,
                             int samples, int k) {
    if (samples < 1) throw Error("measure_latency needs samples >= 1");
    if (images.empty()) throw Error("measure_latency needs images");

    using Clock = std::chrono::steady_clock;
    for (int i = 0; i < warmup; ++i) {
        (void)engine.predict_topk(images[i % images.size()], k);
    }

    std::vector<double> times_ms(samples);
    for (int i = 0; i < samples; ++i) {
        const auto start = Clock::now();
        (void)engine.predict_topk(images[i % images.size()], k);
        const auto stop = Clock::now();
        times_ms[i] =
            std::chrono::duration<double, std::milli>(stop - start).count();
    }
    std::sort(times_ms.begin(), times_ms.end());

    LatencyStats stats;
    stats.samples = samples;
    double sum = 0.0;
    for (double t : times_ms) sum += t;
    stats.mean_ms = sum / samples;
    if (samples % 2 == 1) {
        stats.median_ms = times_ms[samples / 2];
    } else {
        stats.median_ms =
            0.5 * (times_ms[samples / 2 - 1] + times_ms[samples / 2]);
    }
    const int p95_index = static_cast<int>(
        std::ceil(0.95 * samples)) - 1;
    stats.p95_ms = times_ms[std::clamp(p95_index, 0, samples - 1)];
    return stats;
}

LoadTiming compare_load_times(const std::filesystem::path& container_path,
                              int repeats) {
    if (repeats < 1) throw Error("compare_load_times needs repeats >= 1");
    using Clock = std::chrono::steady_clock;
    LoadTiming timing;
    timing.mapped_ms = std::numeric_limits<double>::infinity();
    timing.copied_ms = std::numeric_limits<double>::infinity();

    for (int i = 0; i < repeats; ++i) {
        const auto start = Clock::now();
        const MappedModel model = map_container(container_path);
        (void)model.manifest();
        const auto stop = Clock::now();
        timing.mapped_ms = std::min(
            timing.mapped_ms,
            std::chrono::duration<double, std::milli>(stop - start).count());
    }

    for (int i = 0; i < repeats; ++i) {
        const auto start = Clock::now();
        std::ifstream in(container_path, std::ios::binary);
        if (!in) throw IoError("cannot open: " + container_path.string());
        in.seekg(0, std::ios::end);
        const std::streamsize size = in.tellg();
        in.seekg(0);
        std::vector<std::byte> heap_copy(static_cast<std::size_t>(size));
        in.read(reinterpret_cast<char*>(heap_copy.data()), size);
        const ValidationReport report = validate_container_bytes(heap_copy);
        if (!report.ok()) throw Error("container failed validation");
        const auto stop = Clock::now();
        timing.copied_ms = std::min(
            timing.copied_ms,
            std::chrono::duration<double, std::milli>(stop - start).count());
    }
    return timing;
}

namespace {

nlohmann::json metrics_json(const MetricsSeries& metrics) {
    nlohmann::json rows = nlohmann::json::array();
    for (const MetricsRecord& r : metrics.records) {
        rows.push_back({{"step", r.step},
                        {"train_acc", r.train_acc},
                        {"val_acc", r.val_acc},
                        {"train_xent", r.train_xent},
                        {"val_xent", r.val_xent}});
    }
    return rows;
}

}  // namespace

std::string emit_report(const MetricsSeries& metrics,
                        const FlopsBreakdown& flops,
                        const LatencyStats* latency,
                        const ReportSummary& summary) {
    nlohmann::json doc;
    doc["summary"] = {
        {"parameters", summary.param_count},
        {"parameters_millions",
         static_cast<double>(summary.param_count) / 1e6},
        {"retrain_seconds", summary.retrain_seconds},
        {"final_train_accuracy", summary.final_train_accuracy},
        {"final_validation_accuracy", summary.final_validation_accuracy},
    };
    doc["metrics"] = metrics_json(metrics);

    nlohmann::json layer_rows = nlohmann::json::array();
    for (const LayerFlops& lf : flops.layers) {
        layer_rows.push_back(
            {{"name", lf.name}, {"macs", lf.macs}, {"flops", lf.flops}});
    }
    doc["flops"] = {{"layers", layer_rows},
                    {"total_macs", flops.total_macs},
                    {"total_flops", flops.total_flops}};

    if (latency) {
        doc["latency"] = {{"samples", latency->samples},
                          {"mean_ms", latency->mean_ms},
                          {"median_ms", latency->median_ms},
                          {"p95_ms", latency->p95_ms}};
    } else {
        doc["latency"] = nullptr;
    }

    const SizeEstimate full = model_size_estimate(summary.param_count, 32);
    const SizeEstimate quant = model_size_estimate(summary.param_count, 8);
    doc["sizes"] = {{"real32_bytes", full.total_bytes},
                    {"quant8_bytes", quant.total_bytes}};
    return doc.dump(2);
}

std::string render_text_summary(const FlopsBreakdown& flops,
                                const LatencyStats* latency,
                                const ReportSummary& summary) {
    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof(buf),
                  "parameters: %llu (%.3f million)\n",
                  static_cast<unsigned long long>(summary.param_count),
                  static_cast<double>(summary.param_count) / 1e6);
    out += buf;
    std::snprintf(buf, sizeof(buf), "retrain time: %.2f s\n",
                  summary.retrain_seconds);
    out += buf;
    std::snprintf(buf, sizeof(buf),
                  "final accuracy: train %.4f, validation %.4f\n",
                  summary.final_train_accuracy,
                  summary.final_validation_accuracy);
    out += buf;
    std::snprintf(buf, sizeof(buf),
                  "flops per inference: %llu (%llu MACs)\n",
                  static_cast<unsigned long long>(flops.total_flops),
                  static_cast<unsigned long long>(flops.total_macs));
    out += buf;
    if (latency) {
        std::snprintf(buf, sizeof(buf),
                      "latency: mean %.3f ms, median %.3f ms, p95 %.3f ms "
                      "(%d samples)\n",
                      latency->mean_ms, latency->median_ms, latency->p95_ms,
                      latency->samples);
        out += buf;
    }
    return out;
}

}  // namespace slr
