// slr: pipeline driver for the sign-language recognition toolkit.
// Subcommands cover the whole workflow:
//   synth -> convert -> split -> train -> eval -> quantize -> pack ->
//   inspect -> bench -> infer

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "json.hpp"

#include "slr/bench.hpp"
#include "slr/bottleneck.hpp"
#include "slr/container.hpp"
#include "slr/dataset.hpp"
#include "slr/engine.hpp"
#include "slr/error.hpp"
#include "slr/head.hpp"
#include "slr/image_png.hpp"
#include "slr/quantize.hpp"
#include "slr/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;

struct Options {
    // global
    std::uint64_t seed = 1;
    bool json_output = false;
    std::string normalization = "signed";
    std::string config_path;

    // shared inputs
    std::string csv_path;
    std::string model_path;
    std::string out_path;
    std::string out_dir;

    // synth
    std::size_t synth_count = 27455;
    double synth_noise = 300.0;

    // train (stock retraining defaults)
    std::string backbone = "flatten";
    double learning_rate = 0.01;
    int steps = 5000;
    int batch_size = 100;
    int eval_interval = 10;
    int val_batch_size = 100;
    std::string split_file;
    std::string metrics_path = "metrics.csv";
    std::string report_path = "report.json";
    std::string cache_dir;
    int threads = 0;

    // eval
    std::string section = "test";

    // pack
    std::string head_from;
    bool quantize_head_flag = false;

    // bench
    double device_gflops = 10.0;
    double model_gflops = 0.0;
    int warmup = 10;
    int samples = 50;

    // infer
    std::string image_path;
    int csv_row = -1;
    int topk = 3;
};

slr::BackboneSpec resolve_backbone(const std::string& name) {
    if (name == "flatten") return slr::flatten_backbone();
    if (name == "desk") return slr::desk_backbone();
    std::ifstream in(name, std::ios::binary);
    if (!in) {
        throw slr::Error("backbone must be `flatten`, `desk` or a spec file; "
                         "cannot open " + name);
    }
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return slr::parse_backbone(text);
}

fs::path cache_directory(const Options& opt) {
    if (!opt.cache_dir.empty()) return opt.cache_dir;
    if (const char* env = std::getenv("SLR_CACHE_DIR")) return env;
    return ".slr-cache";
}

std::string percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f%%", fraction * 100.0);
    return buf;
}

// Loads a cached bottleneck set when it matches the backbone fingerprint
// and the requested ids; recomputes (with a warning on staleness) otherwise.
slr::BottleneckCache cached_bottlenecks(
    const Options& opt, const slr::BackboneSpec& spec,
    const slr::WeightSet& weights, const slr::Dataset& ds,
    std::span<const std::uint32_t> ids, slr::Normalization norm,
    std::uint64_t split_seed, const std::string& section) {
    const std::uint64_t fingerprint =
        slr::backbone_fingerprint(spec, weights, norm);
    const fs::path dir = cache_directory(opt);
    char name[128];
    std::snprintf(name, sizeof(name), "bn_%016llx_%llu_%s.bnck",
                  static_cast<unsigned long long>(fingerprint),
                  static_cast<unsigned long long>(split_seed), section.c_str());
    const fs::path file = dir / name;

    std::vector<std::uint32_t> sorted(ids.begin(), ids.end());
    std::sort(sorted.begin(), sorted.end());

    if (fs::exists(file)) {
        try {
            slr::BottleneckCache cache = slr::load_cache(file);
            if (cache.backbone_fingerprint == fingerprint &&
                cache.ids == sorted) {
                return cache;
            }
            std::cerr << "warning: stale bottleneck cache " << file.string()
                      << ", recomputing\n";
        } catch (const slr::Error& e) {
            std::cerr << "warning: unreadable bottleneck cache ("
                      << e.what() << "), recomputing\n";
        }
    }

    slr::BottleneckCache cache =
        slr::compute_bottlenecks(spec, weights, ds, ids, norm, opt.threads);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!ec) slr::save_cache(cache, file);
    return cache;
}

slr::SplitManifest resolve_split(const Options& opt, const slr::Dataset& ds) {
    if (!opt.split_file.empty()) return slr::load_split(opt.split_file);
    return slr::split(ds, opt.seed);
}

int run_synth(const Options& opt) {
    if (opt.out_path.empty()) throw slr::Error("synth needs --out");
    const slr::Dataset ds =
        slr::make_synthetic_dataset(opt.synth_count, opt.seed, opt.synth_noise);
    slr::save_csv(ds, opt.out_path);
    if (opt.json_output) {
        std::cout << json{{"images", ds.size()},
                          {"path", opt.out_path},
                          {"seed", opt.seed}}.dump() << "\n";
    } else {
        std::cout << "wrote " << ds.size() << " images to " << opt.out_path
                  << "\n";
    }
    return kExitOk;
}

int run_convert(const Options& opt) {
    const slr::Dataset ds = slr::load_csv(opt.csv_path);
    if (ds.size() == 0) {
        throw slr::Error("nothing to convert: " + opt.csv_path +
                         " has no data rows");
    }
    const std::size_t written = slr::export_png(ds, opt.out_dir);

    std::map<std::string, std::size_t> histogram;
    for (const slr::LabeledImage& img : ds.images) {
        ++histogram[ds.label_names[img.label]];
    }
    if (opt.json_output) {
        std::cout << json{{"images", written},
                          {"classes", histogram.size()},
                          {"histogram", histogram}}.dump() << "\n";
    } else {
        std::cout << written << " images, " << histogram.size()
                  << " classes\n";
        for (const auto& [letter, count] : histogram) {
            std::cout << letter << ": " << count << "\n";
        }
    }
    return kExitOk;
}

int run_split(const Options& opt) {
    const slr::Dataset ds = slr::load_csv(opt.csv_path);
    const slr::SplitManifest manifest = slr::split(ds, opt.seed);
    if (!opt.out_path.empty()) slr::save_split(manifest, opt.out_path);
    if (opt.json_output) {
        std::cout << json{{"seed", manifest.seed},
                          {"train", manifest.train_ids.size()},
                          {"val", manifest.val_ids.size()},
                          {"test", manifest.test_ids.size()}}.dump() << "\n";
    } else {
        std::cout << "seed=" << manifest.seed
                  << " train=" << manifest.train_ids.size()
                  << " val=" << manifest.val_ids.size()
                  << " test=" << manifest.test_ids.size() << "\n";
    }
    return kExitOk;
}

int run_train(Options opt) {
    if (opt.out_path.empty()) opt.out_path = "model.slrm";
    const slr::Normalization norm =
        slr::parse_normalization(opt.normalization);
    const slr::Dataset ds = slr::load_csv(opt.csv_path);
    if (ds.size() == 0) throw slr::Error("dataset is empty");
    const slr::SplitManifest manifest = resolve_split(opt, ds);

    const slr::BackboneSpec spec = resolve_backbone(opt.backbone);
    const slr::WeightSet weights = slr::init_weights(spec, opt.seed);

    const slr::BottleneckCache train_cache = cached_bottlenecks(
        opt, spec, weights, ds, manifest.train_ids, norm, manifest.seed,
        "train");
    const slr::BottleneckCache val_cache = cached_bottlenecks(
        opt, spec, weights, ds, manifest.val_ids, norm, manifest.seed, "val");
    const std::vector<int> train_labels = slr::labels_for(train_cache, ds);
    const std::vector<int> val_labels = slr::labels_for(val_cache, ds);

    slr::TrainConfig config;
    config.learning_rate = opt.learning_rate;
    config.steps = opt.steps;
    config.batch_size = opt.batch_size;
    config.eval_interval = opt.eval_interval;
    config.val_batch_size = opt.val_batch_size;
    config.seed = opt.seed;

    const auto start = std::chrono::steady_clock::now();
    auto [head, metrics] = slr::train_head(train_cache, train_labels,
                                           val_cache, val_labels,
                                           ds.label_names, config);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();

    slr::save_metrics_csv(metrics, opt.metrics_path);

    slr::ModelArtifacts artifacts;
    artifacts.spec = spec;
    artifacts.weights = weights;
    artifacts.head = head;
    artifacts.normalization = norm;
    slr::write_container(artifacts, opt.out_path);

    slr::ReportSummary summary;
    summary.param_count =
        slr::param_count(spec) +
        slr::head_param_count(head.n_classes, head.dim);
    summary.retrain_seconds = seconds;
    summary.final_train_accuracy = metrics.final_train_acc;
    summary.final_validation_accuracy = metrics.final_val_acc;
    const slr::FlopsBreakdown fb =
        slr::flops(spec, int(head.dim), int(head.n_classes));
    std::ofstream report(opt.report_path, std::ios::binary);
    report << slr::emit_report(metrics, fb, nullptr, summary) << "\n";

    if (opt.json_output) {
        std::cout << json{{"train_accuracy", metrics.final_train_acc},
                          {"validation_accuracy", metrics.final_val_acc},
                          {"train_xent", metrics.final_train_xent},
                          {"validation_xent", metrics.final_val_xent},
                          {"steps", config.steps},
                          {"seed", opt.seed},
                          {"model", opt.out_path},
                          {"metrics", opt.metrics_path},
                          {"report", opt.report_path}}.dump() << "\n";
    } else {
        std::cout << "training accuracy: " << percent(metrics.final_train_acc)
                  << "\n";
        std::cout << "validation accuracy: " << percent(metrics.final_val_acc)
                  << "\n";
        std::cout << "model: " << opt.out_path << "\n";
    }
    return kExitOk;
}

int run_eval(const Options& opt) {
    const slr::MappedModel model = slr::map_container(opt.model_path);
    const slr::ModelArtifacts artifacts = slr::unpack(model);
    const slr::Dataset ds = slr::load_csv(opt.csv_path);
    const slr::SplitManifest manifest = resolve_split(opt, ds);

    std::span<const std::uint32_t> ids;
    if (opt.section == "train") {
        ids = manifest.train_ids;
    } else if (opt.section == "val") {
        ids = manifest.val_ids;
    } else if (opt.section == "test") {
        ids = manifest.test_ids;
    } else {
        throw slr::Error("--section must be train, val or test");
    }

    const slr::BottleneckCache cache = cached_bottlenecks(
        opt, artifacts.spec, artifacts.weights, ds, ids,
        artifacts.normalization, manifest.seed, opt.section);
    const std::vector<int> labels = slr::labels_for(cache, ds);

    const slr::SoftmaxHead head =
        std::holds_alternative<slr::SoftmaxHead>(artifacts.head)
            ? std::get<slr::SoftmaxHead>(artifacts.head)
            : slr::dequantize_head(
                  std::get<slr::QuantizedHead>(artifacts.head));
    const slr::EvalResult result = slr::evaluate(head, cache, labels);

    if (opt.json_output) {
        std::cout << json{{"section", opt.section},
                          {"accuracy", result.accuracy},
                          {"mean_xent", result.mean_xent},
                          {"count", cache.count()}}.dump() << "\n";
    } else {
        std::cout << opt.section << " accuracy: " << percent(result.accuracy)
                  << " (" << cache.count() << " images), mean cross-entropy: "
                  << result.mean_xent << "\n";
    }
    return kExitOk;
}

int run_quantize(const Options& opt) {
    const slr::MappedModel model = slr::map_container(opt.model_path);
    slr::ModelArtifacts artifacts = slr::unpack(model);
    if (!std::holds_alternative<slr::SoftmaxHead>(artifacts.head)) {
        throw slr::Error("head is already quantized: " + opt.model_path);
    }
    const slr::SoftmaxHead& head = std::get<slr::SoftmaxHead>(artifacts.head);
    const std::uint64_t params =
        slr::head_param_count(head.n_classes, head.dim);
    const std::uint64_t before = slr::model_size_estimate(params, 32).total_bytes;
    const std::uint64_t after = slr::model_size_estimate(params, 8).total_bytes;

    artifacts.head = slr::quantize_head(head);
    const std::uint64_t written = slr::write_container(artifacts, opt.out_path);

    const double reduction = 1.0 - double(after) / double(before);
    if (opt.json_output) {
        std::cout << json{{"head_payload_before", before},
                          {"head_payload_after", after},
                          {"reduction_percent", reduction * 100.0},
                          {"bytes_written", written},
                          {"model", opt.out_path}}.dump() << "\n";
    } else {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.1f%%", reduction * 100.0);
        std::cout << "head payload: " << before << " -> " << after
                  << " bytes (" << buf << " smaller)\n";
        std::cout << "model: " << opt.out_path << "\n";
    }
    return kExitOk;
}

int run_pack(const Options& opt) {
    if (opt.head_from.empty()) throw slr::Error("pack needs --head-from");
    const slr::MappedModel source = slr::map_container(opt.head_from);
    slr::ModelArtifacts artifacts = slr::unpack(source);

    if (!opt.backbone.empty()) {
        artifacts.spec = resolve_backbone(opt.backbone);
        artifacts.weights = slr::init_weights(artifacts.spec, opt.seed);
    }
    if (opt.quantize_head_flag) {
        if (auto* head = std::get_if<slr::SoftmaxHead>(&artifacts.head)) {
            artifacts.head = slr::quantize_head(*head);
        }
    }
    const std::uint64_t written = slr::write_container(artifacts, opt.out_path);
    if (opt.json_output) {
        std::cout << json{{"bytes_written", written},
                          {"model", opt.out_path}}.dump() << "\n";
    } else {
        std::cout << "wrote " << written << " bytes to " << opt.out_path
                  << "\n";
    }
    return kExitOk;
}

int run_inspect(const Options& opt) {
    const slr::ValidationReport report =
        slr::validate_container(opt.model_path);
    if (opt.json_output) {
        json checks = json::array();
        for (const slr::Check& check : report.checks) {
            checks.push_back({{"name", check.name},
                              {"ok", check.ok},
                              {"detail", check.detail}});
        }
        json blobs = json::array();
        if (report.manifest) {
            for (const slr::BlobInfo& blob : report.manifest->blobs) {
                blobs.push_back(
                    {{"name", blob.name},
                     {"dtype", blob.dtype == slr::BlobDtype::kReal32
                                   ? "real32"
                                   : "quant8"},
                     {"shape", blob.shape},
                     {"offset", blob.offset},
                     {"length", blob.length}});
            }
        }
        std::cout << json{{"ok", report.ok()},
                          {"checks", checks},
                          {"blobs", blobs},
                          {"file_bytes", report.file_bytes}}.dump() << "\n";
    } else {
        std::cout << report.render_text();
    }
    return report.ok() ? kExitOk : kExitUsage;
}

int run_bench(const Options& opt) {
    if (opt.model_gflops > 0.0) {
        const double fps =
            slr::fps_estimate(opt.model_gflops * 1e9, opt.device_gflops * 1e9);
        if (opt.json_output) {
            std::cout << json{{"fps", fps},
                              {"model_gflops", opt.model_gflops},
                              {"device_gflops", opt.device_gflops}}.dump()
                      << "\n";
        } else {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.2f fps", fps);
            std::cout << buf << "\n";
        }
        return kExitOk;
    }

    if (opt.model_path.empty()) {
        throw slr::Error("bench needs --model or --model-gflops");
    }
    const slr::MappedModel model = slr::map_container(opt.model_path);
    const slr::InferenceEngine engine = slr::InferenceEngine::from_model(model);
    const slr::BackboneSpec& spec = engine.spec();
    const slr::FlopsBreakdown fb =
        slr::flops(spec, int(engine.head().dim), int(engine.head().n_classes));
    const double fps =
        slr::fps_estimate(double(fb.total_flops), opt.device_gflops * 1e9);

    slr::Dataset ds;
    if (!opt.csv_path.empty()) {
        ds = slr::load_csv(opt.csv_path);
    } else {
        ds = slr::make_synthetic_dataset(16, opt.seed);
    }
    const slr::LatencyStats latency = slr::measure_latency(
        engine, ds.images, opt.warmup, opt.samples, opt.topk);
    const slr::LoadTiming loads = slr::compare_load_times(opt.model_path, 5);

    slr::ReportSummary summary;
    summary.param_count =
        slr::param_count(spec) +
        slr::head_param_count(engine.head().n_classes, engine.head().dim);
    const slr::MetricsSeries empty_metrics;
    const std::string report =
        slr::emit_report(empty_metrics, fb, &latency, summary);
    if (!opt.report_path.empty()) {
        std::ofstream out(opt.report_path, std::ios::binary);
        out << report << "\n";
    }

    if (opt.json_output) {
        json doc = json::parse(report);
        doc["fps_at_device_gflops"] = fps;
        doc["device_gflops"] = opt.device_gflops;
        doc["load_ms"] = {{"mapped", loads.mapped_ms},
                          {"copied", loads.copied_ms}};
        std::cout << doc.dump() << "\n";
    } else {
        std::cout << slr::render_text_summary(fb, &latency, summary);
        char buf[128];
        std::snprintf(buf, sizeof(buf),
                      "fps at %.1f GFLOP/s: %.2f\n", opt.device_gflops, fps);
        std::cout << buf;
        std::snprintf(buf, sizeof(buf),
                      "load: mapped %.3f ms, copied %.3f ms\n",
                      loads.mapped_ms, loads.copied_ms);
        std::cout << buf;
    }
    return kExitOk;
}

int run_infer(const Options& opt) {
    const slr::MappedModel model = slr::map_container(opt.model_path);
    const slr::InferenceEngine engine = slr::InferenceEngine::from_model(model);

    slr::LabeledImage image;
    if (!opt.image_path.empty()) {
        int w = 0, h = 0;
        const auto pixels = slr::read_gray_png(opt.image_path, w, h);
        if (w != slr::kImageSide || h != slr::kImageSide) {
            throw slr::Error("image must be 28x28 grayscale, got " +
                             std::to_string(w) + "x" + std::to_string(h));
        }
        std::copy(pixels.begin(), pixels.end(), image.pixels.begin());
    } else if (opt.csv_row >= 0) {
        if (opt.csv_path.empty()) throw slr::Error("--row needs --csv");
        const slr::Dataset ds = slr::load_csv(opt.csv_path);
        if (std::size_t(opt.csv_row) >= ds.size()) {
            throw slr::Error("row " + std::to_string(opt.csv_row) +
                             " outside dataset of size " +
                             std::to_string(ds.size()));
        }
        image = ds.images[opt.csv_row];
    } else {
        throw slr::Error("infer needs --image or --csv with --row");
    }

    const auto start = std::chrono::steady_clock::now();
    const auto top = engine.predict_topk(image, opt.topk);
    const double latency_ms =
        std::chrono::duration<double, std::milli>(
            std::chrono::steady_clock::now() - start)
            .count();

    if (opt.json_output) {
        json rows = json::array();
        for (const auto& [letter, p] : top) {
            rows.push_back({{"label", letter}, {"p", p}});
        }
        std::cout << json{{"topk", rows}, {"latency_ms", latency_ms}}.dump()
                  << "\n";
    } else {
        for (const auto& [letter, p] : top) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%s %.4f", letter.c_str(), p);
            std::cout << buf << "\n";
        }
        char buf[64];
        std::snprintf(buf, sizeof(buf), "latency_ms=%.3f", latency_ms);
        std::cout << buf << "\n";
    }
    return kExitOk;
}

// Config file values sit between built-in defaults and explicit flags.
void apply_config(Options& opt, const CLI::App& app, const CLI::App* active) {
    if (opt.config_path.empty()) return;
    std::ifstream in(opt.config_path);
    if (!in) throw slr::Error("cannot open config: " + opt.config_path);
    json config;
    in >> config;

    auto given = [&](const char* flag) {
        const CLI::Option* option = app.get_option_no_throw(flag);
        if (option && option->count() > 0) return true;
        if (active) {
            option = active->get_option_no_throw(flag);
            if (option && option->count() > 0) return true;
        }
        return false;
    };
    auto apply = [&](const char* flag, auto& field) {
        if (!given(flag) && config.contains(flag + 2)) {
            config.at(flag + 2).get_to(field);
        }
    };
    apply("--seed", opt.seed);
    apply("--normalization", opt.normalization);
    apply("--lr", opt.learning_rate);
    apply("--steps", opt.steps);
    apply("--batch-size", opt.batch_size);
    apply("--eval-interval", opt.eval_interval);
    apply("--val-batch-size", opt.val_batch_size);
    apply("--backbone", opt.backbone);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transfer-learning and mobile-style inference toolkit for "
                 "28x28 hand-sign classification"};
    app.require_subcommand(1);

    Options opt;
    app.add_option("--seed", opt.seed, "seed for splits, init and sampling");
    app.add_flag("--json", opt.json_output, "machine-readable output");
    app.add_option("--normalization", opt.normalization,
                   "pixel normalization: unit or signed")
        ->check(CLI::IsMember({"unit", "signed"}));
    app.add_option("--config", opt.config_path,
                   "JSON config file (flags take precedence)");

    CLI::App* synth = app.add_subcommand(
        "synth", "generate a synthetic dataset CSV in the published format");
    synth->add_option("--out", opt.out_path, "output CSV path")->required();
    synth->add_option("--count", opt.synth_count, "number of images");
    synth->add_option("--noise", opt.synth_noise, "per-pixel noise sigma");

    CLI::App* convert = app.add_subcommand(
        "convert", "CSV to PNG images plus a class histogram");
    convert->add_option("--csv", opt.csv_path, "input CSV")->required();
    convert->add_option("--out-dir", opt.out_dir, "PNG output directory")
        ->required();

    CLI::App* split_cmd = app.add_subcommand(
        "split", "write a deterministic 80/10/10 split manifest");
    split_cmd->add_option("--csv", opt.csv_path, "input CSV")->required();
    split_cmd->add_option("--out", opt.out_path, "split manifest path");

    CLI::App* train = app.add_subcommand(
        "train", "cache bottlenecks and retrain the softmax head");
    train->add_option("--csv", opt.csv_path, "input CSV")->required();
    train->add_option("--backbone", opt.backbone,
                      "flatten, desk or a spec file");
    train->add_option("--lr", opt.learning_rate, "learning rate");
    train->add_option("--steps", opt.steps, "training steps");
    train->add_option("--batch-size", opt.batch_size, "training batch size");
    train->add_option("--eval-interval", opt.eval_interval,
                      "steps between validation measurements");
    train->add_option("--val-batch-size", opt.val_batch_size,
                      "validation subset size per measurement");
    train->add_option("--split-file", opt.split_file,
                      "use an existing split manifest");
    train->add_option("--out", opt.out_path, "output model container");
    train->add_option("--metrics", opt.metrics_path, "metrics CSV path");
    train->add_option("--report", opt.report_path, "report JSON path");
    train->add_option("--cache-dir", opt.cache_dir,
                      "bottleneck cache directory (or $SLR_CACHE_DIR)");
    train->add_option("--threads", opt.threads,
                      "bottleneck computation threads (0 = auto)");

    CLI::App* eval_cmd = app.add_subcommand(
        "eval", "evaluate a model container on a split section");
    eval_cmd->add_option("--model", opt.model_path, "model container")
        ->required();
    eval_cmd->add_option("--csv", opt.csv_path, "input CSV")->required();
    eval_cmd->add_option("--section", opt.section, "train, val or test");
    eval_cmd->add_option("--split-file", opt.split_file,
                         "use an existing split manifest");
    eval_cmd->add_option("--cache-dir", opt.cache_dir,
                         "bottleneck cache directory");
    eval_cmd->add_option("--threads", opt.threads,
                         "bottleneck computation threads (0 = auto)");

    CLI::App* quantize = app.add_subcommand(
        "quantize", "8-bit quantize the head of a model container");
    quantize->add_option("--model", opt.model_path, "input container")
        ->required();
    quantize->add_option("--out", opt.out_path, "output container")
        ->required();

    CLI::App* pack = app.add_subcommand(
        "pack", "assemble a model container from parts");
    pack->add_option("--head-from", opt.head_from,
                     "container providing head, labels and normalization")
        ->required();
    pack->add_option("--backbone", opt.backbone,
                     "replace the backbone: flatten, desk or a spec file")
        ->expected(1);
    pack->add_flag("--quantize-head", opt.quantize_head_flag,
                   "quantize the head while packing");
    pack->add_option("--out", opt.out_path, "output container")->required();

    CLI::App* inspect = app.add_subcommand(
        "inspect", "validate a container and print its blob table");
    inspect->add_option("--model", opt.model_path, "model container")
        ->required();

    CLI::App* bench = app.add_subcommand(
        "bench", "FLOPs, fps extrapolation and wall-clock latency");
    bench->add_option("--model", opt.model_path, "model container");
    bench->add_option("--csv", opt.csv_path, "images for latency timing");
    bench->add_option("--device-gflops", opt.device_gflops,
                      "device budget in GFLOP/s");
    bench->add_option("--model-gflops", opt.model_gflops,
                      "skip the model and extrapolate fps for this size");
    bench->add_option("--warmup", opt.warmup, "untimed inferences");
    bench->add_option("--samples", opt.samples, "timed inferences");
    bench->add_option("--report", opt.report_path, "report JSON path");

    CLI::App* infer = app.add_subcommand(
        "infer", "top-k prediction for one image");
    infer->add_option("--model", opt.model_path, "model container")
        ->required();
    infer->add_option("--image", opt.image_path, "28x28 grayscale PNG");
    infer->add_option("--csv", opt.csv_path, "CSV to take a row from");
    infer->add_option("--row", opt.csv_row, "row index into --csv");
    infer->add_option("-k,--topk", opt.topk, "number of classes to print");

    // global flags may trail the subcommand
    for (CLI::App* sub : app.get_subcommands(nullptr)) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        const auto parsed = app.get_subcommands();
        const CLI::App* active = parsed.empty() ? nullptr : parsed.front();
        apply_config(opt, app, active);
        // pack's --backbone means "replace"; empty means "keep"
        if (app.got_subcommand(pack) &&
            pack->get_option("--backbone")->count() == 0) {
            opt.backbone.clear();
        }

        if (app.got_subcommand(synth)) return run_synth(opt);
        if (app.got_subcommand(convert)) return run_convert(opt);
        if (app.got_subcommand(split_cmd)) return run_split(opt);
        if (app.got_subcommand(train)) return run_train(opt);
        if (app.got_subcommand(eval_cmd)) return run_eval(opt);
        if (app.got_subcommand(quantize)) return run_quantize(opt);
        if (app.got_subcommand(pack)) return run_pack(opt);
        if (app.got_subcommand(inspect)) return run_inspect(opt);
        if (app.got_subcommand(bench)) return run_bench(opt);
        if (app.got_subcommand(infer)) return run_infer(opt);
        std::cerr << "error: no subcommand\n";
        return kExitUsage;
    } catch (const slr::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
