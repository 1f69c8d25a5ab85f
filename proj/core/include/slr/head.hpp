#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slr/bottleneck.hpp"

namespace slr {

// The only trainable object: a D x N weight matrix plus N biases in front
// of a softmax. weights[d * N + j] multiplies bottleneck component d into
// class j.
struct SoftmaxHead {
    std::uint32_t dim = 0;        // D
    std::uint32_t n_classes = 0;  // N
    std::vector<float> weights;   // D x N, row-major
    std::vector<float> biases;    // N
    std::vector<std::string> label_names;

    bool operator==(const SoftmaxHead&) const = default;
};

SoftmaxHead zero_head(std::uint32_t dim,
                      std::vector<std::string> label_names);

// Non-owning head parameters; the inference path works on views so weights
// mapped straight from a model file are consumed in place.
struct HeadView {
    std::uint32_t dim = 0;
    std::uint32_t n_classes = 0;
    std::span<const float> weights;
    std::span<const float> biases;

    HeadView() = default;
    HeadView(const SoftmaxHead& h)
        : dim(h.dim), n_classes(h.n_classes), weights(h.weights),
          biases(h.biases) {}
};

// N + D*N: one bias and one weight row per label.
std::uint64_t head_param_count(std::uint64_t n_labels,
                               std::uint64_t bottleneck_dim);

struct TrainConfig {
    double learning_rate = 0.01;
    int steps = 5000;
    int batch_size = 100;
    int eval_interval = 10;   // steps between validation measurements
    int val_batch_size = 100; // random validation subset per measurement
    std::uint64_t seed = 1;
};

struct MetricsRecord {
    int step = 0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double train_xent = 0.0;
    double val_xent = 0.0;
};

// One record per eval_interval plus a final record over the whole training
// and validation sets (the final record is the last element of `records`
// and is mirrored in the final_* fields).
struct MetricsSeries {
    std::vector<MetricsRecord> records;
    double final_train_acc = 0.0;
    double final_train_xent = 0.0;
    double final_val_acc = 0.0;
    double final_val_xent = 0.0;
};

// CSV form `step,train_acc,val_acc,train_xent,val_xent`, one row per record.
std::string metrics_to_csv(const MetricsSeries& m);
void save_metrics_csv(const MetricsSeries& m,
                      const std::filesystem::path& path);

// Max-subtracted exponentiation, normalized in double precision. Outputs
// are strictly positive (exponents are floored at -700 so nothing
// underflows to zero) and sum to 1.
std::vector<double> softmax(std::span<const double> logits);

// -log(p_true) with p clamped at 1e-12 before the log.
double cross_entropy(std::span<const double> probabilities, int true_label);

// W^T x + b per class, accumulated in double.
std::vector<double> head_logits(const HeadView& head,
                                std::span<const float> bottleneck);

struct HeadGradient {
    std::vector<double> weights;  // D x N
    std::vector<double> biases;   // N
};

// Mean softmax-cross-entropy gradient over the batch: per sample, class j
// receives (p_j - 1{j = label}); weight column j additionally scales by the
// sample's bottleneck. `batch` is labels.size() rows of head.dim values.
HeadGradient head_gradient(const SoftmaxHead& head,
                           std::span<const float> batch,
                           std::span<const int> labels);

struct EvalResult {
    double accuracy = 0.0;
    double mean_xent = 0.0;
};

// Accuracy (argmax, ties to the lowest class index) and mean cross-entropy
// over `batch`.
EvalResult evaluate_batch(const SoftmaxHead& head, std::span<const float> batch,
                          std::span<const int> labels);

// Same, over a whole cache. Throws on an empty cache.
EvalResult evaluate(const SoftmaxHead& head, const BottleneckCache& cache,
                    std::span<const int> labels);

// Plain SGD from a zero head: each step samples batch_size training rows
// without replacement (SplitMix64(config.seed) feeding the partial
// Fisher-Yates in rng.hpp) and applies w <- w - lr * grad. Every
// eval_interval steps a record is written: the training numbers come from
// that step's own forward pass (pre-update weights), the validation numbers
// from the just-updated head on a fresh random subset of val_batch_size
// rows drawn from a second stream seeded with
// config.seed ^ 0x94d049bb133111eb. Deterministic for fixed inputs.
std::pair<SoftmaxHead, MetricsSeries> train_head(
    const BottleneckCache& train_cache, std::span<const int> train_labels,
    const BottleneckCache& val_cache, std::span<const int> val_labels,
    std::vector<std::string> label_names, const TrainConfig& config);

// k highest-probability classes, descending, ties to the lowest class
// index. Throws unless 1 <= k <= N.
std::vector<std::pair<std::string, double>> predict_topk(
    const HeadView& head, std::span<const std::string> label_names,
    std::span<const float> bottleneck, int k);
std::vector<std::pair<std::string, double>> predict_topk(
    const SoftmaxHead& head, std::span<const float> bottleneck, int k);

}  // namespace slr
