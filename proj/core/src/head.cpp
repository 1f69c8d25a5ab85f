#include "slr/head.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "slr/error.hpp"
#include "slr/rng.hpp"

namespace slr {

SoftmaxHead zero_head(std::uint32_t dim,
                      std::vector<std::string> label_names) {
    SoftmaxHead head;
    head.dim = dim;
    head.n_classes = static_cast<std::uint32_t>(label_names.size());
    head.weights.assign(std::size_t(dim) * head.n_classes, 0.0f);
    head.biases.assign(head.n_classes, 0.0f);
    head.label_names = std::move(label_names);
    return head;
}

std::uint64_t head_param_count(std::uint64_t n_labels,
                               std::uint64_t bottleneck_dim) {
    return n_labels + bottleneck_dim * n_labels;
}

std::vector<double> softmax(std::span<const double> logits) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (double v : logits) max_logit = std::max(max_logit, v);

    std::vector<double> probs(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        // Exponents floored at -700 so extreme logits stay strictly positive
        // instead of underflowing to zero.
        probs[i] = std::exp(std::max(logits[i] - max_logit, -700.0));
        sum += probs[i];
    }
    for (double& p : probs) p /= sum;
    return probs;
}

double cross_entropy(std::span<const double> probabilities, int true_label) {
    return -std::log(std::max(probabilities[true_label], 1e-12));
}

std::vector<double> head_logits(const HeadView& head,
                                std::span<const float> bottleneck) {
    if (bottleneck.size() != head.dim) {
        throw ShapeError("bottleneck length " +
                         std::to_string(bottleneck.size()) +
                         " does not match head dim " +
                         std::to_string(head.dim));
    }
    const std::size_t n = head.n_classes;
    std::vector<double> logits(head.biases.begin(), head.biases.end());
    for (std::size_t d = 0; d < head.dim; ++d) {
        const double x = bottleneck[d];
        const float* wrow = head.weights.data() + d * n;
        for (std::size_t j = 0; j < n; ++j) {
            logits[j] += x * wrow[j];
        }
    }
    return logits;
}

namespace {

int argmax_lowest(std::span<const double> probs) {
    int best = 0;
    for (int j = 1; j < static_cast<int>(probs.size()); ++j) {
        if (probs[j] > probs[best]) best = j;
    }
    return best;
}

struct BatchPass {
    HeadGradient grad;
    double accuracy = 0.0;
    double mean_xent = 0.0;
};

// One forward pass over the batch producing the mean gradient plus the
// batch accuracy / cross-entropy it implies.
BatchPass batch_gradient(const SoftmaxHead& head, std::span<const float> batch,
                         std::span<const int> labels) {
    if (labels.empty()) throw Error("head gradient needs a non-empty batch");
    const std::size_t d = head.dim;
    const std::size_t n = head.n_classes;
    if (batch.size() != labels.size() * d) {
        throw ShapeError("batch data length does not match labels * dim");
    }

    BatchPass out;
    out.grad.weights.assign(d * n, 0.0);
    out.grad.biases.assign(n, 0.0);

    std::size_t correct = 0;
    double xent_sum = 0.0;
    std::vector<double> coeff(n);
    for (std::size_t s = 0; s < labels.size(); ++s) {
        const std::span<const float> x = batch.subspan(s * d, d);
        const std::vector<double> logits = head_logits(head, x);
        const std::vector<double> p = softmax(logits);
        const int label = labels[s];
        if (label < 0 || label >= static_cast<int>(n)) {
            throw Error("label out of range: " + std::to_string(label));
        }
        if (argmax_lowest(p) == label) ++correct;
        xent_sum += cross_entropy(p, label);

        for (std::size_t j = 0; j < n; ++j) {
            coeff[j] = p[j] - (static_cast<int>(j) == label ? 1.0 : 0.0);
            out.grad.biases[j] += coeff[j];
        }
        for (std::size_t dd = 0; dd < d; ++dd) {
            const double xv = x[dd];
            double* grow = out.grad.weights.data() + dd * n;
            for (std::size_t j = 0; j < n; ++j) {
                grow[j] += xv * coeff[j];
            }
        }
    }

    const double inv = 1.0 / static_cast<double>(labels.size());
    for (double& g : out.grad.weights) g *= inv;
    for (double& g : out.grad.biases) g *= inv;
    out.accuracy = static_cast<double>(correct) * inv;
    out.mean_xent = xent_sum * inv;
    return out;
}

}  // namespace

HeadGradient head_gradient(const SoftmaxHead& head,
                           std::span<const float> batch,
                           std::span<const int> labels) {
    return batch_gradient(head, batch, labels).grad;
}

EvalResult evaluate_batch(const SoftmaxHead& head,
                          std::span<const float> batch,
                          std::span<const int> labels) {
    if (labels.empty()) throw Error("cannot evaluate an empty batch");
    const std::size_t d = head.dim;
    if (batch.size() != labels.size() * d) {
        throw ShapeError("batch data length does not match labels * dim");
    }
    std::size_t correct = 0;
    double xent_sum = 0.0;
    for (std::size_t s = 0; s < labels.size(); ++s) {
        const std::vector<double> p =
            softmax(head_logits(head, batch.subspan(s * d, d)));
        if (argmax_lowest(p) == labels[s]) ++correct;
        xent_sum += cross_entropy(p, labels[s]);
    }
    const double inv = 1.0 / static_cast<double>(labels.size());
    return {static_cast<double>(correct) * inv, xent_sum * inv};
}

EvalResult evaluate(const SoftmaxHead& head, const BottleneckCache& cache,
                    std::span<const int> labels) {
    if (cache.count() == 0) throw Error("cannot evaluate an empty cache");
    if (labels.size() != cache.count()) {
        throw Error("labels are not aligned with the cache");
    }
    if (cache.dim != head.dim) {
        throw ShapeError("cache dim " + std::to_string(cache.dim) +
                         " does not match head dim " +
                         std::to_string(head.dim));
    }
    return evaluate_batch(head, cache.data, labels);
}

std::pair<SoftmaxHead, MetricsSeries> train_head(
    const BottleneckCache& train_cache, std::span<const int> train_labels,
    const BottleneckCache& val_cache, std::span<const int> val_labels,
    std::vector<std::string> label_names, const TrainConfig& config) {
    if (train_cache.dim != val_cache.dim) {
        throw Error("train/val cache dim mismatch: " +
                    std::to_string(train_cache.dim) + " vs " +
                    std::to_string(val_cache.dim));
    }
    if (train_labels.size() != train_cache.count() ||
        val_labels.size() != val_cache.count()) {
        throw Error("labels are not aligned with the caches");
    }
    if (config.batch_size < 1 ||
        std::size_t(config.batch_size) > train_cache.count()) {
        throw Error("batch_size must be in [1, training-set size]");
    }
    if (config.val_batch_size < 1 ||
        std::size_t(config.val_batch_size) > val_cache.count()) {
        throw Error("val_batch_size must be in [1, validation-set size]");
    }
    if (config.learning_rate <= 0.0) throw Error("learning_rate must be > 0");
    if (config.steps < 0) throw Error("steps must be >= 0");
    if (config.eval_interval < 1) throw Error("eval_interval must be >= 1");

    const std::size_t d = train_cache.dim;
    SoftmaxHead head = zero_head(static_cast<std::uint32_t>(d),
                                 std::move(label_names));
    const std::size_t n = head.n_classes;

    SplitMix64 batch_rng(config.seed);
    SplitMix64 val_rng(config.seed ^ 0x94d049bb133111ebULL);
    std::vector<std::uint32_t> train_scratch;
    std::vector<std::uint32_t> val_scratch;
    std::vector<float> batch(std::size_t(config.batch_size) * d);
    std::vector<int> batch_labels(config.batch_size);
    std::vector<float> vbatch(std::size_t(config.val_batch_size) * d);
    std::vector<int> vbatch_labels(config.val_batch_size);

    MetricsSeries metrics;
    const double lr = config.learning_rate;
    for (int step = 1; step <= config.steps; ++step) {
        const auto rows = sample_without_replacement(
            static_cast<std::uint32_t>(train_cache.count()),
            static_cast<std::uint32_t>(config.batch_size), batch_rng,
            train_scratch);
        for (int i = 0; i < config.batch_size; ++i) {
            const auto src = train_cache.row(rows[i]);
            std::copy(src.begin(), src.end(), batch.begin() + std::size_t(i) * d);
            batch_labels[i] = train_labels[rows[i]];
        }

        const BatchPass pass = batch_gradient(head, batch, batch_labels);
        for (std::size_t i = 0; i < head.weights.size(); ++i) {
            head.weights[i] = static_cast<float>(head.weights[i] -
                                                 lr * pass.grad.weights[i]);
        }
        for (std::size_t j = 0; j < n; ++j) {
            head.biases[j] = static_cast<float>(head.biases[j] -
                                                lr * pass.grad.biases[j]);
        }

        if (step % config.eval_interval == 0) {
            const auto vrows = sample_without_replacement(
                static_cast<std::uint32_t>(val_cache.count()),
                static_cast<std::uint32_t>(config.val_batch_size), val_rng,
                val_scratch);
            for (int i = 0; i < config.val_batch_size; ++i) {
                const auto src = val_cache.row(vrows[i]);
                std::copy(src.begin(), src.end(),
                          vbatch.begin() + std::size_t(i) * d);
                vbatch_labels[i] = val_labels[vrows[i]];
            }
            const EvalResult v = evaluate_batch(head, vbatch, vbatch_labels);
            metrics.records.push_back({step, pass.accuracy, v.accuracy,
                                       pass.mean_xent, v.mean_xent});
        }
    }

    const EvalResult train_final = evaluate(head, train_cache, train_labels);
    const EvalResult val_final = evaluate(head, val_cache, val_labels);
    metrics.final_train_acc = train_final.accuracy;
    metrics.final_train_xent = train_final.mean_xent;
    metrics.final_val_acc = val_final.accuracy;
    metrics.final_val_xent = val_final.mean_xent;
    metrics.records.push_back({config.steps, train_final.accuracy,
                               val_final.accuracy, train_final.mean_xent,
                               val_final.mean_xent});
    return {std::move(head), std::move(metrics)};
}

std::vector<std::pair<std::string, double>> predict_topk(
    const HeadView& head, std::span<const std::string> label_names,
    std::span<const float> bottleneck, int k) {
    const int n = static_cast<int>(head.n_classes);
    if (k < 1 || k > n) {
        throw Error("k must be in [1, " + std::to_string(n) + "], got " +
                    std::to_string(k));
    }
    const std::vector<double> p = softmax(head_logits(head, bottleneck));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&](int a, int b) {
                          if (p[a] != p[b]) return p[a] > p[b];
                          return a < b;
                      });
    std::vector<std::pair<std::string, double>> top;
    top.reserve(k);
    for (int i = 0; i < k; ++i) {
        top.emplace_back(label_names[order[i]], p[order[i]]);
    }
    return top;
}

std::vector<std::pair<std::string, double>> predict_topk(
    const SoftmaxHead& head, std::span<const float> bottleneck, int k) {
    return predict_topk(HeadView(head), head.label_names, bottleneck, k);
}

namespace {

// Shortest representation that round-trips, so the CSV is lossless without
// drowning plots in digits.
std::string format_metric(double v) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

}  // namespace

std::string metrics_to_csv(const MetricsSeries& m) {
    std::string out = "step,train_acc,val_acc,train_xent,val_xent\n";
    for (const MetricsRecord& r : m.records) {
        out += std::to_string(r.step) + ',' + format_metric(r.train_acc) +
               ',' + format_metric(r.val_acc) + ',' +
               format_metric(r.train_xent) + ',' + format_metric(r.val_xent) +
               '\n';
    }
    return out;
}

void save_metrics_csv(const MetricsSeries& m,
                      const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << metrics_to_csv(m);
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace slr
