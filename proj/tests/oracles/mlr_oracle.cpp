#include "oracles/mlr_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace oracle {

namespace {

// SplitMix64, written out again on purpose: the generator is part of the
// documented contract, so an independent copy of the published algorithm
// must reproduce the pipeline's draws.
struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    std::uint64_t below(std::uint64_t bound) { return next() % bound; }
};

struct Split {
    std::vector<std::uint32_t> train, val, test;
};

Split make_split(std::size_t n, std::uint64_t seed) {
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(order[i - 1], order[j]);
    }
    const std::size_t tenth = n / 10;
    Split split;
    split.train.assign(order.begin(), order.end() - 2 * tenth);
    split.val.assign(order.end() - 2 * tenth, order.end() - tenth);
    split.test.assign(order.end() - tenth, order.end());
    return split;
}

void normalize(const slr::LabeledImage& image, std::vector<double>& out) {
    out.resize(slr::kImagePixels);
    for (int p = 0; p < slr::kImagePixels; ++p) {
        out[p] = double(image.pixels[p]) / 127.5 - 1.0;
    }
}

int predict(const std::vector<double>& weights,
            const std::vector<double>& biases, int n_classes,
            const std::vector<double>& x) {
    int best = 0;
    double best_logit = -1e300;
    for (int j = 0; j < n_classes; ++j) {
        double logit = biases[j];
        for (int d = 0; d < slr::kImagePixels; ++d) {
            logit += x[d] * weights[std::size_t(d) * n_classes + j];
        }
        if (logit > best_logit) {
            best_logit = logit;
            best = j;
        }
    }
    return best;
}

double accuracy_on(const slr::Dataset& ds,
                   const std::vector<std::uint32_t>& ids,
                   const std::vector<double>& weights,
                   const std::vector<double>& biases, int n_classes) {
    std::size_t correct = 0;
    std::vector<double> x;
    for (std::uint32_t id : ids) {
        normalize(ds.images[id], x);
        if (predict(weights, biases, n_classes, x) == ds.images[id].label) {
            ++correct;
        }
    }
    return double(correct) / double(ids.size());
}

}  // namespace

MlrResult train_reference(const slr::Dataset& dataset, const MlrConfig& cfg) {
    const int n_classes = static_cast<int>(dataset.label_names.size());
    const int dim = slr::kImagePixels;

    Split split = make_split(dataset.size(), cfg.split_seed);
    // The pipeline trains on features stored in ascending id order; match
    // that ordering so the sampled batches line up position for position.
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.val.begin(), split.val.end());

    std::vector<double> weights(std::size_t(dim) * n_classes, 0.0);
    std::vector<double> biases(n_classes, 0.0);

    Rng batch_rng(cfg.train_seed);
    std::vector<std::uint32_t> scratch;
    std::vector<double> x;
    std::vector<double> logits(n_classes);
    std::vector<double> grad_w(weights.size());
    std::vector<double> grad_b(biases.size());

    const std::uint32_t train_count =
        static_cast<std::uint32_t>(split.train.size());
    for (int step = 1; step <= cfg.steps; ++step) {
        scratch.resize(train_count);
        std::iota(scratch.begin(), scratch.end(), 0u);
        for (int i = 0; i < cfg.batch_size; ++i) {
            const std::uint32_t j =
                i + static_cast<std::uint32_t>(
                        batch_rng.below(train_count - i));
            std::swap(scratch[i], scratch[j]);
        }

        std::fill(grad_w.begin(), grad_w.end(), 0.0);
        std::fill(grad_b.begin(), grad_b.end(), 0.0);
        for (int s = 0; s < cfg.batch_size; ++s) {
            const std::uint32_t id = split.train[scratch[s]];
            normalize(dataset.images[id], x);
            for (int j = 0; j < n_classes; ++j) {
                logits[j] = biases[j];
            }
            for (int d = 0; d < dim; ++d) {
                for (int j = 0; j < n_classes; ++j) {
                    logits[j] += x[d] * weights[std::size_t(d) * n_classes + j];
                }
            }
            const double max_logit =
                *std::max_element(logits.begin(), logits.end());
            double denom = 0.0;
            for (int j = 0; j < n_classes; ++j) {
                logits[j] = std::exp(logits[j] - max_logit);
                denom += logits[j];
            }
            const int label = dataset.images[id].label;
            for (int j = 0; j < n_classes; ++j) {
                const double coeff =
                    logits[j] / denom - (j == label ? 1.0 : 0.0);
                grad_b[j] += coeff;
                for (int d = 0; d < dim; ++d) {
                    grad_w[std::size_t(d) * n_classes + j] += coeff * x[d];
                }
            }
        }

        const double scale = cfg.learning_rate / double(cfg.batch_size);
        for (std::size_t i = 0; i < weights.size(); ++i) {
            weights[i] -= scale * grad_w[i];
        }
        for (int j = 0; j < n_classes; ++j) {
            biases[j] -= scale * grad_b[j];
        }
    }

    MlrResult result;
    result.train_accuracy =
        accuracy_on(dataset, split.train, weights, biases, n_classes);
    result.val_accuracy =
        accuracy_on(dataset, split.val, weights, biases, n_classes);
    return result;
}

}  // namespace oracle
