#pragma once

// Central-finite-difference gradient of the mean softmax-cross-entropy
// batch loss, as a check on the analytic head gradient. The loss function
// here is its own double-precision implementation; parameters are double
// copies so the difference quotient is not limited by float32 spacing.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace oracle {

inline double batch_loss(const std::vector<double>& weights,
                         const std::vector<double>& biases, int dim,
                         int n_classes, std::span<const float> batch,
                         std::span<const int> labels) {
    double total = 0.0;
    for (std::size_t s = 0; s < labels.size(); ++s) {
        const float* x = batch.data() + s * dim;
        std::vector<double> logits(biases);
        for (int d = 0; d < dim; ++d) {
            for (int j = 0; j < n_classes; ++j) {
                logits[j] += double(x[d]) * weights[std::size_t(d) * n_classes + j];
            }
        }
        const double max_logit = *std::max_element(logits.begin(), logits.end());
        double denom = 0.0;
        for (double& l : logits) {
            l = std::exp(l - max_logit);
            denom += l;
        }
        const double p = logits[labels[s]] / denom;
        total += -std::log(std::max(p, 1e-12));
    }
    return total / double(labels.size());
}

struct FdGradient {
    std::vector<double> weights;
    std::vector<double> biases;
};

inline FdGradient fd_gradient(std::vector<double> weights,
                              std::vector<double> biases, int dim,
                              int n_classes, std::span<const float> batch,
                              std::span<const int> labels,
                              double step = 1e-4) {
    FdGradient grad;
    grad.weights.resize(weights.size());
    grad.biases.resize(biases.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double keep = weights[i];
        weights[i] = keep + step;
        const double above = batch_loss(weights, biases, dim, n_classes,
                                        batch, labels);
        weights[i] = keep - step;
        const double below = batch_loss(weights, biases, dim, n_classes,
                                        batch, labels);
        weights[i] = keep;
        grad.weights[i] = (above - below) / (2.0 * step);
    }
    for (std::size_t i = 0; i < biases.size(); ++i) {
        const double keep = biases[i];
        biases[i] = keep + step;
        const double above = batch_loss(weights, biases, dim, n_classes,
                                        batch, labels);
        biases[i] = keep - step;
        const double below = batch_loss(weights, biases, dim, n_classes,
                                        batch, labels);
        biases[i] = keep;
        grad.biases[i] = (above - below) / (2.0 * step);
    }
    return grad;
}

}  // namespace oracle
