#pragma once

#include <string>
#include <utility>
#include <vector>

#include "slr/container.hpp"

namespace slr {

// Backbone + head wired up for single-image prediction. The engine holds
// views into whatever owns the weights (a MappedModel or caller-owned
// tensors), so the source must outlive it. A quant8 head is dequantized
// into engine-owned buffers once, at construction; that is arithmetic on
// read, not a load-time blob copy.
class InferenceEngine {
  public:
    static InferenceEngine from_model(const MappedModel& model);
    static InferenceEngine from_parts(const BackboneSpec& spec,
                                      const WeightSet& weights,
                                      const SoftmaxHead& head,
                                      Normalization normalization);

    std::vector<float> bottleneck(const LabeledImage& image) const;
    std::vector<std::pair<std::string, double>> predict_topk(
        const LabeledImage& image, int k) const;

    const BackboneSpec& spec() const { return spec_; }
    const std::vector<std::string>& label_names() const { return labels_; }
    Normalization normalization() const { return norm_; }
    const HeadView& head() const { return head_; }

  private:
    InferenceEngine() = default;

    BackboneSpec spec_;
    std::vector<LayerWeightsView> views_;
    HeadView head_;
    std::vector<std::string> labels_;
    Normalization norm_ = Normalization::kSigned;
    std::vector<float> owned_head_weights_;  // quant8 backing only
    std::vector<float> owned_head_biases_;
};

}  // namespace slr
