#include "slr/engine.hpp"

#include "slr/error.hpp"

namespace slr {

InferenceEngine InferenceEngine::from_model(const MappedModel& model) {
    const ContainerManifest& manifest = model.manifest();
    InferenceEngine engine;
    engine.spec_ = parse_backbone(manifest.backbone_text);
    engine.labels_ = manifest.label_names;
    engine.norm_ = manifest.normalization;

    engine.views_.resize(engine.spec_.layers.size());
    for (std::size_t i = 0; i < engine.spec_.layers.size(); ++i) {
        const std::string kname = "layer" + std::to_string(i) + ".kernel";
        const BlobInfo* kernel = manifest.find_blob(kname);
        if (!kernel) continue;
        engine.views_[i].kernel =
            TensorView(kernel->shape, model.real32_values(kname));
        const std::string bname = "layer" + std::to_string(i) + ".bias";
        if (const BlobInfo* bias = manifest.find_blob(bname)) {
            engine.views_[i].bias =
                TensorView(bias->shape, model.real32_values(bname));
        }
    }

    const BlobInfo* w = manifest.find_blob("head.weights");
    const BlobInfo* b = manifest.find_blob("head.biases");
    if (!w || !b || w->shape.size() != 2 || b->shape.size() != 1) {
        throw FormatError("container head blobs missing or mis-shaped");
    }
    engine.head_.dim = static_cast<std::uint32_t>(w->shape[0]);
    engine.head_.n_classes = static_cast<std::uint32_t>(w->shape[1]);
    if (engine.head_.n_classes != engine.labels_.size()) {
        throw FormatError("head classes do not match label names");
    }

    if (w->dtype == BlobDtype::kReal32) {
        engine.head_.weights = model.real32_values("head.weights");
        engine.head_.biases = model.real32_values("head.biases");
    } else {
        const auto codes = model.quant8_codes("head.weights");
        engine.owned_head_weights_.resize(codes.size());
        for (std::size_t i = 0; i < codes.size(); ++i) {
            engine.owned_head_weights_[i] =
                w->scale * static_cast<float>(int(codes[i]) - w->zero_point);
        }
        const auto bcodes = model.quant8_codes("head.biases");
        engine.owned_head_biases_.resize(bcodes.size());
        for (std::size_t i = 0; i < bcodes.size(); ++i) {
            engine.owned_head_biases_[i] =
                b->scale * static_cast<float>(int(bcodes[i]) - b->zero_point);
        }
        engine.head_.weights = engine.owned_head_weights_;
        engine.head_.biases = engine.owned_head_biases_;
    }
    return engine;
}

InferenceEngine InferenceEngine::from_parts(const BackboneSpec& spec,
                                            const WeightSet& weights,
                                            const SoftmaxHead& head,
                                            Normalization normalization) {
    InferenceEngine engine;
    engine.spec_ = spec;
    engine.views_ = weight_views(spec, weights);
    engine.head_ = HeadView(head);
    engine.labels_ = head.label_names;
    engine.norm_ = normalization;
    return engine;
}

std::vector<float> InferenceEngine::bottleneck(
    const LabeledImage& image) const {
    return forward(spec_, views_, to_tensor(image, norm_));
}

std::vector<std::pair<std::string, double>> InferenceEngine::predict_topk(
    const LabeledImage& image, int k) const {
    const std::vector<float> features = bottleneck(image);
    return slr::predict_topk(head_, labels_, features, k);
}

}  // namespace slr
