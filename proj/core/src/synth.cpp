#include "slr/synth.hpp"

#include <algorithm>
#include <cmath>

#include "slr/error.hpp"
#include "slr/rng.hpp"

namespace slr {

namespace {

// A per-class template: a few gaussian intensity bumps at seeded positions.
std::array<float, kImagePixels> make_template(SplitMix64& rng) {
    std::array<float, kImagePixels> tmpl{};
    const int bumps = 2 + static_cast<int>(rng.next_below(3));
    for (int b = 0; b < bumps; ++b) {
        const double cy = 4.0 + rng.next_unit() * 20.0;
        const double cx = 4.0 + rng.next_unit() * 20.0;
        const double sigma = 2.5 + rng.next_unit() * 4.0;
        const double amp = 120.0 + rng.next_unit() * 110.0;
        for (int y = 0; y < kImageSide; ++y) {
            for (int x = 0; x < kImageSide; ++x) {
                const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                tmpl[y * kImageSide + x] += static_cast<float>(
                    amp * std::exp(-d2 / (2.0 * sigma * sigma)));
            }
        }
    }
    return tmpl;
}

}  // namespace

Dataset make_synthetic_dataset(std::size_t count, std::uint64_t seed,
                               double noise_sigma) {
    if (noise_sigma < 0.0) throw Error("noise sigma must be >= 0");
    Dataset ds;
    ds.label_names = asl_label_names();

    SplitMix64 template_rng(seed);
    std::vector<std::array<float, kImagePixels>> templates;
    templates.reserve(kNumClasses);
    for (int c = 0; c < kNumClasses; ++c) {
        templates.push_back(make_template(template_rng));
    }

    SplitMix64 noise_rng(seed ^ 0xbf58476d1ce4e5b9ULL);
    ds.images.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const int cls = static_cast<int>(i % kNumClasses);
        LabeledImage img;
        img.label = static_cast<std::uint8_t>(cls);
        const auto& tmpl = templates[cls];
        for (int p = 0; p < kImagePixels; ++p) {
            const double v =
                tmpl[p] + noise_rng.next_gaussian() * noise_sigma;
            img.pixels[p] = static_cast<std::uint8_t>(
                std::clamp(v, 0.0, 255.0));
        }
        ds.images.push_back(img);
    }
    return ds;
}

}  // namespace slr
