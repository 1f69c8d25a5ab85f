#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "slr/tensor.hpp"

namespace slr {

inline constexpr int kImageSide = 28;
inline constexpr int kImagePixels = kImageSide * kImageSide;
inline constexpr int kNumClasses = 24;

// One 28x28 grayscale sample. `label` is an index into
// Dataset::label_names (0..23), not the raw CSV label value.
struct LabeledImage {
    std::uint8_t label = 0;
    std::array<std::uint8_t, kImagePixels> pixels{};  // row-major, 0..255
};

struct Dataset {
    std::vector<LabeledImage> images;
    std::vector<std::string> label_names;  // the 24 letters A..Y minus J, Z

    std::size_t size() const { return images.size(); }
};

// Deterministic train/validation/test partition of [0, n).
// test and val each take floor(n/10); train keeps the remainder, so the
// training share never drops below 80%.
struct SplitManifest {
    std::uint64_t seed = 0;
    std::vector<std::uint32_t> train_ids;
    std::vector<std::uint32_t> val_ids;
    std::vector<std::uint32_t> test_ids;
};

enum class Normalization {
    kUnit,    // p / 255        -> [0, 1]
    kSigned,  // p / 127.5 - 1  -> [-1, 1]
};

Normalization parse_normalization(const std::string& name);  // "unit"|"signed"
std::string normalization_name(Normalization n);

// The 24 static ASL letters: alphabet positions 0..24 with J (9) absent,
// and Z (25) out of range entirely.
std::vector<std::string> asl_label_names();

// Raw CSV label -> letter at that position of A..Z. Raw labels are alphabet
// positions, so 9 (J) never occurs and nothing reaches 25 (Z).
// Throws LabelError for 9 and for anything outside [0, 24].
std::string label_to_letter(int raw_label);

// Raw CSV label <-> index into asl_label_names().
int raw_label_to_class(int raw_label);  // throws LabelError like above
int class_to_raw_label(int class_index);

// Reads the published CSV format: header `label,pixel1,...,pixel784`, then
// one row of 785 integers per image. Preserves file order. Accepts LF or
// CRLF. Malformed rows raise ParseError naming the data row (1-based);
// label values that are not one of the 24 classes raise LabelError.
Dataset load_csv(const std::filesystem::path& path);

// Writes the same CSV format (labels as raw alphabet positions).
void save_csv(const Dataset& ds, const std::filesystem::path& path);

// Seeded Fisher-Yates shuffle of [0, n) using SplitMix64(seed); the shuffled
// order is then cut into train, validation and test segments in that order.
SplitManifest split(const Dataset& ds, std::uint64_t seed);

// Split manifest text file: line 1 `seed=<u64>`, then `train:`, `val:`,
// `test:` sections of newline-separated indices.
void save_split(const SplitManifest& m, const std::filesystem::path& path);
SplitManifest load_split(const std::filesystem::path& path);

// 28x28x1 float tensor under the given normalization.
Tensor to_tensor(const LabeledImage& image,
                 Normalization scheme = Normalization::kSigned);

// One 8-bit grayscale PNG per image, named `<index>_<letter>.png`.
// Creates the directory if needed; returns the number of files written.
std::size_t export_png(const Dataset& ds,
                       const std::filesystem::path& directory);

}  // namespace slr
