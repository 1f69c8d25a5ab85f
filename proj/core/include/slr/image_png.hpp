#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace slr {

// Lossless 8-bit grayscale PNG write/read (libpng underneath). Inputs with
// other color types are converted to 8-bit gray on read.
void write_gray_png(const std::filesystem::path& path,
                    const std::uint8_t* pixels, int width, int height);

std::vector<std::uint8_t> read_gray_png(const std::filesystem::path& path,
                                        int& width, int& height);

}  // namespace slr
