#pragma once

#include <stdexcept>
#include <string>

namespace slr {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// dataset-io: malformed CSV rows vs. labels outside the 24-class alphabet.
struct ParseError : Error { using Error::Error; };
struct LabelError : Error { using Error::Error; };

// tensor layer contracts (channel mismatch, bad kernel shapes, ...).
struct ShapeError : Error { using Error::Error; };

// model container, split by how the damage is detected:
// FormatError     bad magic / version / manifest
// CorruptionError checksum mismatch
// BoundsError     truncated file or region outside the file
struct FormatError : Error { using Error::Error; };
struct CorruptionError : Error { using Error::Error; };
struct BoundsError : Error { using Error::Error; };

// bottleneck cache fingerprint inconsistencies.
struct CacheError : Error { using Error::Error; };

struct IoError : Error { using Error::Error; };

}  // namespace slr
