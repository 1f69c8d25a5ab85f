#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "slr/backbone.hpp"
#include "slr/dataset.hpp"
#include "slr/head.hpp"
#include "slr/quantize.hpp"

namespace slr {

// Single-file model format, little-endian throughout:
//
//   8 bytes  magic `SLRMODL1`
//   u32      container version (1)
//   u64      manifest length in bytes
//   ...      manifest (canonical text, see below)
//   ...      zero padding to a 64-byte boundary
//   ...      blobs, each starting on a 64-byte boundary
//   u32      CRC32 (zlib polynomial 0xEDB88320, reflected) of the payload
//            region [manifest end, end of last blob's padding)
//
// The manifest is line-oriented text in a fixed order: format_version,
// normalization, labels, the backbone spec between backbone_begin/_end,
// one `blob` line per tensor, payload_crc32, and a final manifest_crc32
// covering every preceding manifest byte. Blob regions hold raw values
// only (f32 for real32, one code byte per element for quant8); dtype,
// shape and the quant8 scale/zero_point live in the blob line.

inline constexpr char kContainerMagic[8] = {'S', 'L', 'R', 'M',
                                            'O', 'D', 'L', '1'};
inline constexpr std::uint32_t kContainerVersion = 1;
inline constexpr std::size_t kBlobAlignment = 64;

enum class BlobDtype : std::uint8_t { kReal32 = 0, kQuant8 = 1 };

struct BlobInfo {
    std::string name;
    BlobDtype dtype = BlobDtype::kReal32;
    std::vector<std::size_t> shape;
    std::uint64_t offset = 0;  // from file start, multiple of 64
    std::uint64_t length = 0;  // bytes
    float scale = 1.0f;        // quant8 only
    int zero_point = 0;        // quant8 only
};

struct ContainerManifest {
    std::uint32_t version = kContainerVersion;
    Normalization normalization = Normalization::kSigned;
    std::vector<std::string> label_names;
    std::string backbone_text;
    std::vector<BlobInfo> blobs;
    std::uint32_t payload_crc32 = 0;

    const BlobInfo* find_blob(const std::string& name) const;
};

// Everything a container stores: the frozen backbone plus either a float32
// or a quantized head.
struct ModelArtifacts {
    BackboneSpec spec;
    WeightSet weights;
    std::variant<SoftmaxHead, QuantizedHead> head;
    Normalization normalization = Normalization::kSigned;

    const std::vector<std::string>& label_names() const;
};

// Validates shapes first (nothing is written on failure), then emits a
// byte-for-byte deterministic file. Returns bytes written.
std::uint64_t write_container(const ModelArtifacts& artifacts,
                              const std::filesystem::path& path);

// Read-only mapping of a validated container. Blob accessors hand out
// views into the mapped region; nothing from the payload is copied at
// load time (the copy counters exist to prove it).
class MappedModel {
  public:
    MappedModel(MappedModel&& other) noexcept;
    MappedModel& operator=(MappedModel&& other) noexcept;
    MappedModel(const MappedModel&) = delete;
    MappedModel& operator=(const MappedModel&) = delete;
    ~MappedModel();

    const ContainerManifest& manifest() const { return manifest_; }
    std::span<const std::byte> blob_bytes(const BlobInfo& blob) const;
    std::span<const std::byte> blob_bytes(const std::string& name) const;
    std::span<const float> real32_values(const std::string& name) const;
    std::span<const std::uint8_t> quant8_codes(const std::string& name) const;

    std::uint64_t blob_bytes_copied_at_load() const {
        return blob_bytes_copied_;
    }
    std::uint64_t manifest_bytes_copied_at_load() const {
        return manifest_bytes_copied_;
    }

  private:
    friend MappedModel map_container(const std::filesystem::path& path);
    MappedModel() = default;

    const std::byte* base_ = nullptr;
    std::size_t size_ = 0;
    ContainerManifest manifest_;
    std::uint64_t blob_bytes_copied_ = 0;
    std::uint64_t manifest_bytes_copied_ = 0;
};

// Maps the file and validates magic, version, manifest, alignment, bounds
// and both checksums before returning. Throws FormatError /
// CorruptionError / BoundsError depending on what is wrong.
MappedModel map_container(const std::filesystem::path& path);

// Copies a mapped container back into owned artifacts (used by the CLI
// transforms; not the zero-copy inference path).
ModelArtifacts unpack(const MappedModel& model);

// --- validation report -----------------------------------------------------

enum class CheckKind { kFormat, kBounds, kCorruption };

struct Check {
    std::string name;
    CheckKind kind = CheckKind::kFormat;
    bool ok = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<Check> checks;
    std::optional<ContainerManifest> manifest;
    std::uint64_t file_bytes = 0;
    std::uint64_t header_bytes = 0;    // magic + version + manifest length
    std::uint64_t manifest_bytes = 0;
    std::uint64_t payload_bytes = 0;   // blobs plus all padding
    std::uint64_t trailer_bytes = 0;   // the payload CRC32 field

    bool ok() const;
    const Check* first_failure() const;
    std::string render_text() const;
};

// Runs every check it can and reports the results instead of throwing.
ValidationReport validate_container(const std::filesystem::path& path);
ValidationReport validate_container_bytes(std::span<const std::byte> bytes);

}  // namespace slr
