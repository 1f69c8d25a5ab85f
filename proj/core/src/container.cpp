#include "slr/container.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "slr/error.hpp"

namespace slr {

namespace {

constexpr std::size_t kHeaderBytes = 8 + 4 + 8;  // magic, version, manifest len
// "manifest_crc32=" + 8 hex digits + newline; always the final line.
constexpr std::size_t kManifestCrcLineBytes = 15 + 8 + 1;

std::size_t align_up(std::size_t value, std::size_t alignment) {
    return (value + alignment - 1) / alignment * alignment;
}

std::uint32_t crc32_of(std::span<const std::byte> bytes) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
                static_cast<uInt>(bytes.size())));
}

std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%08x", v);
    return buf;
}

std::string format_scale(float scale) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%a", static_cast<double>(scale));
    return buf;
}

std::size_t dtype_bytes_per_element(BlobDtype dtype) {
    return dtype == BlobDtype::kReal32 ? 4 : 1;
}

std::string render_blob_line(const BlobInfo& blob) {
    std::string line = "blob name=" + blob.name;
    line += " dtype=";
    line += blob.dtype == BlobDtype::kReal32 ? "real32" : "quant8";
    line += " shape=" + shape_to_string(blob.shape);
    line += " offset=" + std::to_string(blob.offset);
    line += " length=" + std::to_string(blob.length);
    if (blob.dtype == BlobDtype::kQuant8) {
        line += " scale=" + format_scale(blob.scale);
        line += " zero_point=" + std::to_string(blob.zero_point);
    }
    line += '\n';
    return line;
}

std::string render_manifest(const ContainerManifest& m,
                            const std::string& payload_crc_hex,
                            const std::string& manifest_crc_hex) {
    std::string text = "format_version=" + std::to_string(m.version) + '\n';
    text += "normalization=" + normalization_name(m.normalization) + '\n';
    text += "labels=";
    for (std::size_t i = 0; i < m.label_names.size(); ++i) {
        if (i) text += ',';
        text += m.label_names[i];
    }
    text += '\n';
    text += "backbone_begin\n";
    text += m.backbone_text;
    if (text.back() != '\n') text += '\n';
    text += "backbone_end\n";
    for (const BlobInfo& blob : m.blobs) {
        text += render_blob_line(blob);
    }
    text += "payload_crc32=" + payload_crc_hex + '\n';
    text += "manifest_crc32=" + manifest_crc_hex + '\n';
    return text;
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    errno = 0;
    out = std::strtoull(s.c_str(), &end, 10);
    return errno == 0 && end && *end == '\0';
}

bool parse_hex32(const std::string& s, std::uint32_t& out) {
    if (s.size() != 8) return false;
    char* end = nullptr;
    out = static_cast<std::uint32_t>(std::strtoul(s.c_str(), &end, 16));
    return end && *end == '\0';
}

bool parse_shape(const std::string& s, std::vector<std::size_t>& out) {
    out.clear();
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t next = s.find('x', pos);
        const std::string part =
            s.substr(pos, next == std::string::npos ? next : next - pos);
        std::uint64_t v = 0;
        if (!parse_u64(part, v) || v == 0) return false;
        out.push_back(static_cast<std::size_t>(v));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return !out.empty();
}

// key=value tokens after the `blob ` prefix. Values contain no spaces.
bool parse_blob_line(const std::string& line, BlobInfo& blob,
                     std::string& error) {
    std::size_t pos = 5;  // past "blob "
    bool have_scale = false, have_zero_point = false;
    bool have_name = false, have_dtype = false, have_shape = false;
    bool have_offset = false, have_length = false;
    while (pos < line.size()) {
        std::size_t space = line.find(' ', pos);
        const std::string token =
            line.substr(pos, space == std::string::npos ? space : space - pos);
        pos = space == std::string::npos ? line.size() : space + 1;
        const std::size_t eq = token.find('=');
        if (eq == std::string::npos) {
            error = "blob token without `=`: " + token;
            return false;
        }
        const std::string key = token.substr(0, eq);
        const std::string value = token.substr(eq + 1);
        std::uint64_t u = 0;
        if (key == "name") {
            blob.name = value;
            have_name = !value.empty();
        } else if (key == "dtype") {
            if (value == "real32") {
                blob.dtype = BlobDtype::kReal32;
            } else if (value == "quant8") {
                blob.dtype = BlobDtype::kQuant8;
            } else {
                error = "unknown dtype: " + value;
                return false;
            }
            have_dtype = true;
        } else if (key == "shape") {
            if (!parse_shape(value, blob.shape)) {
                error = "bad shape: " + value;
                return false;
            }
            have_shape = true;
        } else if (key == "offset") {
            if (!parse_u64(value, u)) {
                error = "bad offset: " + value;
                return false;
            }
            blob.offset = u;
            have_offset = true;
        } else if (key == "length") {
            if (!parse_u64(value, u)) {
                error = "bad length: " + value;
                return false;
            }
            blob.length = u;
            have_length = true;
        } else if (key == "scale") {
            char* end = nullptr;
            blob.scale = static_cast<float>(std::strtod(value.c_str(), &end));
            if (!end || *end != '\0') {
                error = "bad scale: " + value;
                return false;
            }
            have_scale = true;
        } else if (key == "zero_point") {
            if (!parse_u64(value, u) || u > 255) {
                error = "bad zero_point: " + value;
                return false;
            }
            blob.zero_point = static_cast<int>(u);
            have_zero_point = true;
        } else {
            error = "unknown blob key: " + key;
            return false;
        }
    }
    if (!have_name || !have_dtype || !have_shape || !have_offset ||
        !have_length) {
        error = "blob line missing a required field";
        return false;
    }
    if (blob.dtype == BlobDtype::kQuant8 && (!have_scale || !have_zero_point)) {
        error = "quant8 blob missing scale/zero_point";
        return false;
    }
    if (blob.dtype == BlobDtype::kReal32 && (have_scale || have_zero_point)) {
        error = "real32 blob carries quantization fields";
        return false;
    }
    const std::size_t expect =
        shape_product(blob.shape) * dtype_bytes_per_element(blob.dtype);
    if (blob.length != expect) {
        error = "blob " + blob.name + " length " + std::to_string(blob.length) +
                " does not match shape (" + std::to_string(expect) + ")";
        return false;
    }
    return true;
}

// Strict line parser for the canonical manifest text. The text must end
// with the manifest_crc32 line; its checksum is verified by the caller.
bool parse_manifest_text(const std::string& text, ContainerManifest& m,
                         std::string& error) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) {
            error = "manifest does not end with a newline";
            return false;
        }
        lines.push_back(text.substr(pos, eol - pos));
        pos = eol + 1;
    }
    if (lines.size() < 7) {
        error = "manifest too short";
        return false;
    }

    std::size_t i = 0;
    auto expect_prefix = [&](const char* prefix) -> const char* {
        const std::size_t n = std::strlen(prefix);
        if (i >= lines.size() || lines[i].compare(0, n, prefix) != 0) {
            return nullptr;
        }
        return lines[i].c_str() + n;
    };

    const char* v = expect_prefix("format_version=");
    std::uint64_t u = 0;
    if (!v || !parse_u64(v, u)) {
        error = "missing format_version line";
        return false;
    }
    m.version = static_cast<std::uint32_t>(u);
    ++i;

    v = expect_prefix("normalization=");
    if (!v) {
        error = "missing normalization line";
        return false;
    }
    try {
        m.normalization = parse_normalization(v);
    } catch (const Error& e) {
        error = e.what();
        return false;
    }
    ++i;

    v = expect_prefix("labels=");
    if (!v) {
        error = "missing labels line";
        return false;
    }
    m.label_names.clear();
    {
        std::string value(v);
        std::size_t p = 0;
        while (p <= value.size()) {
            std::size_t comma = value.find(',', p);
            const std::string name = value.substr(
                p, comma == std::string::npos ? comma : comma - p);
            if (name.empty()) {
                error = "empty label name";
                return false;
            }
            m.label_names.push_back(name);
            if (comma == std::string::npos) break;
            p = comma + 1;
        }
    }
    ++i;

    if (i >= lines.size() || lines[i] != "backbone_begin") {
        error = "missing backbone_begin";
        return false;
    }
    ++i;
    m.backbone_text.clear();
    while (i < lines.size() && lines[i] != "backbone_end") {
        m.backbone_text += lines[i];
        m.backbone_text += '\n';
        ++i;
    }
    if (i >= lines.size()) {
        error = "missing backbone_end";
        return false;
    }
    ++i;

    m.blobs.clear();
    while (i < lines.size() && lines[i].rfind("blob ", 0) == 0) {
        BlobInfo blob;
        if (!parse_blob_line(lines[i], blob, error)) return false;
        m.blobs.push_back(std::move(blob));
        ++i;
    }

    v = expect_prefix("payload_crc32=");
    if (!v || !parse_hex32(v, m.payload_crc32)) {
        error = "missing payload_crc32 line";
        return false;
    }
    ++i;

    std::uint32_t manifest_crc = 0;
    v = expect_prefix("manifest_crc32=");
    if (!v || !parse_hex32(v, manifest_crc)) {
        error = "missing manifest_crc32 line";
        return false;
    }
    ++i;
    if (i != lines.size()) {
        error = "unexpected content after manifest_crc32";
        return false;
    }

    // The backbone text must itself parse.
    try {
        parse_backbone(m.backbone_text);
    } catch (const Error& e) {
        error = std::string("backbone text: ") + e.what();
        return false;
    }
    return true;
}

}  // namespace

const BlobInfo* ContainerManifest::find_blob(const std::string& name) const {
    for (const BlobInfo& blob : blobs) {
        if (blob.name == name) return &blob;
    }
    return nullptr;
}

const std::vector<std::string>& ModelArtifacts::label_names() const {
    if (const auto* h = std::get_if<SoftmaxHead>(&head)) {
        return h->label_names;
    }
    return std::get<QuantizedHead>(head).label_names;
}

namespace {

struct BlobSource {
    BlobInfo info;
    const void* bytes = nullptr;  // info.length bytes
};

void append_layer_blobs(const ModelArtifacts& artifacts,
                        std::vector<BlobSource>& blobs) {
    for (const auto& [index, lw] : artifacts.weights.layers) {
        BlobSource kernel;
        kernel.info.name = "layer" + std::to_string(index) + ".kernel";
        kernel.info.dtype = BlobDtype::kReal32;
        kernel.info.shape = lw.kernel.shape();
        kernel.info.length = lw.kernel.size() * sizeof(float);
        kernel.bytes = lw.kernel.data();
        blobs.push_back(std::move(kernel));
        if (!lw.bias.empty()) {
            BlobSource bias;
            bias.info.name = "layer" + std::to_string(index) + ".bias";
            bias.info.dtype = BlobDtype::kReal32;
            bias.info.shape = lw.bias.shape();
            bias.info.length = lw.bias.size() * sizeof(float);
            bias.bytes = lw.bias.data();
            blobs.push_back(std::move(bias));
        }
    }
}

void validate_artifacts(const ModelArtifacts& artifacts) {
    const int dim = bottleneck_dim(artifacts.spec);
    validate_weights(artifacts.spec, artifacts.weights);
    const std::size_t n_labels = artifacts.label_names().size();
    if (n_labels == 0) throw Error("model has no label names");

    if (const auto* h = std::get_if<SoftmaxHead>(&artifacts.head)) {
        if (h->dim != std::size_t(dim)) {
            throw ShapeError("head dim " + std::to_string(h->dim) +
                             " does not match backbone bottleneck " +
                             std::to_string(dim));
        }
        if (h->n_classes != n_labels ||
            h->weights.size() != std::size_t(h->dim) * h->n_classes ||
            h->biases.size() != h->n_classes) {
            throw ShapeError("head tensor sizes are inconsistent");
        }
    } else {
        const auto& q = std::get<QuantizedHead>(artifacts.head);
        if (q.weights.shape.size() != 2 ||
            q.weights.shape[0] != std::size_t(dim) ||
            q.weights.shape[1] != n_labels ||
            q.biases.shape.size() != 1 || q.biases.shape[0] != n_labels) {
            throw ShapeError("quantized head shapes are inconsistent");
        }
    }
}

}  // namespace

std::uint64_t write_container(const ModelArtifacts& artifacts,
                              const std::filesystem::path& path) {
    validate_artifacts(artifacts);

    std::vector<BlobSource> blobs;
    append_layer_blobs(artifacts, blobs);
    if (const auto* h = std::get_if<SoftmaxHead>(&artifacts.head)) {
        BlobSource w;
        w.info.name = "head.weights";
        w.info.dtype = BlobDtype::kReal32;
        w.info.shape = {h->dim, h->n_classes};
        w.info.length = h->weights.size() * sizeof(float);
        w.bytes = h->weights.data();
        blobs.push_back(std::move(w));
        BlobSource b;
        b.info.name = "head.biases";
        b.info.dtype = BlobDtype::kReal32;
        b.info.shape = {h->n_classes};
        b.info.length = h->biases.size() * sizeof(float);
        b.bytes = h->biases.data();
        blobs.push_back(std::move(b));
    } else {
        const auto& q = std::get<QuantizedHead>(artifacts.head);
        BlobSource w;
        w.info.name = "head.weights";
        w.info.dtype = BlobDtype::kQuant8;
        w.info.shape = q.weights.shape;
        w.info.length = q.weights.codes.size();
        w.info.scale = q.weights.scale;
        w.info.zero_point = q.weights.zero_point;
        w.bytes = q.weights.codes.data();
        blobs.push_back(std::move(w));
        BlobSource b;
        b.info.name = "head.biases";
        b.info.dtype = BlobDtype::kQuant8;
        b.info.shape = q.biases.shape;
        b.info.length = q.biases.codes.size();
        b.info.scale = q.biases.scale;
        b.info.zero_point = q.biases.zero_point;
        b.bytes = q.biases.codes.data();
        blobs.push_back(std::move(b));
    }

    ContainerManifest manifest;
    manifest.version = kContainerVersion;
    manifest.normalization = artifacts.normalization;
    manifest.label_names = artifacts.label_names();
    manifest.backbone_text = format_backbone(artifacts.spec);

    // Offsets depend on the manifest length, which depends on the rendered
    // offsets; iterate until the layout settles (digit-width changes make
    // this take at most a few rounds).
    const std::string placeholder = "00000000";
    std::string text;
    for (int round = 0; round < 8; ++round) {
        manifest.blobs.clear();
        for (const BlobSource& blob : blobs) manifest.blobs.push_back(blob.info);
        text = render_manifest(manifest, placeholder, placeholder);
        std::size_t cursor = align_up(kHeaderBytes + text.size(), kBlobAlignment);
        bool changed = false;
        for (BlobSource& blob : blobs) {
            if (blob.info.offset != cursor) {
                blob.info.offset = cursor;
                changed = true;
            }
            cursor = align_up(cursor + blob.info.length, kBlobAlignment);
        }
        if (!changed) break;
    }

    const std::size_t manifest_end = kHeaderBytes + text.size();
    std::size_t payload_end = align_up(manifest_end, kBlobAlignment);
    for (const BlobSource& blob : blobs) {
        payload_end = align_up(blob.info.offset + blob.info.length,
                               kBlobAlignment);
    }

    std::vector<std::byte> file(payload_end + 4, std::byte{0});
    std::memcpy(file.data(), kContainerMagic, sizeof(kContainerMagic));
    const std::uint32_t version = kContainerVersion;
    std::memcpy(file.data() + 8, &version, sizeof(version));
    const std::uint64_t manifest_len = text.size();
    std::memcpy(file.data() + 12, &manifest_len, sizeof(manifest_len));
    for (const BlobSource& blob : blobs) {
        std::memcpy(file.data() + blob.info.offset, blob.bytes,
                    blob.info.length);
    }

    const std::uint32_t payload_crc = crc32_of(
        {file.data() + manifest_end, payload_end - manifest_end});
    manifest.payload_crc32 = payload_crc;
    manifest.blobs.clear();
    for (const BlobSource& blob : blobs) manifest.blobs.push_back(blob.info);

    text = render_manifest(manifest, hex32(payload_crc), placeholder);
    const std::uint32_t manifest_crc = crc32_of(
        {reinterpret_cast<const std::byte*>(text.data()),
         text.size() - kManifestCrcLineBytes});
    text = render_manifest(manifest, hex32(payload_crc), hex32(manifest_crc));
    if (text.size() != manifest_len) {
        throw Error("internal: manifest length drifted during rendering");
    }
    std::memcpy(file.data() + kHeaderBytes, text.data(), text.size());
    std::memcpy(file.data() + payload_end, &payload_crc, sizeof(payload_crc));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(file.data()),
              static_cast<std::streamsize>(file.size()));
    if (!out) throw IoError("write failed: " + path.string());
    return file.size();
}

ValidationReport validate_container_bytes(std::span<const std::byte> bytes) {
    ValidationReport report;
    report.file_bytes = bytes.size();
    auto add = [&](const char* name, CheckKind kind, bool ok,
                   std::string detail = {}) {
        report.checks.push_back({name, kind, ok, std::move(detail)});
        return ok;
    };

    if (bytes.size() < kHeaderBytes + 4) {
        add("magic", CheckKind::kBounds, false,
            "file too small for a container header");
        return report;
    }
    report.header_bytes = kHeaderBytes;

    if (!add("magic", CheckKind::kFormat,
             std::memcmp(bytes.data(), kContainerMagic,
                         sizeof(kContainerMagic)) == 0,
             "first 8 bytes must be SLRMODL1")) {
        return report;
    }

    std::uint32_t version = 0;
    std::memcpy(&version, bytes.data() + 8, sizeof(version));
    if (!add("version", CheckKind::kFormat, version == kContainerVersion,
             "container version " + std::to_string(version))) {
        return report;
    }

    std::uint64_t manifest_len = 0;
    std::memcpy(&manifest_len, bytes.data() + 12, sizeof(manifest_len));
    const std::uint64_t manifest_end = kHeaderBytes + manifest_len;
    if (!add("manifest-bounds", CheckKind::kBounds,
             manifest_len >= kManifestCrcLineBytes &&
                 manifest_end + 4 <= bytes.size(),
             "manifest length " + std::to_string(manifest_len))) {
        return report;
    }
    report.manifest_bytes = manifest_len;

    const std::string text(
        reinterpret_cast<const char*>(bytes.data() + kHeaderBytes),
        manifest_len);
    bool crc_line_ok = text.size() >= kManifestCrcLineBytes &&
                       text.back() == '\n' &&
                       text.compare(text.size() - kManifestCrcLineBytes, 15,
                                    "manifest_crc32=") == 0;
    std::uint32_t stored_manifest_crc = 0;
    if (crc_line_ok) {
        crc_line_ok = parse_hex32(
            text.substr(text.size() - 9, 8), stored_manifest_crc);
    }
    const std::uint32_t computed_manifest_crc =
        crc_line_ok ? crc32_of({bytes.data() + kHeaderBytes,
                                manifest_len - kManifestCrcLineBytes})
                    : 0;
    if (!add("manifest-crc", CheckKind::kFormat,
             crc_line_ok && stored_manifest_crc == computed_manifest_crc,
             crc_line_ok ? "stored " + hex32(stored_manifest_crc) +
                               ", computed " + hex32(computed_manifest_crc)
                         : "manifest_crc32 line malformed")) {
        return report;
    }

    ContainerManifest manifest;
    std::string parse_error;
    if (!add("manifest-parse", CheckKind::kFormat,
             parse_manifest_text(text, manifest, parse_error), parse_error)) {
        return report;
    }
    report.manifest = manifest;

    bool aligned = true;
    std::string align_detail;
    for (const BlobInfo& blob : manifest.blobs) {
        if (blob.offset % kBlobAlignment != 0) {
            aligned = false;
            align_detail = "blob " + blob.name + " at offset " +
                           std::to_string(blob.offset);
            break;
        }
    }
    add("blob-alignment", CheckKind::kFormat, aligned, align_detail);

    bool bounds_ok = true;
    std::string bounds_detail;
    std::uint64_t cursor = align_up(manifest_end, kBlobAlignment);
    std::uint64_t payload_end = cursor;
    for (const BlobInfo& blob : manifest.blobs) {
        if (blob.offset < cursor ||
            blob.offset + blob.length > bytes.size() - 4) {
            bounds_ok = false;
            bounds_detail = "blob " + blob.name + " region [" +
                            std::to_string(blob.offset) + ", " +
                            std::to_string(blob.offset + blob.length) +
                            ") escapes the payload area";
            break;
        }
        cursor = align_up(blob.offset + blob.length, kBlobAlignment);
        payload_end = cursor;
    }
    add("blob-bounds", CheckKind::kBounds, bounds_ok, bounds_detail);
    if (!bounds_ok || !aligned) return report;
    report.payload_bytes = payload_end - manifest_end;
    report.trailer_bytes = 4;

    if (!add("file-size", CheckKind::kBounds,
             bytes.size() == payload_end + 4,
             "expected " + std::to_string(payload_end + 4) + " bytes, file has " +
                 std::to_string(bytes.size()))) {
        return report;
    }

    const std::uint32_t payload_crc =
        crc32_of({bytes.data() + manifest_end, payload_end - manifest_end});
    add("payload-crc", CheckKind::kCorruption,
        payload_crc == manifest.payload_crc32,
        "stored " + hex32(manifest.payload_crc32) + ", computed " +
            hex32(payload_crc));

    std::uint32_t trailer = 0;
    std::memcpy(&trailer, bytes.data() + payload_end, sizeof(trailer));
    add("trailer-crc", CheckKind::kCorruption, trailer == payload_crc,
        "stored " + hex32(trailer) + ", computed " + hex32(payload_crc));
    return report;
}

// Number of checks a clean validation emits; ok() requires the pipeline to
// have reached the end, not just every emitted check to have passed.
static constexpr std::size_t kTotalChecks = 10;

ValidationReport validate_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    in.seekg(0, std::ios::end);
    const std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<std::byte> bytes(static_cast<std::size_t>(size));
    in.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!in) throw IoError("read failed: " + path.string());
    return validate_container_bytes(bytes);
}

bool ValidationReport::ok() const {
    for (const Check& c : checks) {
        if (!c.ok) return false;
    }
    return checks.size() == kTotalChecks && manifest.has_value();
}

const Check* ValidationReport::first_failure() const {
    for (const Check& c : checks) {
        if (!c.ok) return &c;
    }
    return nullptr;
}

std::string ValidationReport::render_text() const {
    std::string out;
    for (const Check& c : checks) {
        out += c.ok ? "ok   " : "FAIL ";
        out += c.name;
        if (!c.detail.empty()) {
            out += " (" + c.detail + ")";
        }
        out += '\n';
    }
    out += "bytes: header=" + std::to_string(header_bytes) +
           " manifest=" + std::to_string(manifest_bytes) +
           " payload=" + std::to_string(payload_bytes) +
           " trailer=" + std::to_string(trailer_bytes) +
           " file=" + std::to_string(file_bytes) + '\n';
    if (manifest) {
        out += "blobs: " + std::to_string(manifest->blobs.size()) + '\n';
        for (const BlobInfo& blob : manifest->blobs) {
            out += "  " + blob.name + " " +
                   (blob.dtype == BlobDtype::kReal32 ? "real32 " : "quant8 ") +
                   shape_to_string(blob.shape) + " @" +
                   std::to_string(blob.offset) + " +" +
                   std::to_string(blob.length) + '\n';
        }
    }
    return out;
}

// --- mapped model -----------------------------------------------------------

MappedModel::MappedModel(MappedModel&& other) noexcept
    : base_(other.base_), size_(other.size_),
      manifest_(std::move(other.manifest_)),
      blob_bytes_copied_(other.blob_bytes_copied_),
      manifest_bytes_copied_(other.manifest_bytes_copied_) {
    other.base_ = nullptr;
    other.size_ = 0;
}

MappedModel& MappedModel::operator=(MappedModel&& other) noexcept {
    if (this != &other) {
        if (base_) {
            ::munmap(const_cast<std::byte*>(base_), size_);
        }
        base_ = other.base_;
        size_ = other.size_;
        manifest_ = std::move(other.manifest_);
        blob_bytes_copied_ = other.blob_bytes_copied_;
        manifest_bytes_copied_ = other.manifest_bytes_copied_;
        other.base_ = nullptr;
        other.size_ = 0;
    }
    return *this;
}

MappedModel::~MappedModel() {
    if (base_) {
        ::munmap(const_cast<std::byte*>(base_), size_);
    }
}

std::span<const std::byte> MappedModel::blob_bytes(const BlobInfo& blob) const {
    return {base_ + blob.offset, blob.length};
}

std::span<const std::byte> MappedModel::blob_bytes(
    const std::string& name) const {
    const BlobInfo* blob = manifest_.find_blob(name);
    if (!blob) throw FormatError("no blob named " + name);
    return blob_bytes(*blob);
}

std::span<const float> MappedModel::real32_values(
    const std::string& name) const {
    const BlobInfo* blob = manifest_.find_blob(name);
    if (!blob) throw FormatError("no blob named " + name);
    if (blob->dtype != BlobDtype::kReal32) {
        throw FormatError("blob " + name + " is not real32");
    }
    return {reinterpret_cast<const float*>(base_ + blob->offset),
            blob->length / sizeof(float)};
}

std::span<const std::uint8_t> MappedModel::quant8_codes(
    const std::string& name) const {
    const BlobInfo* blob = manifest_.find_blob(name);
    if (!blob) throw FormatError("no blob named " + name);
    if (blob->dtype != BlobDtype::kQuant8) {
        throw FormatError("blob " + name + " is not quant8");
    }
    return {reinterpret_cast<const std::uint8_t*>(base_ + blob->offset),
            blob->length};
}

namespace {

struct MmapGuard {
    void* addr = MAP_FAILED;
    std::size_t size = 0;
    ~MmapGuard() {
        if (addr != MAP_FAILED) ::munmap(addr, size);
    }
    void release() { addr = MAP_FAILED; }
};

[[noreturn]] void throw_check(const Check& check) {
    const std::string message = check.name + ": " + check.detail;
    switch (check.kind) {
        case CheckKind::kBounds: throw BoundsError(message);
        case CheckKind::kCorruption: throw CorruptionError(message);
        case CheckKind::kFormat: break;
    }
    throw FormatError(message);
}

}  // namespace

MappedModel map_container(const std::filesystem::path& path) {
    const int fd = ::open(path.c_str(), O_RDONLY);
    if (fd < 0) throw IoError("cannot open: " + path.string());
    struct stat st{};
    if (::fstat(fd, &st) != 0) {
        ::close(fd);
        throw IoError("fstat failed: " + path.string());
    }
    const std::size_t size = static_cast<std::size_t>(st.st_size);
    if (size == 0) {
        ::close(fd);
        throw BoundsError("empty file: " + path.string());
    }

    MmapGuard guard;
    guard.addr = ::mmap(nullptr, size, PROT_READ, MAP_PRIVATE, fd, 0);
    guard.size = size;
    ::close(fd);
    if (guard.addr == MAP_FAILED) {
        throw IoError("mmap failed: " + path.string());
    }

    const std::span<const std::byte> bytes(
        static_cast<const std::byte*>(guard.addr), size);
    ValidationReport report = validate_container_bytes(bytes);
    if (!report.ok()) {
        const Check* failure = report.first_failure();
        if (failure) throw_check(*failure);
        throw FormatError("container validation failed");
    }

    MappedModel model;
    model.base_ = bytes.data();
    model.size_ = size;
    model.manifest_ = std::move(*report.manifest);
    model.blob_bytes_copied_ = 0;
    model.manifest_bytes_copied_ = report.manifest_bytes;
    guard.release();
    return model;
}

ModelArtifacts unpack(const MappedModel& model) {
    const ContainerManifest& manifest = model.manifest();
    ModelArtifacts artifacts;
    artifacts.spec = parse_backbone(manifest.backbone_text);
    artifacts.normalization = manifest.normalization;

    for (std::size_t i = 0; i < artifacts.spec.layers.size(); ++i) {
        const std::string kname = "layer" + std::to_string(i) + ".kernel";
        const BlobInfo* kernel = manifest.find_blob(kname);
        if (!kernel) continue;
        const auto kvals = model.real32_values(kname);
        LayerWeights lw;
        lw.kernel = Tensor(kernel->shape,
                           std::vector<float>(kvals.begin(), kvals.end()));
        const std::string bname = "layer" + std::to_string(i) + ".bias";
        if (const BlobInfo* bias = manifest.find_blob(bname)) {
            const auto bvals = model.real32_values(bname);
            lw.bias = Tensor(bias->shape,
                             std::vector<float>(bvals.begin(), bvals.end()));
        }
        artifacts.weights.layers.emplace(static_cast<int>(i), std::move(lw));
    }

    const BlobInfo* w = manifest.find_blob("head.weights");
    const BlobInfo* b = manifest.find_blob("head.biases");
    if (!w || !b) throw FormatError("container has no head blobs");
    if (w->dtype == BlobDtype::kReal32) {
        SoftmaxHead head;
        head.dim = static_cast<std::uint32_t>(w->shape[0]);
        head.n_classes = static_cast<std::uint32_t>(w->shape[1]);
        const auto wv = model.real32_values("head.weights");
        const auto bv = model.real32_values("head.biases");
        head.weights.assign(wv.begin(), wv.end());
        head.biases.assign(bv.begin(), bv.end());
        head.label_names = manifest.label_names;
        artifacts.head = std::move(head);
    } else {
        QuantizedHead head;
        const auto wc = model.quant8_codes("head.weights");
        const auto bc = model.quant8_codes("head.biases");
        head.weights = QuantizedTensor{
            w->shape, {wc.begin(), wc.end()}, w->scale, w->zero_point};
        head.biases = QuantizedTensor{
            b->shape, {bc.begin(), bc.end()}, b->scale, b->zero_point};
        head.label_names = manifest.label_names;
        artifacts.head = std::move(head);
    }
    return artifacts;
}

}  // namespace slr
