#include "slr/dataset.hpp"

#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include "slr/error.hpp"
#include "slr/image_png.hpp"
#include "slr/rng.hpp"

namespace slr {

Normalization parse_normalization(const std::string& name) {
    if (name == "unit") return Normalization::kUnit;
    if (name == "signed") return Normalization::kSigned;
    throw Error("unknown normalization scheme: " + name);
}

std::string normalization_name(Normalization n) {
    return n == Normalization::kUnit ? "unit" : "signed";
}

std::vector<std::string> asl_label_names() {
    std::vector<std::string> names;
    names.reserve(kNumClasses);
    for (char c = 'A'; c <= 'Y'; ++c) {
        if (c == 'J') continue;
        names.emplace_back(1, c);
    }
    return names;
}

std::string label_to_letter(int raw_label) {
    if (raw_label < 0 || raw_label > 24 || raw_label == 9) {
        throw LabelError("invalid raw label " + std::to_string(raw_label) +
                         ": must be an alphabet position 0..24 other than 9 (J)");
    }
    return std::string(1, static_cast<char>('A' + raw_label));
}

int raw_label_to_class(int raw_label) {
    if (raw_label < 0 || raw_label > 24 || raw_label == 9) {
        throw LabelError("invalid raw label " + std::to_string(raw_label) +
                         ": must be an alphabet position 0..24 other than 9 (J)");
    }
    return raw_label < 9 ? raw_label : raw_label - 1;
}

int class_to_raw_label(int class_index) {
    if (class_index < 0 || class_index >= kNumClasses) {
        throw LabelError("class index out of range: " +
                         std::to_string(class_index));
    }
    return class_index < 9 ? class_index : class_index + 1;
}

namespace {

std::string read_whole_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

// One CSV line -> 785 integers. Returns false (with a reason) on any
// formatting problem so the caller can name the row.
bool parse_row(std::string_view line, std::array<int, 1 + kImagePixels>& out,
               std::string& reason) {
    const char* p = line.data();
    const char* end = p + line.size();
    for (std::size_t field = 0; field < out.size(); ++field) {
        if (field > 0) {
            if (p == end || *p != ',') {
                reason = "expected 785 comma-separated fields, got " +
                         std::to_string(field);
                return false;
            }
            ++p;
        }
        auto [next, ec] = std::from_chars(p, end, out[field]);
        if (ec != std::errc{} || next == p) {
            reason = "field " + std::to_string(field + 1) +
                     " is not an integer";
            return false;
        }
        p = next;
    }
    if (p != end) {
        reason = "trailing characters after 785 fields";
        return false;
    }
    return true;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path) {
    const std::string text = read_whole_file(path);

    Dataset ds;
    ds.label_names = asl_label_names();

    std::size_t pos = 0;
    std::size_t data_row = 0;
    bool header_seen = false;
    std::array<int, 1 + kImagePixels> fields{};
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line(text.data() + pos,
                              (eol == std::string::npos ? text.size() : eol) - pos);
        pos = eol == std::string::npos ? text.size() : eol + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        if (!header_seen) {
            if (line.substr(0, 5) != "label") {
                throw ParseError("missing header row (expected "
                                 "`label,pixel1,...,pixel784`) in " +
                                 path.string());
            }
            header_seen = true;
            continue;
        }

        ++data_row;
        std::string reason;
        if (!parse_row(line, fields, reason)) {
            throw ParseError("row " + std::to_string(data_row) + ": " + reason);
        }

        LabeledImage img;
        img.label = static_cast<std::uint8_t>(raw_label_to_class(fields[0]));
        for (int i = 0; i < kImagePixels; ++i) {
            int v = fields[1 + i];
            if (v < 0 || v > 255) {
                throw ParseError("row " + std::to_string(data_row) + ": pixel " +
                                 std::to_string(i + 1) + " value " +
                                 std::to_string(v) + " outside [0, 255]");
            }
            img.pixels[i] = static_cast<std::uint8_t>(v);
        }
        ds.images.push_back(img);
    }
    if (!header_seen) {
        throw ParseError("empty file (no header row): " + path.string());
    }
    return ds;
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());

    std::string line = "label";
    for (int i = 1; i <= kImagePixels; ++i) {
        line += ",pixel" + std::to_string(i);
    }
    line += '\n';
    out << line;

    for (const LabeledImage& img : ds.images) {
        line.clear();
        line += std::to_string(class_to_raw_label(img.label));
        for (int i = 0; i < kImagePixels; ++i) {
            line += ',';
            line += std::to_string(img.pixels[i]);
        }
        line += '\n';
        out << line;
    }
    if (!out) throw IoError("write failed: " + path.string());
}

SplitManifest split(const Dataset& ds, std::uint64_t seed) {
    const std::size_t n = ds.size();
    if (n == 0) throw Error("cannot split an empty dataset");

    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    SplitMix64 rng(seed);
    fisher_yates(std::span<std::uint32_t>(order), rng);

    const std::size_t n_test = n / 10;
    const std::size_t n_val = n / 10;
    const std::size_t n_train = n - n_test - n_val;

    SplitManifest m;
    m.seed = seed;
    m.train_ids.assign(order.begin(), order.begin() + n_train);
    m.val_ids.assign(order.begin() + n_train, order.begin() + n_train + n_val);
    m.test_ids.assign(order.begin() + n_train + n_val, order.end());
    return m;
}

void save_split(const SplitManifest& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "seed=" << m.seed << '\n';
    auto section = [&](const char* name, const std::vector<std::uint32_t>& ids) {
        out << name << ":\n";
        for (std::uint32_t id : ids) out << id << '\n';
    };
    section("train", m.train_ids);
    section("val", m.val_ids);
    section("test", m.test_ids);
    if (!out) throw IoError("write failed: " + path.string());
}

SplitManifest load_split(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());

    SplitManifest m;
    std::string line;
    if (!std::getline(in, line) || line.rfind("seed=", 0) != 0) {
        throw ParseError("split manifest must start with `seed=<u64>`: " +
                         path.string());
    }
    try {
        m.seed = std::stoull(line.substr(5));

        std::vector<std::uint32_t>* current = nullptr;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            if (line == "train:") {
                current = &m.train_ids;
            } else if (line == "val:") {
                current = &m.val_ids;
            } else if (line == "test:") {
                current = &m.test_ids;
            } else {
                if (!current) {
                    throw ParseError("index before any section in " +
                                     path.string());
                }
                current->push_back(
                    static_cast<std::uint32_t>(std::stoul(line)));
            }
        }
    } catch (const std::logic_error&) {
        throw ParseError("malformed split manifest: " + path.string());
    }
    return m;
}

Tensor to_tensor(const LabeledImage& image, Normalization scheme) {
    // One rounding per value: the double expression is exact enough that the
    // cast to float is the only error, keeping the inverse map within 1e-5.
    std::vector<float> data(kImagePixels);
    if (scheme == Normalization::kUnit) {
        for (int i = 0; i < kImagePixels; ++i) {
            data[i] = static_cast<float>(image.pixels[i] / 255.0);
        }
    } else {
        for (int i = 0; i < kImagePixels; ++i) {
            data[i] = static_cast<float>(image.pixels[i] / 127.5 - 1.0);
        }
    }
    return Tensor({kImageSide, kImageSide, 1}, std::move(data));
}

std::size_t export_png(const Dataset& ds,
                       const std::filesystem::path& directory) {
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec) throw IoError("cannot create directory: " + directory.string());

    std::size_t written = 0;
    for (std::size_t i = 0; i < ds.images.size(); ++i) {
        const LabeledImage& img = ds.images[i];
        const std::string& letter = ds.label_names[img.label];
        auto file = directory / (std::to_string(i) + "_" + letter + ".png");
        write_gray_png(file, img.pixels.data(), kImageSide, kImageSide);
        ++written;
    }
    return written;
}

}  // namespace slr
