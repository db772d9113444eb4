#include "fedsim/data/idx.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "fedsim/errors.hpp"

namespace fedsim::data {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open: " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t get_u32_be(const std::vector<std::uint8_t>& b, std::size_t pos,
                         const std::string& path) {
    if (pos + 4 > b.size()) throw ParseError("truncated header in " + path);
    return static_cast<std::uint32_t>(b[pos]) << 24 | static_cast<std::uint32_t>(b[pos + 1]) << 16 |
           static_cast<std::uint32_t>(b[pos + 2]) << 8 | static_cast<std::uint32_t>(b[pos + 3]);
}

void put_u32_be(std::ofstream& out, std::uint32_t v) {
    char b[4] = {static_cast<char>((v >> 24) & 0xff), static_cast<char>((v >> 16) & 0xff),
                 static_cast<char>((v >> 8) & 0xff), static_cast<char>(v & 0xff)};
    out.write(b, 4);
}

void put_u32_le(std::ofstream& out, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

std::uint32_t get_u32_le(const std::vector<std::uint8_t>& b, std::size_t& pos,
                         const std::string& path) {
    if (pos + 4 > b.size()) throw ParseError("truncated header in " + path);
    std::uint32_t v = static_cast<std::uint32_t>(b[pos]) | static_cast<std::uint32_t>(b[pos + 1]) << 8 |
                      static_cast<std::uint32_t>(b[pos + 2]) << 16 |
                      static_cast<std::uint32_t>(b[pos + 3]) << 24;
    pos += 4;
    return v;
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    auto img = read_file(images_path);
    if (get_u32_be(img, 0, images_path) != kImagesMagic) {
        throw ParseError("bad magic in " + images_path);
    }
    std::size_t count = get_u32_be(img, 4, images_path);
    std::size_t rows = get_u32_be(img, 8, images_path);
    std::size_t cols = get_u32_be(img, 12, images_path);
    std::size_t dim = rows * cols;
    if (img.size() != 16 + count * dim) {
        throw ParseError("truncated image payload in " + images_path);
    }

    auto lab = read_file(labels_path);
    if (get_u32_be(lab, 0, labels_path) != kLabelsMagic) {
        throw ParseError("bad magic in " + labels_path);
    }
    std::size_t label_count = get_u32_be(lab, 4, labels_path);
    if (lab.size() != 8 + label_count) {
        throw ParseError("truncated label payload in " + labels_path);
    }
    if (label_count != count) {
        throw ParseError("image/label count mismatch: " + images_path + " has " +
                         std::to_string(count) + ", " + labels_path + " has " +
                         std::to_string(label_count));
    }

    Dataset out;
    out.num_samples = count;
    out.feature_dim = dim;
    out.features.resize(count * dim);
    out.labels.resize(count);
    for (std::size_t i = 0; i < count * dim; ++i) {
        out.features[i] = static_cast<double>(img[16 + i]) / 255.0;
    }
    int max_label = 0;
    for (std::size_t i = 0; i < count; ++i) {
        out.labels[i] = static_cast<int>(lab[8 + i]);
        max_label = std::max(max_label, out.labels[i]);
    }
    out.num_classes = static_cast<std::size_t>(max_label) + 1;
    return out;
}

void write_idx(const Dataset& dataset, const std::string& images_path,
               const std::string& labels_path) {
    {
        std::ofstream out(images_path, std::ios::binary | std::ios::trunc);
        if (!out) throw ParseError("cannot open for writing: " + images_path);
        put_u32_be(out, kImagesMagic);
        put_u32_be(out, static_cast<std::uint32_t>(dataset.num_samples));
        put_u32_be(out, static_cast<std::uint32_t>(dataset.feature_dim));
        put_u32_be(out, 1);
        for (double v : dataset.features) {
            auto byte = static_cast<std::uint8_t>(
                std::clamp<long long>(std::llround(v * 255.0), 0, 255));
            out.put(static_cast<char>(byte));
        }
        if (!out) throw ParseError("write failed: " + images_path);
    }
    {
        std::ofstream out(labels_path, std::ios::binary | std::ios::trunc);
        if (!out) throw ParseError("cannot open for writing: " + labels_path);
        put_u32_be(out, kLabelsMagic);
        put_u32_be(out, static_cast<std::uint32_t>(dataset.num_samples));
        for (int l : dataset.labels) out.put(static_cast<char>(static_cast<std::uint8_t>(l)));
        if (!out) throw ParseError("write failed: " + labels_path);
    }
}

void save_dataset_cache(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot open for writing: " + path);
    out.write("FSDC", 4);
    put_u32_le(out, 1);  // version
    put_u32_le(out, static_cast<std::uint32_t>(dataset.num_samples));
    put_u32_le(out, static_cast<std::uint32_t>(dataset.feature_dim));
    put_u32_le(out, static_cast<std::uint32_t>(dataset.num_classes));
    for (int l : dataset.labels) put_u32_le(out, static_cast<std::uint32_t>(l));
    for (double v : dataset.features) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
        out.write(b, 8);
    }
    if (!out) throw ParseError("write failed: " + path);
}

Dataset load_dataset_cache(const std::string& path) {
    auto bytes = read_file(path);
    if (bytes.size() < 20 || std::memcmp(bytes.data(), "FSDC", 4) != 0) {
        throw ParseError("bad magic in " + path);
    }
    std::size_t pos = 4;
    std::uint32_t version = get_u32_le(bytes, pos, path);
    if (version != 1) throw ParseError("unsupported cache version in " + path);
    Dataset out;
    out.num_samples = get_u32_le(bytes, pos, path);
    out.feature_dim = get_u32_le(bytes, pos, path);
    out.num_classes = get_u32_le(bytes, pos, path);
    if (bytes.size() != pos + 4 * out.num_samples + 8 * out.num_samples * out.feature_dim) {
        throw ParseError("truncated payload in " + path);
    }
    out.labels.resize(out.num_samples);
    for (auto& l : out.labels) l = static_cast<int>(get_u32_le(bytes, pos, path));
    out.features.resize(out.num_samples * out.feature_dim);
    for (auto& v : out.features) {
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
        pos += 8;
        std::memcpy(&v, &bits, sizeof v);
    }
    return out;
}

}  // namespace fedsim::data
