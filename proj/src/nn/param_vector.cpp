#include "fedsim/nn/param_vector.hpp"

#include <cstring>
#include <fstream>

#include "fedsim/errors.hpp"

namespace fedsim::nn {

std::size_t layout_size(const Layout& layout) {
    std::size_t n = 0;
    for (const auto& l : layout) {
        n += static_cast<std::size_t>(l.fan_in) * l.fan_out + l.fan_out;
    }
    return n;
}

ParamVector::ParamVector(Layout l) : layout(std::move(l)), values(layout_size(layout), 0.0) {}

std::size_t ParamVector::weight_offset(std::size_t layer) const {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layer; ++l) {
        off += static_cast<std::size_t>(layout[l].fan_in) * layout[l].fan_out + layout[l].fan_out;
    }
    return off;
}

void require_same_layout(const ParamVector& a, const ParamVector& b, const std::string& op) {
    if (!a.same_layout(b)) {
        throw LayoutError(op + ": parameter layouts differ");
    }
}

ParamVector add(const ParamVector& a, const ParamVector& b) {
    require_same_layout(a, b, "add");
    ParamVector out = a;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += b.values[i];
    return out;
}

ParamVector scale(const ParamVector& a, double factor) {
    ParamVector out = a;
    for (auto& v : out.values) v *= factor;
    return out;
}

void add_scaled_in_place(ParamVector& dst, const ParamVector& src, double factor) {
    require_same_layout(dst, src, "add_scaled_in_place");
    for (std::size_t i = 0; i < dst.values.size(); ++i) dst.values[i] += factor * src.values[i];
}

namespace {

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

std::uint32_t get_u32_le(const std::vector<std::uint8_t>& in, std::size_t& pos) {
    if (pos + 4 > in.size()) throw ParseError("param vector: truncated header");
    std::uint32_t v = static_cast<std::uint32_t>(in[pos]) |
                      static_cast<std::uint32_t>(in[pos + 1]) << 8 |
                      static_cast<std::uint32_t>(in[pos + 2]) << 16 |
                      static_cast<std::uint32_t>(in[pos + 3]) << 24;
    pos += 4;
    return v;
}

}  // namespace

std::vector<std::uint8_t> serialize(const ParamVector& params) {
    std::vector<std::uint8_t> out;
    out.reserve(4 + 8 * params.layout.size() + 8 * params.values.size());
    put_u32_le(out, static_cast<std::uint32_t>(params.layout.size()));
    for (const auto& l : params.layout) {
        put_u32_le(out, l.fan_in);
        put_u32_le(out, l.fan_out);
    }
    for (double v : params.values) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        for (int b = 0; b < 8; ++b) {
            out.push_back(static_cast<std::uint8_t>((bits >> (8 * b)) & 0xff));
        }
    }
    return out;
}

ParamVector deserialize(const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 0;
    std::uint32_t layers = get_u32_le(bytes, pos);
    Layout layout(layers);
    for (auto& l : layout) {
        l.fan_in = get_u32_le(bytes, pos);
        l.fan_out = get_u32_le(bytes, pos);
    }
    ParamVector out{std::move(layout)};
    if (pos + 8 * out.values.size() != bytes.size()) {
        throw ParseError("param vector: payload size does not match layout");
    }
    for (auto& v : out.values) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) {
            bits |= static_cast<std::uint64_t>(bytes[pos + b]) << (8 * b);
        }
        pos += 8;
        std::memcpy(&v, &bits, sizeof v);
    }
    return out;
}

void save_params(const ParamVector& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot open for writing: " + path);
    auto bytes = serialize(params);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ParseError("write failed: " + path);
}

ParamVector load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

}  // namespace fedsim::nn
