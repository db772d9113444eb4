#pragma once

#include <cstdint>
#include <cstddef>
#include <string>
#include <vector>

namespace fedsim::nn {

// One dense layer's dimensions. A layer owns fan_in*fan_out weights
// followed by fan_out biases in the flat vector.
struct LayerDims {
    std::uint32_t fan_in = 0;
    std::uint32_t fan_out = 0;

    bool operator==(const LayerDims&) const = default;
};

using Layout = std::vector<LayerDims>;

std::size_t layout_size(const Layout& layout);

// Flat, ordered vector of all trainable parameters. Gradients share the
// representation (identical layout to the parameters they were computed
// against), so GradVector is an alias.
struct ParamVector {
    Layout layout;
    std::vector<double> values;

    ParamVector() = default;
    explicit ParamVector(Layout l);

    std::size_t size() const { return values.size(); }

    // Offset of layer `l`'s weight block; biases follow at
    // weight_offset(l) + fan_in*fan_out.
    std::size_t weight_offset(std::size_t layer) const;

    bool same_layout(const ParamVector& other) const { return layout == other.layout; }
};

using GradVector = ParamVector;

// Throws LayoutError unless both vectors share a layout.
void require_same_layout(const ParamVector& a, const ParamVector& b, const std::string& op);

// Element-wise arithmetic over layout-compatible vectors.
ParamVector add(const ParamVector& a, const ParamVector& b);
ParamVector scale(const ParamVector& a, double factor);
void add_scaled_in_place(ParamVector& dst, const ParamVector& src, double factor);

// Checkpoint format: layout header (layer count, then per-layer
// fan_in/fan_out as unsigned 32-bit), then the values as 64-bit floats.
// Everything little-endian.
std::vector<std::uint8_t> serialize(const ParamVector& params);
ParamVector deserialize(const std::vector<std::uint8_t>& bytes);
void save_params(const ParamVector& params, const std::string& path);
ParamVector load_params(const std::string& path);

}  // namespace fedsim::nn
