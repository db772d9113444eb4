#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedsim/drl/cost.hpp"

namespace fedsim::drl {

constexpr std::size_t kFeaturesPerDevice = 5;

// Flattened MDP state: per device (data volume, compute, uplink rate)
// normalized by the maximum over devices, then the raw local loss and the
// previous-round selection flag.
std::vector<double> build_state(std::span<const DeviceProfile> profiles,
                                std::span<const std::uint8_t> prev_selected);

// Indices of the n largest scores, ties to the lower id; returned ascending.
std::vector<std::size_t> top_n_indices(std::span<const double> scores, std::size_t n);

// The actor's continuous score vector and its discretized execution.
struct SelectionAction {
    std::vector<double> raw;             // in [0,1]^K
    std::vector<std::uint8_t> realized;  // exactly n ones at the top-n raw scores
};

SelectionAction realize_action(std::vector<double> raw, std::size_t n);

struct Transition {
    std::vector<double> state;
    std::vector<double> action_raw;
    double reward = 0.0;
    std::vector<double> next_state;
};

}  // namespace fedsim::drl
