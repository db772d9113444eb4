#include "fedsim/drl/mdp.hpp"

#include <algorithm>
#include <numeric>

#include "fedsim/errors.hpp"

namespace fedsim::drl {

std::vector<double> build_state(std::span<const DeviceProfile> profiles,
                                std::span<const std::uint8_t> prev_selected) {
    if (prev_selected.size() != profiles.size()) {
        throw InputError("build_state: prev_selected length does not match device count");
    }
    double max_data = 0.0, max_compute = 0.0, max_rate = 0.0;
    for (const auto& p : profiles) {
        max_data = std::max(max_data, p.data_volume);
        max_compute = std::max(max_compute, p.compute);
        max_rate = std::max(max_rate, p.uplink_rate);
    }
    auto norm = [](double v, double m) { return m > 0.0 ? v / m : 0.0; };

    std::vector<double> state;
    state.reserve(profiles.size() * kFeaturesPerDevice);
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        state.push_back(norm(profiles[i].data_volume, max_data));
        state.push_back(norm(profiles[i].compute, max_compute));
        state.push_back(norm(profiles[i].uplink_rate, max_rate));
        state.push_back(profiles[i].local_loss);
        state.push_back(prev_selected[i] ? 1.0 : 0.0);
    }
    return state;
}

std::vector<std::size_t> top_n_indices(std::span<const double> scores, std::size_t n) {
    if (n > scores.size()) throw InputError("top_n_indices: n exceeds score count");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    order.resize(n);
    std::sort(order.begin(), order.end());
    return order;
}

SelectionAction realize_action(std::vector<double> raw, std::size_t n) {
    SelectionAction out;
    out.realized.assign(raw.size(), 0);
    for (std::size_t id : top_n_indices(raw, n)) out.realized[id] = 1;
    out.raw = std::move(raw);
    return out;
}

}  // namespace fedsim::drl
