#include "fedsim/drl/replay.hpp"

#include <numeric>

#include "fedsim/errors.hpp"

namespace fedsim::drl {

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
    if (capacity < 1) throw InputError("ReplayMemory: capacity must be >= 1");
}

void ReplayMemory::push(Transition t) {
    if (buffer_.size() == capacity_) buffer_.pop_front();
    buffer_.push_back(std::move(t));
}

std::vector<std::size_t> ReplayMemory::sample_indices(std::size_t batch, Rng& rng) const {
    if (batch > buffer_.size()) {
        throw InputError("ReplayMemory: batch larger than stored experience");
    }
    std::vector<std::size_t> ids(buffer_.size());
    std::iota(ids.begin(), ids.end(), 0);
    for (std::size_t i = 0; i < batch; ++i) {
        std::size_t j = i + rng.uniform_index(ids.size() - i);
        std::swap(ids[i], ids[j]);
    }
    ids.resize(batch);
    return ids;
}

}  // namespace fedsim::drl
