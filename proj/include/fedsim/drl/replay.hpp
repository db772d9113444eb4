#pragma once

#include <deque>

#include "fedsim/drl/mdp.hpp"
#include "fedsim/rng.hpp"

namespace fedsim::drl {

// FIFO experience buffer: pushing past capacity evicts the oldest entry.
class ReplayMemory {
public:
    explicit ReplayMemory(std::size_t capacity);

    void push(Transition t);

    std::size_t size() const { return buffer_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t i) const { return buffer_[i]; }

    // batch distinct slot indices, uniform without replacement.
    std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const;

private:
    std::size_t capacity_;
    std::deque<Transition> buffer_;
};

}  // namespace fedsim::drl
