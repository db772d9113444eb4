#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fedsim::sched {

// Outcome of one scheduling step: the chosen device ids, sorted ascending
// and distinct.
struct ScheduleDecision {
    int round = 0;
    std::vector<std::size_t> selected;
};

// Per-device selection index S_k in {0,1}: 1 exactly at selected ids.
std::vector<std::uint8_t> indicators(const ScheduleDecision& decision, std::size_t num_devices);

// n distinct ids, uniform over size-n subsets, deterministic in (seed, t).
ScheduleDecision schedule_random(std::size_t num_devices, std::size_t n, std::uint64_t seed,
                                 int round);

// Devices split into `groups` contiguous blocks (sizes differing by at most
// one); round t selects block (t mod groups).
ScheduleDecision schedule_cyclic(std::size_t num_devices, std::size_t groups, int round);

// Top n devices by instantaneous-to-average SNR ratio, ties to lower id.
ScheduleDecision schedule_prop_fair(std::size_t n, std::span<const double> snr_inst,
                                    std::span<const double> snr_avg, int round);

// Everything the round loop knows at selection time. `env_state` carries
// the flattened device features consumed by the learning scheduler; the
// baselines ignore it.
struct RoundContext {
    int round = 0;
    std::size_t num_to_select = 0;
    std::size_t num_devices = 0;
    std::span<const double> snr_inst;
    std::span<const double> snr_avg;
    std::span<const double> env_state;
};

// What the completed round produced, fed back after aggregation. Only the
// learning scheduler uses it.
struct RoundFeedback {
    int round = 0;
    std::vector<std::size_t> selected;
    double reward = 0.0;
    std::vector<double> next_state;
};

class Scheduler {
public:
    virtual ~Scheduler() = default;
    virtual ScheduleDecision decide(const RoundContext& ctx) = 0;
    virtual void observe_round(const RoundFeedback&) {}
    virtual std::string name() const = 0;
};

class RandomScheduler final : public Scheduler {
public:
    explicit RandomScheduler(std::uint64_t seed) : seed_(seed) {}
    ScheduleDecision decide(const RoundContext& ctx) override;
    std::string name() const override { return "random"; }

private:
    std::uint64_t seed_;
};

class CyclicScheduler final : public Scheduler {
public:
    explicit CyclicScheduler(std::size_t groups) : groups_(groups) {}
    ScheduleDecision decide(const RoundContext& ctx) override;
    std::string name() const override { return "cyclic"; }

private:
    std::size_t groups_;
};

class PropFairScheduler final : public Scheduler {
public:
    ScheduleDecision decide(const RoundContext& ctx) override;
    std::string name() const override { return "prop_fair"; }
};

}  // namespace fedsim::sched
