#pragma once

#include <deque>
#include <span>

#include "fedsim/drl/cost.hpp"
#include "fedsim/fed/core.hpp"
#include "fedsim/sched/scheduler.hpp"
#include "fedsim/wireless/channel.hpp"

namespace fedsim::fed {

// Everything fixed for the lifetime of one experiment.
struct RunSetup {
    nn::MlpSpec model;
    FlConfig fl;
    AggregationRule rule;
    const data::Dataset* train = nullptr;
    const data::Dataset* test = nullptr;
    std::vector<data::ClientDataset> clients;
    std::vector<drl::DeviceProfile> profiles;  // one per client
    double bandwidth_hz = 1e6;                 // per-subchannel bandwidth for the uplink rate
    std::size_t workers = 1;
};

struct RoundOutcome {
    int round = 0;
    std::vector<std::size_t> selected;
    std::vector<std::size_t> uploaded;  // selected devices whose upload decoded
    bool no_aggregation = false;        // every upload failed; model unchanged
    double test_accuracy = 0.0;
    double test_loss = 0.0;
    double time_cost = 0.0;
    double quality_cost = 0.0;
    double total_cost = 0.0;
    double reward = 0.0;
};

enum class StopReason { none, target_accuracy, converged, max_rounds };

const char* to_string(StopReason reason);

// Owns the global model and the per-device simulation state, and advances
// one communication round at a time: draw channel, schedule, train the
// selected clients (optionally on a worker pool), drop failed uploads,
// aggregate, evaluate, cost the round, and feed the scheduler back.
class FederatedRun {
public:
    FederatedRun(RunSetup setup, wireless::Channel channel, nn::ParamVector initial_params);

    RoundOutcome run_round(sched::Scheduler& scheduler);

    // First stop condition hit so far: target accuracy, convergence
    // (10 consecutive loss changes below 1e-6), or the round budget.
    StopReason stop_reason() const { return stop_; }

    int rounds_completed() const { return round_; }
    const nn::ParamVector& global_params() const { return global_; }
    std::span<const drl::DeviceProfile> profiles() const { return setup_.profiles; }
    const wireless::Channel& channel() const { return channel_; }

private:
    RunSetup setup_;
    wireless::Channel channel_;
    nn::ParamVector global_;
    int round_ = 0;
    std::vector<std::uint8_t> prev_selected_;
    std::deque<double> loss_window_;
    StopReason stop_ = StopReason::none;
    bool warned_gradient_step_ = false;

    std::vector<ClientUpdateResult> update_clients(const std::vector<std::size_t>& selected);
};

}  // namespace fedsim::fed
