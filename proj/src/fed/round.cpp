#include "fedsim/fed/round.hpp"

#include <cmath>
#include <iostream>
#include <thread>

#include "fedsim/drl/mdp.hpp"
#include "fedsim/errors.hpp"

namespace fedsim::fed {

const char* to_string(StopReason reason) {
    switch (reason) {
        case StopReason::none: return "none";
        case StopReason::target_accuracy: return "target_accuracy";
        case StopReason::converged: return "converged";
        case StopReason::max_rounds: return "max_rounds";
    }
    return "none";
}

FederatedRun::FederatedRun(RunSetup setup, wireless::Channel channel,
                           nn::ParamVector initial_params)
    : setup_(std::move(setup)), channel_(std::move(channel)), global_(std::move(initial_params)) {
    setup_.fl.validate();
    setup_.model.validate();
    if (!setup_.train || !setup_.test) throw InputError("FederatedRun: missing dataset");
    if (setup_.clients.size() != setup_.fl.num_clients) {
        throw InputError("FederatedRun: client partition size does not match num_clients");
    }
    if (setup_.profiles.size() != setup_.fl.num_clients) {
        throw InputError("FederatedRun: profile count does not match num_clients");
    }
    if (channel_.num_devices() != setup_.fl.num_clients) {
        throw InputError("FederatedRun: channel device count does not match num_clients");
    }
    if (global_.layout != setup_.model.layout()) {
        throw LayoutError("FederatedRun: initial parameters do not match the model");
    }
    prev_selected_.assign(setup_.fl.num_clients, 0);
}

std::vector<ClientUpdateResult> FederatedRun::update_clients(
    const std::vector<std::size_t>& selected) {
    std::vector<ClientUpdateResult> results(selected.size());
    auto work = [&](std::size_t slot) {
        std::size_t id = selected[slot];
        results[slot] = client_update(
            setup_.model, global_, *setup_.train, setup_.clients[id], setup_.fl.local_epochs,
            setup_.fl.batch_size, setup_.fl.learning_rate,
            mix_seed(setup_.fl.seed, static_cast<std::uint64_t>(round_), id));
    };

    const std::size_t workers = std::min<std::size_t>(std::max<std::size_t>(setup_.workers, 1),
                                                      selected.size());
    if (workers <= 1) {
        for (std::size_t slot = 0; slot < selected.size(); ++slot) work(slot);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t slot = w; slot < selected.size(); slot += workers) work(slot);
            });
        }
        for (auto& th : pool) th.join();
    }
    return results;
}

RoundOutcome FederatedRun::run_round(sched::Scheduler& scheduler) {
    if (stop_ != StopReason::none) throw InputError("run_round: experiment already stopped");
    const std::size_t num_clients = setup_.fl.num_clients;

    if (setup_.rule.kind == AggregationKind::gradient_step && !warned_gradient_step_ &&
        (setup_.fl.local_epochs != 1 || setup_.fl.batch_size != kFullBatch)) {
        std::cerr << "warning: gradient_step aggregation with E != 1 or B != full batch uses a "
                     "pseudo-gradient reconstruction\n";
        warned_gradient_step_ = true;
    }

    // Channel first: schedulers and the cost model see this round's rates.
    auto draws = channel_.draw_round(round_);
    for (std::size_t k = 0; k < num_clients; ++k) {
        setup_.profiles[k].uplink_rate =
            setup_.bandwidth_hz * std::log2(1.0 + draws[k].snr);
    }

    std::vector<double> env_state = drl::build_state(setup_.profiles, prev_selected_);

    sched::RoundContext ctx;
    ctx.round = round_;
    ctx.num_to_select = selection_count(setup_.fl.client_fraction, num_clients);
    ctx.num_devices = num_clients;
    ctx.snr_inst = channel_.snr_inst();
    ctx.snr_avg = channel_.snr_avg();
    ctx.env_state = env_state;

    sched::ScheduleDecision decision = scheduler.decide(ctx);
    if (decision.selected.empty()) throw InputError("run_round: scheduler selected no devices");

    RoundOutcome outcome;
    outcome.round = round_;
    outcome.selected = decision.selected;

    std::vector<ClientUpdateResult> results = update_clients(decision.selected);
    for (std::size_t slot = 0; slot < results.size(); ++slot) {
        results[slot].sim_train_seconds =
            setup_.profiles[decision.selected[slot]].train_time();
    }

    // Uplink: an update survives when this round's SNR clears the decode
    // threshold (the realized event behind the success probability).
    std::vector<ClientUpdateResult> delivered;
    for (std::size_t slot = 0; slot < decision.selected.size(); ++slot) {
        std::size_t id = decision.selected[slot];
        if (draws[id].snr > channel_.config().snr_threshold) {
            outcome.uploaded.push_back(id);
            delivered.push_back(std::move(results[slot]));
        }
    }

    if (delivered.empty()) {
        outcome.no_aggregation = true;
    } else {
        global_ = aggregate(setup_.rule, global_, delivered);
    }

    EvalResult eval = evaluate(setup_.model, global_, *setup_.test);
    outcome.test_accuracy = eval.accuracy;
    outcome.test_loss = eval.mean_loss;

    // Quality of the freshly aggregated model on each selected device's data.
    for (std::size_t id : decision.selected) {
        setup_.profiles[id].local_loss =
            local_loss(setup_.model, global_, *setup_.train, setup_.clients[id].indices);
    }

    drl::CostBreakdown costs = drl::round_cost(setup_.profiles, decision.selected);
    outcome.time_cost = costs.time_cost;
    outcome.quality_cost = costs.quality_cost;
    outcome.total_cost = costs.total;

    auto selected_flags = sched::indicators(decision, num_clients);
    outcome.reward = drl::selection_reward(setup_.profiles, selected_flags);

    prev_selected_ = selected_flags;

    sched::RoundFeedback feedback;
    feedback.round = round_;
    feedback.selected = decision.selected;
    feedback.reward = outcome.reward;
    feedback.next_state = drl::build_state(setup_.profiles, prev_selected_);
    scheduler.observe_round(feedback);

    ++round_;

    loss_window_.push_back(eval.mean_loss);
    if (loss_window_.size() > 11) loss_window_.pop_front();
    bool converged = loss_window_.size() == 11;
    if (converged) {
        for (std::size_t i = 1; i < loss_window_.size(); ++i) {
            if (std::abs(loss_window_[i] - loss_window_[i - 1]) >= 1e-6) {
                converged = false;
                break;
            }
        }
    }

    if (setup_.fl.target_accuracy > 0.0 && eval.accuracy >= setup_.fl.target_accuracy) {
        stop_ = StopReason::target_accuracy;
    } else if (converged) {
        stop_ = StopReason::converged;
    } else if (static_cast<std::size_t>(round_) >= setup_.fl.max_rounds) {
        stop_ = StopReason::max_rounds;
    }
    return outcome;
}

}  // namespace fedsim::fed
