#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "fedsim/drl/mdp.hpp"
#include "fedsim/drl/replay.hpp"
#include "fedsim/nn/mlp.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/sched/scheduler.hpp"

namespace fedsim::drl {

struct DdpgConfig {
    std::size_t num_devices = 0;           // K; state dim is 5K, action dim K
    std::vector<std::size_t> hidden{64, 64};
    double discount = 0.95;
    double soft_update_tau = 0.01;
    double actor_lr = 1e-3;
    double critic_lr = 1e-3;
    double noise_scale = 0.1;              // initial exploration noise
    double noise_decay = 0.995;            // per-episode multiplier
    std::size_t replay_capacity = 10000;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;

    void validate() const;
};

// target' = tau*online + (1-tau)*target, element-wise.
nn::ParamVector soft_update(const nn::ParamVector& online, const nn::ParamVector& target,
                            double tau);

struct TrainStepResult {
    bool skipped = false;      // not enough stored experience
    double critic_loss = 0.0;  // mean 0.5*(Q - y)^2 over the batch
    double actor_value = 0.0;  // mean Q(s, pi(s)) before the actor step
};

// Actor-critic pair with target copies. The actor maps the state to K
// sigmoid scores; the critic scores (state, raw action) pairs. Execution
// discretizes the continuous scores to a top-n selection while the critic
// is trained on the raw action.
class DdpgAgent {
public:
    explicit DdpgAgent(DdpgConfig config);

    // raw = clamp(pi(s) + Gaussian noise, 0, 1); realized = top-n of raw.
    SelectionAction act(std::span<const double> state, std::size_t n, double noise_scale);

    // Deterministic policy output sigmoid(actor(s)), no noise.
    std::vector<double> policy(std::span<const double> state) const;
    double critic_value(std::span<const double> state, std::span<const double> action) const;

    // One critic SGD step on the TD target r + discount*Q_tar(s', pi_tar(s'))
    // followed by one actor ascent step on Q(s, pi(s)).
    TrainStepResult train_step(ReplayMemory& memory, std::size_t batch_size);

    void update_targets();  // soft update with the configured tau
    void decay_noise() { noise_scale_ *= config_.noise_decay; }

    const DdpgConfig& config() const { return config_; }
    double noise_scale() const { return noise_scale_; }
    const nn::MlpSpec& actor_spec() const { return actor_spec_; }
    const nn::ParamVector& actor_params() const { return actor_; }
    const nn::ParamVector& critic_params() const { return critic_; }
    const nn::ParamVector& actor_target_params() const { return actor_target_; }
    const nn::ParamVector& critic_target_params() const { return critic_target_; }
    void set_actor_params(nn::ParamVector p);
    void set_critic_params(nn::ParamVector p);

    // Checkpoints all four networks under prefix{_actor,_critic,...}.params.
    void save(const std::string& prefix) const;
    void load(const std::string& prefix);

private:
    DdpgConfig config_;
    nn::MlpSpec actor_spec_;
    nn::MlpSpec critic_spec_;
    nn::ParamVector actor_;
    nn::ParamVector critic_;
    nn::ParamVector actor_target_;
    nn::ParamVector critic_target_;
    Rng rng_;
    double noise_scale_;

    // Gradient of Q w.r.t. actor parameters at states `ids`; shared by the
    // training step and the finite-difference test hook.
    friend struct DdpgTestAccess;
    nn::GradVector actor_value_gradient(const ReplayMemory& memory,
                                        const std::vector<std::size_t>& ids,
                                        double* mean_q) const;
};

// Scheduler adapter: decides with the agent's noisy policy, then turns the
// completed round into a stored transition and a training step.
class DdpgScheduler final : public sched::Scheduler {
public:
    explicit DdpgScheduler(DdpgConfig config);

    sched::ScheduleDecision decide(const sched::RoundContext& ctx) override;
    void observe_round(const sched::RoundFeedback& feedback) override;
    std::string name() const override { return "ddpg"; }

    void set_training(bool on) { training_ = on; }
    void end_episode();  // decays exploration noise

    DdpgAgent& agent() { return agent_; }
    const ReplayMemory& memory() const { return memory_; }

private:
    DdpgAgent agent_;
    ReplayMemory memory_;
    bool training_ = true;
    std::optional<std::pair<std::vector<double>, std::vector<double>>> pending_;  // (s_t, a_t raw)
};

}  // namespace fedsim::drl
