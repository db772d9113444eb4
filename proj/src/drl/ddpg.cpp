#include "fedsim/drl/ddpg.hpp"

#include <algorithm>
#include <cmath>

#include "fedsim/errors.hpp"

namespace fedsim::drl {

void DdpgConfig::validate() const {
    if (num_devices < 1) throw InputError("ddpg: num_devices must be >= 1");
    if (hidden.empty()) throw InputError("ddpg: need at least one hidden layer");
    if (!(discount >= 0.0 && discount < 1.0)) throw InputError("ddpg: discount must be in [0,1)");
    if (!(soft_update_tau >= 0.0 && soft_update_tau <= 1.0)) {
        throw InputError("ddpg: soft_update_tau must be in [0,1]");
    }
    if (!(actor_lr >= 0.0) || !(critic_lr >= 0.0)) {
        throw InputError("ddpg: learning rates must be >= 0");
    }
    if (noise_scale < 0.0) throw InputError("ddpg: noise_scale must be >= 0");
    if (!(noise_decay > 0.0 && noise_decay <= 1.0)) {
        throw InputError("ddpg: noise_decay must be in (0,1]");
    }
    if (replay_capacity < 1 || batch_size < 1) {
        throw InputError("ddpg: replay_capacity and batch_size must be >= 1");
    }
}

nn::ParamVector soft_update(const nn::ParamVector& online, const nn::ParamVector& target,
                            double tau) {
    nn::require_same_layout(online, target, "soft_update");
    if (!(tau >= 0.0 && tau <= 1.0)) throw InputError("soft_update: tau must be in [0,1]");
    nn::ParamVector out = target;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = tau * online.values[i] + (1.0 - tau) * target.values[i];
    }
    return out;
}

namespace {

nn::MlpSpec make_mlp(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
    nn::MlpSpec spec;
    spec.layer_sizes.push_back(in);
    spec.layer_sizes.insert(spec.layer_sizes.end(), hidden.begin(), hidden.end());
    spec.layer_sizes.push_back(out);
    spec.activation = nn::Activation::relu;
    spec.output_head = nn::OutputHead::linear;
    return spec;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

DdpgAgent::DdpgAgent(DdpgConfig config)
    : config_(std::move(config)),
      actor_spec_(make_mlp(config_.num_devices * kFeaturesPerDevice, config_.hidden,
                           config_.num_devices)),
      critic_spec_(make_mlp(config_.num_devices * kFeaturesPerDevice + config_.num_devices,
                            config_.hidden, 1)),
      actor_(nn::init_params(actor_spec_, mix_seed(config_.seed, 0x6163746f))),
      critic_(nn::init_params(critic_spec_, mix_seed(config_.seed, 0x63726974))),
      actor_target_(actor_),
      critic_target_(critic_),
      rng_(mix_seed(config_.seed, 0x64647067)),
      noise_scale_(config_.noise_scale) {
    config_.validate();
}

std::vector<double> DdpgAgent::policy(std::span<const double> state) const {
    std::vector<double> out = nn::forward(actor_spec_, actor_, state);
    for (auto& v : out) v = sigmoid(v);
    return out;
}

double DdpgAgent::critic_value(std::span<const double> state,
                               std::span<const double> action) const {
    std::vector<double> input(state.begin(), state.end());
    input.insert(input.end(), action.begin(), action.end());
    return nn::forward(critic_spec_, critic_, input)[0];
}

SelectionAction DdpgAgent::act(std::span<const double> state, std::size_t n,
                               double noise_scale) {
    if (n > config_.num_devices) throw InputError("act: n exceeds device count");
    std::vector<double> raw = policy(state);
    if (noise_scale > 0.0) {
        for (auto& v : raw) {
            v = std::clamp(v + rng_.normal(0.0, noise_scale), 0.0, 1.0);
        }
    }
    return realize_action(std::move(raw), n);
}

nn::GradVector DdpgAgent::actor_value_gradient(const ReplayMemory& memory,
                                               const std::vector<std::size_t>& ids,
                                               double* mean_q) const {
    const std::size_t state_dim = actor_spec_.input_dim();
    const std::size_t action_dim = config_.num_devices;
    nn::GradVector grad{actor_spec_.layout()};
    double q_sum = 0.0;

    std::vector<double> critic_in(state_dim + action_dim);
    std::vector<double> critic_in_grad(state_dim + action_dim);
    std::vector<double> action_grad(action_dim);
    const double one = 1.0;

    for (std::size_t id : ids) {
        const Transition& tr = memory.at(id);
        nn::Trace actor_trace = nn::forward_trace(actor_spec_, actor_, tr.state);
        std::copy(tr.state.begin(), tr.state.end(), critic_in.begin());
        for (std::size_t j = 0; j < action_dim; ++j) {
            critic_in[state_dim + j] = sigmoid(actor_trace.output[j]);
        }
        nn::Trace critic_trace = nn::forward_trace(critic_spec_, critic_, critic_in);
        q_sum += critic_trace.output[0];

        // dQ/d(critic input), then keep the action block and chain through
        // the sigmoid squash into the actor's affine output.
        std::fill(critic_in_grad.begin(), critic_in_grad.end(), 0.0);
        nn::GradVector critic_scratch{critic_spec_.layout()};
        nn::backprop_sample(critic_spec_, critic_, critic_in, critic_trace, {&one, 1},
                            critic_scratch, &critic_in_grad);
        for (std::size_t j = 0; j < action_dim; ++j) {
            double a = critic_in[state_dim + j];
            action_grad[j] = critic_in_grad[state_dim + j] * a * (1.0 - a);
        }
        nn::backprop_sample(actor_spec_, actor_, tr.state, actor_trace, action_grad, grad);
    }

    const double inv = 1.0 / static_cast<double>(ids.size());
    for (auto& g : grad.values) g *= inv;
    if (mean_q) *mean_q = q_sum * inv;
    return grad;
}

TrainStepResult DdpgAgent::train_step(ReplayMemory& memory, std::size_t batch_size) {
    if (memory.size() < batch_size) return {.skipped = true};

    std::vector<std::size_t> ids = memory.sample_indices(batch_size, rng_);
    const std::size_t state_dim = actor_spec_.input_dim();
    const std::size_t action_dim = config_.num_devices;

    // Critic: squared TD error against the frozen target pair.
    nn::GradVector critic_grad{critic_spec_.layout()};
    double critic_loss = 0.0;
    std::vector<double> critic_in(state_dim + action_dim);
    for (std::size_t id : ids) {
        const Transition& tr = memory.at(id);

        std::vector<double> next_action = nn::forward(actor_spec_, actor_target_, tr.next_state);
        for (auto& v : next_action) v = sigmoid(v);
        std::copy(tr.next_state.begin(), tr.next_state.end(), critic_in.begin());
        std::copy(next_action.begin(), next_action.end(), critic_in.begin() + state_dim);
        double target_q = nn::forward(critic_spec_, critic_target_, critic_in)[0];
        double y = tr.reward + config_.discount * target_q;

        std::copy(tr.state.begin(), tr.state.end(), critic_in.begin());
        std::copy(tr.action_raw.begin(), tr.action_raw.end(), critic_in.begin() + state_dim);
        nn::Trace trace = nn::forward_trace(critic_spec_, critic_, critic_in);
        double td = trace.output[0] - y;
        critic_loss += 0.5 * td * td;
        nn::backprop_sample(critic_spec_, critic_, critic_in, trace, {&td, 1}, critic_grad);
    }
    const double inv = 1.0 / static_cast<double>(batch_size);
    for (auto& g : critic_grad.values) g *= inv;
    critic_loss *= inv;
    if (config_.critic_lr > 0.0) {
        critic_ = nn::sgd_step(critic_, critic_grad, config_.critic_lr);
    }

    // Actor: ascend Q(s, pi(s)) through the updated critic.
    double mean_q = 0.0;
    nn::GradVector actor_grad = actor_value_gradient(memory, ids, &mean_q);
    if (config_.actor_lr > 0.0) {
        for (auto& g : actor_grad.values) g = -g;  // ascent
        actor_ = nn::sgd_step(actor_, actor_grad, config_.actor_lr);
    }

    return {.skipped = false, .critic_loss = critic_loss, .actor_value = mean_q};
}

void DdpgAgent::update_targets() {
    actor_target_ = soft_update(actor_, actor_target_, config_.soft_update_tau);
    critic_target_ = soft_update(critic_, critic_target_, config_.soft_update_tau);
}

void DdpgAgent::set_actor_params(nn::ParamVector p) {
    nn::require_same_layout(p, actor_, "set_actor_params");
    actor_ = std::move(p);
}

void DdpgAgent::set_critic_params(nn::ParamVector p) {
    nn::require_same_layout(p, critic_, "set_critic_params");
    critic_ = std::move(p);
}

void DdpgAgent::save(const std::string& prefix) const {
    nn::save_params(actor_, prefix + "_actor.params");
    nn::save_params(critic_, prefix + "_critic.params");
    nn::save_params(actor_target_, prefix + "_actor_target.params");
    nn::save_params(critic_target_, prefix + "_critic_target.params");
}

void DdpgAgent::load(const std::string& prefix) {
    auto check = [this](nn::ParamVector p, const nn::MlpSpec& spec, const std::string& which) {
        if (p.layout != spec.layout()) {
            throw LayoutError("ddpg load: " + which + " checkpoint layout does not match config");
        }
        return p;
    };
    actor_ = check(nn::load_params(prefix + "_actor.params"), actor_spec_, "actor");
    critic_ = check(nn::load_params(prefix + "_critic.params"), critic_spec_, "critic");
    actor_target_ =
        check(nn::load_params(prefix + "_actor_target.params"), actor_spec_, "actor target");
    critic_target_ =
        check(nn::load_params(prefix + "_critic_target.params"), critic_spec_, "critic target");
}

DdpgScheduler::DdpgScheduler(DdpgConfig config)
    : agent_(std::move(config)), memory_(agent_.config().replay_capacity) {}

sched::ScheduleDecision DdpgScheduler::decide(const sched::RoundContext& ctx) {
    if (ctx.env_state.size() != agent_.config().num_devices * kFeaturesPerDevice) {
        throw InputError("ddpg decide: env_state length does not match device count");
    }
    double noise = training_ ? agent_.noise_scale() : 0.0;
    SelectionAction action = agent_.act(ctx.env_state, ctx.num_to_select, noise);

    sched::ScheduleDecision decision;
    decision.round = ctx.round;
    for (std::size_t i = 0; i < action.realized.size(); ++i) {
        if (action.realized[i]) decision.selected.push_back(i);
    }
    pending_ = {{std::vector<double>(ctx.env_state.begin(), ctx.env_state.end()),
                 std::move(action.raw)}};
    return decision;
}

void DdpgScheduler::observe_round(const sched::RoundFeedback& feedback) {
    if (!pending_) return;
    Transition tr;
    tr.state = std::move(pending_->first);
    tr.action_raw = std::move(pending_->second);
    tr.reward = feedback.reward;
    tr.next_state = feedback.next_state;
    memory_.push(std::move(tr));
    pending_.reset();

    if (training_) {
        TrainStepResult r = agent_.train_step(memory_, agent_.config().batch_size);
        if (!r.skipped) agent_.update_targets();
    }
}

void DdpgScheduler::end_episode() { agent_.decay_noise(); }

}  // namespace fedsim::drl
