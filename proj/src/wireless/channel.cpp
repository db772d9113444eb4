#include "fedsim/wireless/channel.hpp"

#include <cmath>

#include "fedsim/errors.hpp"

namespace fedsim::wireless {

void ChannelConfig::validate() const {
    if (!(transmit_power > 0.0)) throw InputError("channel: transmit_power must be > 0");
    if (!(path_loss_exponent > 0.0)) throw InputError("channel: path_loss_exponent must be > 0");
    if (!(noise_variance > 0.0)) throw InputError("channel: noise_variance must be > 0");
    if (!(snr_threshold > 0.0)) throw InputError("channel: snr_threshold must be > 0");
    if (subchannels < 1) throw InputError("channel: subchannels must be >= 1");
}

void DevicePlacement::validate() const {
    if (!(distance > 0.0)) throw InputError("placement: distance must be > 0");
    for (double d : interferer_distances) {
        if (!(d > 0.0)) throw InputError("placement: interferer distance must be > 0");
    }
}

double snr(const ChannelConfig& config, const DevicePlacement& placement, double gain,
           std::span<const double> interferer_gains) {
    placement.validate();
    if (interferer_gains.size() != placement.interferer_distances.size()) {
        throw InputError("snr: interferer gain/distance count mismatch");
    }
    const double beta = config.path_loss_exponent;
    double signal = config.transmit_power * gain * std::pow(placement.distance, -beta);
    double denom = config.noise_variance;
    for (std::size_t i = 0; i < interferer_gains.size(); ++i) {
        denom += config.transmit_power * interferer_gains[i] *
                 std::pow(placement.interferer_distances[i], -beta);
    }
    return signal / denom;
}

namespace {

double draw_gain(const ChannelConfig& config, Rng& rng) {
    // Rayleigh small-scale fading: power gain exponential with mean 1.
    return config.fading == Fading::rayleigh ? rng.exponential() : 1.0;
}

}  // namespace

double update_success_prob(const ChannelConfig& config, const DevicePlacement& placement,
                           const ScheduleSampler& scheduled_sampler, std::size_t num_trials,
                           std::uint64_t seed) {
    if (num_trials < 1) throw InputError("update_success_prob: num_trials must be >= 1");
    config.validate();
    Rng rng(mix_seed(seed, 0x75737063));
    std::vector<double> igains(placement.interferer_distances.size());
    std::size_t successes = 0;
    for (std::size_t trial = 0; trial < num_trials; ++trial) {
        double h = draw_gain(config, rng);
        for (auto& g : igains) g = draw_gain(config, rng);
        double gamma = snr(config, placement, h, igains);
        if (scheduled_sampler(gamma, rng) && gamma > config.snr_threshold) {
            ++successes;
        }
    }
    return static_cast<double>(successes) / static_cast<double>(num_trials);
}

Channel::Channel(ChannelConfig config, std::vector<DevicePlacement> placements)
    : config_(std::move(config)), placements_(std::move(placements)) {
    config_.validate();
    for (const auto& p : placements_) p.validate();
    rho_inst_.assign(placements_.size(), 0.0);
    rho_avg_.assign(placements_.size(), 0.0);
}

std::vector<ChannelDraw> Channel::draw_round(int round) {
    std::vector<ChannelDraw> draws;
    draws.reserve(placements_.size());
    for (std::size_t k = 0; k < placements_.size(); ++k) {
        // Independent stream per (seed, round, device): replaying a round
        // reproduces its draws exactly.
        Rng rng(mix_seed(config_.seed, static_cast<std::uint64_t>(round),
                         placements_[k].device_id));
        ChannelDraw d;
        d.device_id = placements_[k].device_id;
        d.round = round;
        d.gain = draw_gain(config_, rng);
        d.interferer_gains.resize(placements_[k].interferer_distances.size());
        for (auto& g : d.interferer_gains) g = draw_gain(config_, rng);
        d.snr = snr(config_, placements_[k], d.gain, d.interferer_gains);

        rho_inst_[k] = d.snr;
        rho_avg_[k] = has_history_ ? kEmaDecay * rho_avg_[k] + (1.0 - kEmaDecay) * d.snr : d.snr;
        draws.push_back(std::move(d));
    }
    has_history_ = true;
    return draws;
}

std::vector<DevicePlacement> default_placements(std::size_t num_devices, std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x706c6163));
    std::vector<DevicePlacement> out(num_devices);
    for (std::size_t k = 0; k < num_devices; ++k) {
        out[k].device_id = k;
        out[k].distance = rng.uniform(10.0, 100.0);
    }
    return out;
}

}  // namespace fedsim::wireless
