#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fedsim/rng.hpp"

namespace fedsim::wireless {

enum class Fading { none, rayleigh };

// Defaults describe a clean uplink: at the default 10-100 m placements
// every transmission clears the decode threshold. Raise the noise or the
// threshold (or turn on fading) to make the channel bite.
struct ChannelConfig {
    double transmit_power = 1.0;     // P_ut, watts
    double path_loss_exponent = 2.0; // link loss exponent, dimensionless
    double noise_variance = 1e-9;    // watts
    Fading fading = Fading::none;
    std::size_t subchannels = 1;
    double snr_threshold = 1e-6;     // decode threshold on the SNR
    std::uint64_t seed = 0;

    void validate() const;
};

struct DevicePlacement {
    std::size_t device_id = 0;
    double distance = 1.0;                     // meters, > 0
    std::vector<double> interferer_distances;  // co-channel interferers, > 0 each

    void validate() const;
};

// One device's channel realization for a round. With fading none the gain
// is exactly 1.
struct ChannelDraw {
    std::size_t device_id = 0;
    double gain = 1.0;
    std::vector<double> interferer_gains;
    double snr = 0.0;
    int round = 0;
};

// Received SNR: P*h*d^-beta / (sum of interferer powers + noise variance).
double snr(const ChannelConfig& config, const DevicePlacement& placement, double gain,
           std::span<const double> interferer_gains);

// Monte-Carlo estimate of P(snr > threshold AND scheduled). Fading and the
// scheduling indicator are sampled jointly per trial — the sampler sees the
// trial's realized SNR, so SNR-coupled schedulers (proportional fairness)
// are estimated without a factorization assumption.
using ScheduleSampler = std::function<bool(double snr, Rng& rng)>;
double update_success_prob(const ChannelConfig& config, const DevicePlacement& placement,
                           const ScheduleSampler& scheduled_sampler, std::size_t num_trials,
                           std::uint64_t seed);

// Per-round channel state: draws fading for every device (deterministic in
// (seed, round)) and maintains each device's time-average SNR as an
// exponential moving average with decay 0.9.
class Channel {
public:
    Channel(ChannelConfig config, std::vector<DevicePlacement> placements);

    std::vector<ChannelDraw> draw_round(int round);

    std::span<const double> snr_inst() const { return rho_inst_; }
    std::span<const double> snr_avg() const { return rho_avg_; }
    const ChannelConfig& config() const { return config_; }
    const std::vector<DevicePlacement>& placements() const { return placements_; }
    std::size_t num_devices() const { return placements_.size(); }

private:
    ChannelConfig config_;
    std::vector<DevicePlacement> placements_;
    std::vector<double> rho_inst_;
    std::vector<double> rho_avg_;
    bool has_history_ = false;

    static constexpr double kEmaDecay = 0.9;
};

// Default placement generator: distances uniform in [10, 100] meters, no
// interferers, from the channel seed.
std::vector<DevicePlacement> default_placements(std::size_t num_devices, std::uint64_t seed);

}  // namespace fedsim::wireless
