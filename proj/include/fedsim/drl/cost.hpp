#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace fedsim::drl {

// Per-device simulation state feeding the cost model and the selection MDP.
struct DeviceProfile {
    std::size_t device_id = 0;
    double data_volume = 1.0;        // samples held locally
    double compute = 1.0;            // available CPU cycles per second
    double uplink_rate = 1.0;        // bits per second
    double upload_bits = 1.0;        // model upload size in bits
    double local_loss = 0.0;         // last observed local loss of the aggregated model
    double cycles_per_sample = 1.0;  // CPU cycles to train one sample

    void validate() const;

    // Local training time: data_volume * cycles_per_sample / compute.
    double train_time() const { return data_volume * cycles_per_sample / compute; }
    // Upload time: upload_bits / uplink_rate.
    double comm_time() const { return upload_bits / uplink_rate; }
};

struct CostBreakdown {
    std::vector<double> per_device_train;  // c_l per selected device, in selection order
    std::vector<double> per_device_comm;   // c_c per selected device
    double time_cost = 0.0;                // mean over selected of (c_l + c_c)
    double quality_cost = 0.0;             // sum over selected of local_loss
    double total = 0.0;                    // time_cost + quality_cost, exactly
};

// Mean over the selected devices of local training plus upload time.
double cost_time(std::span<const DeviceProfile> profiles, std::span<const std::size_t> selected,
                 std::vector<double>* per_device_train = nullptr,
                 std::vector<double>* per_device_comm = nullptr);

// Sum of the per-device losses over the selected set.
double cost_quality(std::span<const double> local_losses, std::span<const std::size_t> selected);

// Full per-round breakdown; quality uses the profiles' local_loss fields.
CostBreakdown round_cost(std::span<const DeviceProfile> profiles,
                         std::span<const std::size_t> selected);

// r = -(sum_i a_i*(c_l+c_c) + sum_i a_i*sigma_i) / sum_i a_i over the binary
// selection vector; always <= 0. Selecting zero devices is an error.
double selection_reward(std::span<const DeviceProfile> profiles,
                        std::span<const std::uint8_t> selection);

}  // namespace fedsim::drl
