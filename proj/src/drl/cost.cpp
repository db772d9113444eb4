#include "fedsim/drl/cost.hpp"

#include <string>

#include "fedsim/errors.hpp"

namespace fedsim::drl {

void DeviceProfile::validate() const {
    if (!(data_volume > 0.0) || !(compute > 0.0) || !(uplink_rate > 0.0) ||
        !(upload_bits > 0.0) || !(cycles_per_sample > 0.0)) {
        throw InputError("DeviceProfile " + std::to_string(device_id) +
                         ": all rate/size fields must be > 0");
    }
    if (local_loss < 0.0) {
        throw InputError("DeviceProfile " + std::to_string(device_id) +
                         ": local_loss must be >= 0");
    }
}

double cost_time(std::span<const DeviceProfile> profiles, std::span<const std::size_t> selected,
                 std::vector<double>* per_device_train, std::vector<double>* per_device_comm) {
    if (selected.empty()) throw InputError("cost_time: empty selection");
    if (per_device_train) per_device_train->clear();
    if (per_device_comm) per_device_comm->clear();
    double sum = 0.0;
    for (std::size_t id : selected) {
        if (id >= profiles.size()) throw InputError("cost_time: device id out of range");
        const DeviceProfile& p = profiles[id];
        double c_l = p.train_time();
        double c_c = p.comm_time();
        if (per_device_train) per_device_train->push_back(c_l);
        if (per_device_comm) per_device_comm->push_back(c_c);
        sum += c_l + c_c;
    }
    return sum / static_cast<double>(selected.size());
}

double cost_quality(std::span<const double> local_losses, std::span<const std::size_t> selected) {
    double sum = 0.0;
    for (std::size_t id : selected) {
        if (id >= local_losses.size()) throw InputError("cost_quality: device id out of range");
        sum += local_losses[id];
    }
    return sum;
}

CostBreakdown round_cost(std::span<const DeviceProfile> profiles,
                         std::span<const std::size_t> selected) {
    CostBreakdown out;
    out.time_cost = cost_time(profiles, selected, &out.per_device_train, &out.per_device_comm);
    double quality = 0.0;
    for (std::size_t id : selected) quality += profiles[id].local_loss;
    out.quality_cost = quality;
    out.total = out.time_cost + out.quality_cost;
    return out;
}

double selection_reward(std::span<const DeviceProfile> profiles,
                        std::span<const std::uint8_t> selection) {
    if (selection.size() != profiles.size()) {
        throw InputError("selection_reward: selection length does not match device count");
    }
    double time_sum = 0.0;
    double loss_sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < selection.size(); ++i) {
        if (!selection[i]) continue;
        time_sum += profiles[i].train_time() + profiles[i].comm_time();
        loss_sum += profiles[i].local_loss;
        ++count;
    }
    if (count == 0) {
        throw InputError("selection_reward: reward undefined for an empty selection");
    }
    return -(time_sum + loss_sum) / static_cast<double>(count);
}

}  // namespace fedsim::drl
