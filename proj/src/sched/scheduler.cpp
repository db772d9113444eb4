#include "fedsim/sched/scheduler.hpp"

#include <algorithm>
#include <numeric>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"

namespace fedsim::sched {

std::vector<std::uint8_t> indicators(const ScheduleDecision& decision, std::size_t num_devices) {
    std::vector<std::uint8_t> out(num_devices, 0);
    for (std::size_t id : decision.selected) {
        if (id >= num_devices) throw InputError("indicators: selected id out of range");
        out[id] = 1;
    }
    return out;
}

ScheduleDecision schedule_random(std::size_t num_devices, std::size_t n, std::uint64_t seed,
                                 int round) {
    if (n < 1 || n > num_devices) {
        throw InputError("schedule_random: need 1 <= n <= num_devices");
    }
    std::vector<std::size_t> ids(num_devices);
    std::iota(ids.begin(), ids.end(), 0);
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(round), 0x72616e64));
    // Partial Fisher-Yates: the first n slots end up a uniform n-subset.
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = i + rng.uniform_index(num_devices - i);
        std::swap(ids[i], ids[j]);
    }
    ScheduleDecision out;
    out.round = round;
    out.selected.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n));
    std::sort(out.selected.begin(), out.selected.end());
    return out;
}

ScheduleDecision schedule_cyclic(std::size_t num_devices, std::size_t groups, int round) {
    if (groups < 1) throw InputError("schedule_cyclic: groups must be >= 1");
    if (groups > num_devices) {
        throw InputError("schedule_cyclic: more groups than devices");
    }
    const std::size_t base = num_devices / groups;
    const std::size_t rem = num_devices % groups;
    const std::size_t g = static_cast<std::size_t>(round) % groups;
    // First `rem` groups carry one extra device.
    const std::size_t begin = g * base + std::min(g, rem);
    const std::size_t size = base + (g < rem ? 1 : 0);

    ScheduleDecision out;
    out.round = round;
    out.selected.resize(size);
    std::iota(out.selected.begin(), out.selected.end(), begin);
    return out;
}

ScheduleDecision schedule_prop_fair(std::size_t n, std::span<const double> snr_inst,
                                    std::span<const double> snr_avg, int round) {
    const std::size_t num_devices = snr_inst.size();
    if (snr_avg.size() != num_devices) {
        throw InputError("schedule_prop_fair: SNR vector length mismatch");
    }
    if (n < 1 || n > num_devices) {
        throw InputError("schedule_prop_fair: need 1 <= n <= device count");
    }
    for (double avg : snr_avg) {
        if (!(avg > 0.0)) throw InputError("schedule_prop_fair: average SNR must be > 0");
    }

    std::vector<std::size_t> order(num_devices);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        double ra = snr_inst[a] / snr_avg[a];
        double rb = snr_inst[b] / snr_avg[b];
        if (ra != rb) return ra > rb;
        return a < b;  // ties to the lower id
    });

    ScheduleDecision out;
    out.round = round;
    out.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
    std::sort(out.selected.begin(), out.selected.end());
    return out;
}

ScheduleDecision RandomScheduler::decide(const RoundContext& ctx) {
    return schedule_random(ctx.num_devices, ctx.num_to_select, seed_, ctx.round);
}

ScheduleDecision CyclicScheduler::decide(const RoundContext& ctx) {
    return schedule_cyclic(ctx.num_devices, groups_, ctx.round);
}

ScheduleDecision PropFairScheduler::decide(const RoundContext& ctx) {
    return schedule_prop_fair(ctx.num_to_select, ctx.snr_inst, ctx.snr_avg, ctx.round);
}

}  // namespace fedsim::sched
